#include "irem/simulate.hpp"

namespace irem {

int thick_axis(Orientation o) {
  switch (o) {
    case Orientation::sagittal: return 0;
    case Orientation::coronal: return 1;
    case Orientation::axial: return 2;
  }
  return 2;
}

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::sagittal: return "sagittal";
    case Orientation::coronal: return "coronal";
    case Orientation::axial: return "axial";
  }
  return "axial";
}

Orientation parse_orientation(std::string_view name) {
  if (name == "axial") return Orientation::axial;
  if (name == "coronal") return Orientation::coronal;
  if (name == "sagittal") return Orientation::sagittal;
  throw ValidationError("unknown orientation '" + std::string(name) + "'");
}

void validate(const SimulationConfig& cfg) {
  if (cfg.factor < 1) throw ValidationError("downsampling factor must be >= 1");
  if (cfg.orientations.empty()) throw ValidationError("at least one orientation is required");
}

Volume downsample_axis(const Volume& hr, int axis, int k) {
  if (axis < 0 || axis > 2) throw ValidationError("axis must be 0, 1 or 2");
  if (k < 1) throw ValidationError("downsampling factor must be >= 1");
  if (hr.dims[axis] % k != 0)
    throw ValidationError("dimension " + std::to_string(hr.dims[axis]) + " along axis " +
                          std::to_string(axis) + " is not divisible by factor " + std::to_string(k));

  Index3 dims = hr.dims;
  dims[axis] /= k;
  Vec3 spacing = hr.spacing;
  spacing[axis] *= k;
  const Vec3 origin =
      hr.origin + hr.direction.col(axis) * (hr.spacing[axis] * (k - 1) / 2.0);
  Volume lr(dims, spacing, origin, hr.direction);

  Index3 src;
  for (int z = 0; z < dims.z(); ++z)
    for (int y = 0; y < dims.y(); ++y)
      for (int x = 0; x < dims.x(); ++x) {
        Index3 dst(x, y, z);
        double sum = 0.0;
        for (int t = 0; t < k; ++t) {
          src = dst;
          src[axis] = dst[axis] * k + t;
          sum += hr.at(src.x(), src.y(), src.z());
        }
        lr.at(x, y, z) = static_cast<float>(sum / k);
      }
  return lr;
}

std::vector<Volume> simulate_stacks(const Volume& hr, const SimulationConfig& cfg) {
  validate(cfg);
  validate(hr);
  std::vector<Volume> stacks;
  stacks.reserve(cfg.orientations.size());
  for (Orientation o : cfg.orientations) stacks.push_back(downsample_axis(hr, thick_axis(o), cfg.factor));
  return stacks;
}

NormalizedStackSet simulate_lr_stacks(const Volume& hr, const SimulationConfig& cfg) {
  std::vector<Volume> stacks = simulate_stacks(hr, cfg);
  std::vector<Rigid> transforms(stacks.size(), Rigid::identity());
  return normalize_intensities(std::move(stacks), std::move(transforms));
}

}  // namespace irem
