#include "irem/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace irem {

Index3 GridSpec::dims() const {
  Index3 d;
  for (int a = 0; a < 3; ++a) {
    const double ratio = (bbox.max()[a] - bbox.min()[a]) / spacing[a];
    // Absorb representation error such as 2.8 / 0.7 = 3.9999999999999996.
    d[a] = static_cast<int>(std::floor(ratio + 1e-9 * std::max(1.0, ratio))) + 1;
  }
  return d;
}

void validate(const GridSpec& spec) {
  if (!spec.bbox.min().allFinite() || !spec.bbox.max().allFinite())
    throw ValidationError("grid bbox must be finite");
  if (!(spec.bbox.max().array() > spec.bbox.min().array()).all())
    throw ValidationError("grid bbox must have max > min on every axis");
  if (!(spec.spacing.array() > 0.0).all() || !spec.spacing.allFinite())
    throw ValidationError("grid spacing must be positive");
}

GridSpec default_grid(const NormalizedStackSet& set) {
  GridSpec spec;
  spec.bbox = bounding_box(set);
  double finest = std::numeric_limits<double>::infinity();
  for (const Volume& s : set.stacks) finest = std::min(finest, s.spacing.minCoeff());
  spec.spacing = Vec3::Constant(finest);
  return spec;
}

Eigen::Matrix3Xd make_dense_grid(const GridSpec& spec) {
  validate(spec);
  const Index3 d = spec.dims();
  Eigen::Matrix3Xd pts(3, std::int64_t{d.x()} * d.y() * d.z());
  Eigen::Index col = 0;
  for (int k = 0; k < d.z(); ++k)
    for (int j = 0; j < d.y(); ++j)
      for (int i = 0; i < d.x(); ++i) {
        const Vec3 p = spec.bbox.min() + Vec3(i, j, k).cwiseProduct(spec.spacing);
        pts.col(col++) = p.cwiseMin(spec.bbox.max());
      }
  return pts;
}

Eigen::ArrayXf predict(const Model& model, const Eigen::Matrix3Xd& world, const ReconstructOptions& opts) {
  if (opts.chunk_size < 1) throw ValidationError("chunk size must be positive");
  const UnitCubeMap map = model.unit_map();
  Eigen::ArrayXf out(world.cols());
  Eigen::Matrix3Xf unit;
  for (Eigen::Index first = 0; first < world.cols(); first += opts.chunk_size) {
    const Eigen::Index count = std::min(opts.chunk_size, world.cols() - first);
    unit.resize(3, count);
    for (Eigen::Index i = 0; i < count; ++i) unit.col(i) = map(world.col(first + i)).cast<float>();
    const MatrixX<float> features = fourier_encode(model.encoder, unit);
    const RowVectorX<float> y = forward_eval(model.network, features);
    out.segment(first, count) = y.transpose().array() * static_cast<float>(model.intensity_scale);
  }
  return out;
}

Volume reconstruct_volume(const Model& model, const GridSpec& spec, const ReconstructOptions& opts) {
  const Eigen::Matrix3Xd grid = make_dense_grid(spec);
  Volume v(spec.dims(), spec.spacing, spec.bbox.min());
  v.data = predict(model, grid, opts);
  return v;
}

Volume reconstruct_volume(const FourierEncoder<float>& encoder, const Model& model, const GridSpec& spec,
                          const ReconstructOptions& opts) {
  if (encoder.seed != model.encoder.seed || encoder.half_dim != model.encoder.half_dim)
    throw ValidationError("encoder (seed " + std::to_string(encoder.seed) + ", L " +
                          std::to_string(encoder.half_dim) + ") does not match checkpoint (seed " +
                          std::to_string(model.encoder.seed) + ", L " +
                          std::to_string(model.encoder.half_dim) + ")");
  return reconstruct_volume(model, spec, opts);
}

int export_slices(const Volume& v, int axis, const std::filesystem::path& dir, const std::string& prefix) {
  if (axis < 0 || axis > 2) throw ValidationError("slice axis must be 0, 1 or 2");
  std::filesystem::create_directories(dir);
  const float lo = v.data.minCoeff();
  const float hi = v.data.maxCoeff();
  const float range = hi > lo ? hi - lo : 1.0f;
  const int u_axis = axis == 0 ? 1 : 0;
  const int w_axis = axis == 2 ? 1 : 2;
  const int width = v.dims[u_axis];
  const int height = v.dims[w_axis];

  std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * height);
  for (int s = 0; s < v.dims[axis]; ++s) {
    Index3 idx;
    idx[axis] = s;
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        idx[u_axis] = c;
        idx[w_axis] = r;
        const float t = (v.at(idx.x(), idx.y(), idx.z()) - lo) / range;
        pixels[static_cast<std::size_t>(r) * width + c] =
            static_cast<unsigned char>(std::lround(std::clamp(t, 0.0f, 1.0f) * 255.0f));
      }
    char name[64];
    std::snprintf(name, sizeof name, "_%04d.pgm", s);
    std::ofstream out(dir / (prefix + name), std::ios::binary);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  }
  return v.dims[axis];
}

}  // namespace irem
