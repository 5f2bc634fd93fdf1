#include "irem/bspline.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace irem {

namespace {

const double kPole = std::sqrt(3.0) - 2.0;

double initial_causal(std::span<const double> c, double z) {
  const auto n = static_cast<int>(c.size());
  const int horizon = static_cast<int>(
      std::ceil(std::log(std::numeric_limits<double>::epsilon()) / std::log(std::abs(z))));
  if (horizon < n) {
    double zn = z;
    double sum = c[0];
    for (int k = 1; k < horizon; ++k) {
      sum += zn * c[k];
      zn *= z;
    }
    return sum;
  }
  double zn = z;
  const double iz = 1.0 / z;
  double z2n = std::pow(z, n - 1);
  double sum = c[0] + z2n * c[n - 1];
  z2n *= z2n * iz;
  for (int k = 1; k <= n - 2; ++k) {
    sum += (zn + z2n) * c[k];
    zn *= z;
    z2n *= iz;
  }
  return sum / (1.0 - zn * zn);
}

double initial_anticausal(std::span<const double> c, double z) {
  const auto n = c.size();
  return (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
}

}  // namespace

std::array<double, 4> cubic_bspline_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double u = 1.0 - t;
  return {u * u * u / 6.0, (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0, (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0,
          t3 / 6.0};
}

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void bspline_prefilter(std::span<double> c) {
  const auto n = static_cast<int>(c.size());
  if (n < 2) return;
  const double z = kPole;
  const double gain = (1.0 - z) * (1.0 - 1.0 / z);
  for (double& x : c) x *= gain;
  c[0] = initial_causal(c, z);
  for (int k = 1; k < n; ++k) c[k] += z * c[k - 1];
  c[n - 1] = initial_anticausal(c, z);
  for (int k = n - 2; k >= 0; --k) c[k] = z * (c[k + 1] - c[k]);
}

BSplineVolume::BSplineVolume(const Volume& v) : geometry_(v), dims_(v.dims) {
  coefficients_ = v.data.cast<double>();
  const Index3 d = dims_;
  const std::int64_t stride[3] = {1, d.x(), std::int64_t{d.x()} * d.y()};
  std::vector<double> line;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = axis == 0 ? 1 : 0;
    const int w = axis == 2 ? 1 : 2;
    line.resize(static_cast<std::size_t>(d[axis]));
    for (int b = 0; b < d[w]; ++b)
      for (int a = 0; a < d[u]; ++a) {
        const std::int64_t base = a * stride[u] + b * stride[w];
        for (int i = 0; i < d[axis]; ++i) line[i] = coefficients_[base + i * stride[axis]];
        bspline_prefilter(line);
        for (int i = 0; i < d[axis]; ++i) coefficients_[base + i * stride[axis]] = line[i];
      }
  }
  geometry_.data.resize(0);
}

double BSplineVolume::sample(const Vec3& index) const {
  int idx[3][4];
  std::array<double, 4> w[3];
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor(index[a]);
    w[a] = cubic_bspline_weights(index[a] - f);
    for (int t = 0; t < 4; ++t) idx[a][t] = mirror_index(static_cast<int>(f) - 1 + t, dims_[a]);
  }
  double sum = 0.0;
  for (int c = 0; c < 4; ++c) {
    double plane = 0.0;
    for (int b = 0; b < 4; ++b) {
      double row = 0.0;
      for (int a = 0; a < 4; ++a) row += w[0][a] * coeff(idx[0][a], idx[1][b], idx[2][c]);
      plane += w[1][b] * row;
    }
    sum += w[2][c] * plane;
  }
  return sum;
}

FuseResult bspline_fuse(const NormalizedStackSet& set, const GridSpec& spec, const FuseOptions& opts) {
  if (set.stacks.empty() || set.stacks.size() != set.transforms.size())
    throw ValidationError("stack set needs one transform per stack");
  std::vector<BSplineVolume> splines;
  std::vector<Rigid> to_native;
  for (std::size_t s = 0; s < set.stacks.size(); ++s) {
    splines.emplace_back(set.stacks[s]);
    to_native.push_back(inverse(set.transforms[s]));
  }

  const Eigen::Matrix3Xd grid = make_dense_grid(spec);
  FuseResult result;
  result.volume = Volume(spec.dims(), spec.spacing, spec.bbox.min());
  constexpr double kEdgeTol = 1e-9;
  std::int64_t covered = 0;
  for (Eigen::Index p = 0; p < grid.cols(); ++p) {
    double sum = 0.0;
    int hits = 0;
    for (std::size_t s = 0; s < splines.size(); ++s) {
      const Volume& geo = splines[s].geometry();
      const Vec3 idx = world_to_continuous_index(geo, apply_rigid(to_native[s], Vec3(grid.col(p))));
      const bool inside = (idx.array() >= -0.5 - kEdgeTol).all() &&
                          (idx.array() <= geo.dims.cast<double>().array() - 0.5 + kEdgeTol).all();
      if (!inside) continue;
      sum += splines[s].sample(idx);
      ++hits;
    }
    if (hits > 0) {
      ++covered;
      result.volume.data[p] = static_cast<float>(sum / hits * set.intensity_scale);
    } else {
      result.volume.data[p] = opts.fill_value;
    }
  }
  result.coverage = grid.cols() > 0 ? static_cast<double>(covered) / static_cast<double>(grid.cols()) : 0.0;
  return result;
}

}  // namespace irem
