#pragma once

#include <array>
#include <span>

#include "irem/reconstruct.hpp"
#include "irem/volume.hpp"

namespace irem {

/// Cubic B-spline basis weights for the four knots floor(x) - 1 .. floor(x) + 2,
/// given the fractional part t = x - floor(x).
std::array<double, 4> cubic_bspline_weights(double t);

/// Whole-sample mirror extension of index i into [0, n).
int mirror_index(int i, int n);

/// In-place conversion of samples to interpolating cubic B-spline
/// coefficients under mirror boundary conditions.
void bspline_prefilter(std::span<double> samples);

/// Interpolating cubic B-spline model of one volume.
class BSplineVolume {
 public:
  explicit BSplineVolume(const Volume& v);

  /// Value at a continuous voxel index; the volume is mirror-extended
  /// beyond its edges.
  double sample(const Vec3& index) const;

  const Volume& geometry() const { return geometry_; }

 private:
  double coeff(int i, int j, int k) const {
    return coefficients_[i + std::int64_t{dims_.x()} * (j + std::int64_t{dims_.y()} * k)];
  }

  Volume geometry_;
  Index3 dims_;
  Eigen::ArrayXd coefficients_;
};

struct FuseOptions {
  float fill_value = 0.0f;
};

struct FuseResult {
  Volume volume;
  // Fraction of grid points inside at least one stack's field of view.
  double coverage = 1.0;
};

/// Cubic B-spline fusion baseline: every grid point is mapped into each
/// stack's native frame, interpolated there, and averaged over the stacks
/// whose field of view (voxel extents) contains it. Output is in stored
/// intensity units.
FuseResult bspline_fuse(const NormalizedStackSet& set, const GridSpec& spec, const FuseOptions& opts = {});

}  // namespace irem
