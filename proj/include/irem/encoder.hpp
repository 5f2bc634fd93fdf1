#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "irem/volume.hpp"

namespace irem {

/// Random Fourier feature mapping of 3D points in the unit cube:
/// gamma(p) = [cos(2*pi*s*B*p), sin(2*pi*s*B*p)], with B an L x 3 matrix of
/// standard normal draws and s the frequency scale (1 unless configured).
/// B is fixed at construction and never trained.
template <typename Scalar>
struct FourierEncoder {
  using Frequencies = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

  int half_dim = 0;
  std::uint64_t seed = 0;
  Scalar frequency_scale = 1;
  Frequencies frequencies;

  int encoding_dim() const { return 2 * half_dim; }
};

template <typename Scalar>
FourierEncoder<Scalar> make_encoder(int half_dim, std::uint64_t seed, Scalar frequency_scale = 1) {
  if (half_dim < 1) throw ValidationError("encoder half dimension L must be >= 1");
  if (!(frequency_scale > 0)) throw ValidationError("frequency scale must be positive");
  FourierEncoder<Scalar> enc;
  enc.half_dim = half_dim;
  enc.seed = seed;
  enc.frequency_scale = frequency_scale;
  enc.frequencies.resize(half_dim, 3);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int r = 0; r < half_dim; ++r)
    for (int c = 0; c < 3; ++c) enc.frequencies(r, c) = static_cast<Scalar>(gauss(rng));
  return enc;
}

/// Encodes each column of `points` (3 x n) into a column of the result
/// (2L x n): cosines in rows [0, L), sines in rows [L, 2L).
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fourier_encode(
    const FourierEncoder<Scalar>& enc, const Eigen::MatrixBase<Derived>& points) {
  const Scalar two_pi = static_cast<Scalar>(2 * std::numbers::pi) * enc.frequency_scale;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> phase =
      two_pi * (enc.frequencies * points.template cast<Scalar>());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(enc.encoding_dim(), points.cols());
  out.topRows(enc.half_dim) = phase.array().cos().matrix();
  out.bottomRows(enc.half_dim) = phase.array().sin().matrix();
  return out;
}

/// Affine map of world coordinates (mm) into the unit cube spanned by `box`.
/// A flat axis maps with unit extent.
struct UnitCubeMap {
  Box3 box;

  Vec3 operator()(const Vec3& world) const {
    const Vec3 extent = (box.sizes().array() > 0.0).select(box.sizes(), Vec3::Ones());
    return (world - box.min()).cwiseQuotient(extent);
  }
};

}  // namespace irem
