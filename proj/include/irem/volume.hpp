#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace irem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, configs, arguments. The CLI maps this to
// exit code 2; every other Error is a runtime failure.
class ValidationError : public Error {
 public:
  using Error::Error;
};

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Index3 = Eigen::Vector3i;
using Box3 = Eigen::AlignedBox3d;

/// Dense 3D scalar grid with world geometry. Intensities are 32-bit,
/// geometry is double. Linear layout is x-fastest:
/// `i + dims.x * (j + dims.y * k)`.
struct Volume {
  Index3 dims = Index3::Ones();
  Vec3 spacing = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
  Mat3 direction = Mat3::Identity();
  Eigen::ArrayXf data = Eigen::ArrayXf::Zero(1);

  Volume() = default;
  Volume(const Index3& dims, const Vec3& spacing, const Vec3& origin = Vec3::Zero(),
         const Mat3& direction = Mat3::Identity());

  std::int64_t voxel_count() const {
    return std::int64_t{dims.x()} * dims.y() * dims.z();
  }
  std::int64_t linear_index(int i, int j, int k) const {
    return i + std::int64_t{dims.x()} * (j + std::int64_t{dims.y()} * k);
  }
  float& at(int i, int j, int k) { return data[linear_index(i, j, k)]; }
  float at(int i, int j, int k) const { return data[linear_index(i, j, k)]; }
};

/// Throws ValidationError when any Volume invariant is violated.
void validate(const Volume& v);

/// origin + direction * (spacing .* index). Throws on out-of-range index.
Vec3 voxel_to_world(const Volume& v, const Index3& index);

/// Continuous (fractional) voxel index of a world point; the inverse of
/// voxel_to_world extended to the whole space.
Vec3 world_to_continuous_index(const Volume& v, const Vec3& world);

/// Axis-aligned bounds of all voxel centers in world space.
Box3 voxel_center_bounds(const Volume& v);

/// 6-DoF transform p -> rotation * p + translation.
template <typename Scalar>
struct RigidTransform {
  using Vector = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix = Eigen::Matrix<Scalar, 3, 3>;

  Matrix rotation = Matrix::Identity();
  Vector translation = Vector::Zero();

  static RigidTransform identity() { return {}; }
};

using Rigid = RigidTransform<double>;

template <typename Scalar>
typename RigidTransform<Scalar>::Vector apply_rigid(
    const RigidTransform<Scalar>& t, const typename RigidTransform<Scalar>::Vector& p) {
  return t.rotation * p + t.translation;
}

/// The transform applying `second` after `first`.
template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& second,
                               const RigidTransform<Scalar>& first) {
  return {second.rotation * first.rotation,
          second.rotation * first.translation + second.translation};
}

template <typename Scalar>
RigidTransform<Scalar> inverse(const RigidTransform<Scalar>& t) {
  typename RigidTransform<Scalar>::Matrix rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

/// Rigid transform from an axis-angle rotation (radians) and translation.
Rigid make_rigid(const Vec3& axis, double angle, const Vec3& translation = Vec3::Zero());

/// Throws ValidationError unless rotation is orthonormal with det +1.
void validate(const Rigid& t);

/// Stacks rescaled into the common [0, 1] training range, each with its
/// transform into the normalized space.
struct NormalizedStackSet {
  std::vector<Volume> stacks;
  std::vector<Rigid> transforms;
  double intensity_scale = 1.0;
};

/// Divides every stack by the global maximum intensity. Requires a nonempty
/// set of non-negative stacks that are not all zero.
NormalizedStackSet normalize_intensities(std::vector<Volume> stacks,
                                         std::vector<Rigid> transforms);

/// Union of the voxel-center bounds of every stack, mapped into N.
Box3 bounding_box(const NormalizedStackSet& set);

// Native on-disk format: `<name>.json` header plus `<name>.raw` payload of
// little-endian float32, x-fastest. `path` may name either file or the
// bare stem.
Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& v, const std::filesystem::path& path);

Rigid load_transform(const std::filesystem::path& path);
void save_transform(const Rigid& t, const std::filesystem::path& path);

std::filesystem::path header_path(const std::filesystem::path& path);
std::filesystem::path raw_path(const std::filesystem::path& path);

// Little-endian float32 blob helpers shared with the checkpoint format.
void write_f32_le(std::ostream& out, const float* values, std::size_t count);
void read_f32_le(std::istream& in, float* values, std::size_t count);

}  // namespace irem
