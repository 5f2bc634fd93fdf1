#include "irem/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace irem {

namespace {

using nlohmann::json;

constexpr double kOrthoTol = 1e-6;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

template <int N>
Eigen::Matrix<double, N, 1> read_reals(const json& j, const char* key,
                                       const std::filesystem::path& path) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != N)
    throw ValidationError(path.string() + ": field '" + key + "' must be an array of " +
                          std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!j[key][i].is_number())
      throw ValidationError(path.string() + ": field '" + key + "' has a non-numeric entry");
    out[i] = j[key][i].get<double>();
  }
  return out;
}

json to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json row_major(const Mat3& m) {
  json arr = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
  return arr;
}

Mat3 from_row_major(const Eigen::Matrix<double, 9, 1>& v) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
  return m;
}

bool is_orthonormal(const Mat3& m) {
  return ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= kOrthoTol);
}

std::uint32_t byteswap32(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

}  // namespace

Volume::Volume(const Index3& dims, const Vec3& spacing, const Vec3& origin,
               const Mat3& direction)
    : dims(dims), spacing(spacing), origin(origin), direction(direction) {
  if ((dims.array() < 1).any()) throw ValidationError("volume dims must be positive");
  data = Eigen::ArrayXf::Zero(voxel_count());
}

void validate(const Volume& v) {
  if ((v.dims.array() < 1).any()) throw ValidationError("volume dims must be positive");
  if (!(v.spacing.array() > 0.0).all() || !v.spacing.allFinite())
    throw ValidationError("volume spacing must be positive");
  if (!v.origin.allFinite()) throw ValidationError("volume origin must be finite");
  if (!is_orthonormal(v.direction) || std::abs(std::abs(v.direction.determinant()) - 1.0) > kOrthoTol)
    throw ValidationError("volume direction must be orthonormal");
  if (v.data.size() != v.voxel_count())
    throw ValidationError("volume data length does not match dims");
  if (!v.data.allFinite()) throw ValidationError("volume contains non-finite intensities");
}

Vec3 voxel_to_world(const Volume& v, const Index3& index) {
  if ((index.array() < 0).any() || (index.array() >= v.dims.array()).any())
    throw Error("voxel index out of range");
  return v.origin + v.direction * v.spacing.cwiseProduct(index.cast<double>());
}

Vec3 world_to_continuous_index(const Volume& v, const Vec3& world) {
  return (v.direction.transpose() * (world - v.origin)).cwiseQuotient(v.spacing);
}

Box3 voxel_center_bounds(const Volume& v) {
  Box3 box;
  for (int corner = 0; corner < 8; ++corner) {
    Index3 idx((corner & 1) ? v.dims.x() - 1 : 0, (corner & 2) ? v.dims.y() - 1 : 0,
               (corner & 4) ? v.dims.z() - 1 : 0);
    box.extend(voxel_to_world(v, idx));
  }
  return box;
}

Rigid make_rigid(const Vec3& axis, double angle, const Vec3& translation) {
  Rigid t;
  t.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  return t;
}

void validate(const Rigid& t) {
  if (!t.rotation.allFinite() || !t.translation.allFinite())
    throw ValidationError("rigid transform has non-finite entries");
  if (!is_orthonormal(t.rotation) || std::abs(t.rotation.determinant() - 1.0) > kOrthoTol)
    throw ValidationError("rigid rotation must be orthonormal with determinant +1");
}

NormalizedStackSet normalize_intensities(std::vector<Volume> stacks, std::vector<Rigid> transforms) {
  if (stacks.empty()) throw ValidationError("stack set is empty");
  if (stacks.size() != transforms.size())
    throw ValidationError("one transform per stack is required");
  float peak = 0.0f;
  for (const Volume& s : stacks) {
    validate(s);
    if ((s.data < 0.0f).any()) throw ValidationError("stack intensities must be non-negative");
    peak = std::max(peak, s.data.maxCoeff());
  }
  for (const Rigid& t : transforms) validate(t);
  if (peak <= 0.0f) throw ValidationError("all stacks are zero; intensity scale is undefined");

  NormalizedStackSet set;
  set.intensity_scale = peak;
  for (Volume& s : stacks) s.data /= peak;
  set.stacks = std::move(stacks);
  set.transforms = std::move(transforms);
  return set;
}

Box3 bounding_box(const NormalizedStackSet& set) {
  Box3 box;
  for (std::size_t s = 0; s < set.stacks.size(); ++s) {
    const Box3 local = voxel_center_bounds(set.stacks[s]);
    for (int c = 0; c < 8; ++c)
      box.extend(apply_rigid(set.transforms[s], Vec3(local.corner(static_cast<Box3::CornerType>(c)))));
  }
  return box;
}

std::filesystem::path header_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  return p.string() + ".json";
}

std::filesystem::path raw_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  return p.string() + ".raw";
}

void write_f32_le(std::ostream& out, const float* values, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(count * 4));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = byteswap32(std::bit_cast<std::uint32_t>(values[i]));
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
}

void read_f32_le(std::istream& in, float* values, std::size_t count) {
  in.read(reinterpret_cast<char*>(values), static_cast<std::streamsize>(count * 4));
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t i = 0; i < count; ++i)
      values[i] = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(values[i])));
  }
}

Volume load_volume(const std::filesystem::path& path) {
  const auto hdr = header_path(path);
  const auto raw = raw_path(path);
  if (!std::filesystem::exists(hdr)) throw ValidationError("missing volume header " + hdr.string());
  if (!std::filesystem::exists(raw)) throw ValidationError("missing volume data " + raw.string());
  const json j = read_json(hdr);

  Volume v;
  const Eigen::Vector3d dims = read_reals<3>(j, "dims", hdr);
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1 || dims[i] != std::floor(dims[i]) || dims[i] > 1e9)
      throw ValidationError(hdr.string() + ": dims must be positive integers");
    v.dims[i] = static_cast<int>(dims[i]);
  }
  v.spacing = read_reals<3>(j, "spacing", hdr);
  v.origin = read_reals<3>(j, "origin", hdr);
  v.direction = from_row_major(read_reals<9>(j, "direction", hdr));
  if (!(v.spacing.array() > 0.0).all())
    throw ValidationError(hdr.string() + ": spacing must be positive");

  const auto expected = static_cast<std::uintmax_t>(v.voxel_count()) * 4u;
  const auto actual = std::filesystem::file_size(raw);
  if (actual != expected)
    throw ValidationError(raw.string() + ": size " + std::to_string(actual) + " bytes, header implies " +
                          std::to_string(expected));
  v.data.resize(v.voxel_count());
  std::ifstream in(raw, std::ios::binary);
  read_f32_le(in, v.data.data(), static_cast<std::size_t>(v.data.size()));
  if (!in) throw Error("failed reading " + raw.string());
  try {
    validate(v);
  } catch (const ValidationError& e) {
    throw ValidationError(hdr.string() + ": " + e.what());
  }
  return v;
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  validate(v);
  const auto hdr = header_path(path);
  if (hdr.has_parent_path()) std::filesystem::create_directories(hdr.parent_path());
  json j;
  j["dims"] = {v.dims.x(), v.dims.y(), v.dims.z()};
  j["spacing"] = to_json(v.spacing);
  j["origin"] = to_json(v.origin);
  j["direction"] = row_major(v.direction);
  std::ofstream(hdr) << j.dump(2) << '\n';

  std::ofstream out(raw_path(path), std::ios::binary);
  write_f32_le(out, v.data.data(), static_cast<std::size_t>(v.data.size()));
  if (!out) throw Error("failed writing " + raw_path(path).string());
}

Rigid load_transform(const std::filesystem::path& path) {
  const json j = read_json(path);
  Rigid t;
  t.rotation = from_row_major(read_reals<9>(j, "rotation", path));
  t.translation = read_reals<3>(j, "translation", path);
  validate(t);
  return t;
}

void save_transform(const Rigid& t, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  json j;
  j["rotation"] = row_major(t.rotation);
  j["translation"] = to_json(t.translation);
  std::ofstream(path) << j.dump(2) << '\n';
}

}  // namespace irem
