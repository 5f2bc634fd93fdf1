#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "irem/volume.hpp"

namespace irem::testing {

inline Rigid random_rigid(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Vec3 axis(g(rng), g(rng), g(rng));
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  return make_rigid(axis, angle(rng), Vec3(g(rng), g(rng), g(rng)) * 10.0);
}

inline Volume random_volume(std::mt19937_64& rng, int max_dim = 6) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_real_distribution<double> spacing(0.3, 3.0);
  std::normal_distribution<double> g(0.0, 5.0);
  Volume v(Index3(dim(rng), dim(rng), dim(rng)), Vec3(spacing(rng), spacing(rng), spacing(rng)),
           Vec3(g(rng), g(rng), g(rng)), random_rigid(rng).rotation);
  std::uniform_real_distribution<float> value(0.0f, 1000.0f);
  for (Eigen::Index i = 0; i < v.data.size(); ++i) v.data[i] = value(rng);
  return v;
}

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("irem_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace irem::testing
