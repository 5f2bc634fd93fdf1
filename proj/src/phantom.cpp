#include "irem/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace irem {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Blob {
  Vec3 center;
  Vec3 radii;
  double value;
};

// Continuous head model on [-1, 1]^3.
double brain_intensity(const Vec3& u) {
  const Vec3 head(0.92, 0.82, 0.88);
  const double r = u.cwiseQuotient(head).norm();
  if (r >= 1.0) return 0.0;
  if (r >= 0.86) return 0.35;  // skull
  if (r >= 0.80) return 0.08;  // CSF gap

  const double theta = std::atan2(u.y(), u.x());
  const double phi = std::acos(std::clamp(u.z() / std::max(u.norm(), 1e-12), -1.0, 1.0));
  const double fold = 0.56 + 0.07 * std::sin(9.0 * theta) * std::sin(7.0 * phi) +
                      0.03 * std::cos(15.0 * theta + 3.0 * phi);
  double value = r < fold ? 0.82 : 0.55;  // white / gray matter

  static const Blob ventricles[] = {
      {{-0.12, 0.05, 0.05}, {0.07, 0.22, 0.12}, 0.15},
      {{0.12, 0.05, 0.05}, {0.07, 0.22, 0.12}, 0.15},
  };
  for (const Blob& b : ventricles)
    if ((u - b.center).cwiseQuotient(b.radii).squaredNorm() < 1.0) value = b.value;

  static const Blob lesions[] = {
      {{0.35, -0.25, 0.20}, {0.05, 0.05, 0.05}, 1.0},  {{-0.40, 0.30, -0.15}, {0.07, 0.04, 0.05}, 1.0},
      {{0.05, 0.45, 0.35}, {0.04, 0.04, 0.08}, 0.95}, {{-0.25, -0.45, 0.30}, {0.06, 0.06, 0.03}, 1.0},
      {{0.45, 0.20, -0.35}, {0.03, 0.03, 0.03}, 0.95}, {{-0.05, -0.15, -0.45}, {0.05, 0.08, 0.04}, 1.0},
  };
  for (const Blob& b : lesions)
    if ((u - b.center).cwiseQuotient(b.radii).squaredNorm() < 1.0) value = b.value;

  value += 0.05 * std::sin(kTwoPi * 3.0 * u.x()) * std::sin(kTwoPi * 2.5 * u.y()) *
           std::sin(kTwoPi * 3.5 * u.z());
  return value;
}

}  // namespace

Volume make_smooth_phantom(int n, double spacing) {
  if (n < 1 || !(spacing > 0)) throw ValidationError("phantom size and spacing must be positive");
  Volume v(Index3::Constant(n), Vec3::Constant(spacing));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 u = Vec3(i, j, k) / n;
        v.at(i, j, k) = static_cast<float>(0.5 + 0.25 * std::sin(kTwoPi * u.x()) * std::cos(kTwoPi * u.y()) +
                                           0.15 * std::cos(kTwoPi * u.z()));
      }
  return v;
}

Volume make_brain_phantom(int n, double spacing) {
  if (n < 1 || !(spacing > 0)) throw ValidationError("phantom size and spacing must be positive");
  constexpr int kSub = 3;
  Volume v(Index3::Constant(n), Vec3::Constant(spacing));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int c = 0; c < kSub; ++c)
          for (int b = 0; b < kSub; ++b)
            for (int a = 0; a < kSub; ++a) {
              const Vec3 sub = Vec3(i, j, k) + (Vec3(a, b, c) + Vec3::Constant(0.5)) / kSub;
              sum += brain_intensity(sub / n * 2.0 - Vec3::Ones());
            }
        v.at(i, j, k) = static_cast<float>(sum / (kSub * kSub * kSub));
      }
  return v;
}

Volume make_phantom(std::string_view kind, int n, double spacing) {
  if (kind == "smooth") return make_smooth_phantom(n, spacing);
  if (kind == "brain") return make_brain_phantom(n, spacing);
  throw ValidationError("unknown phantom kind '" + std::string(kind) + "'");
}

}  // namespace irem
