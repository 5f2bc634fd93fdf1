#pragma once

#include <string>

#include "irem/volume.hpp"

namespace irem {

struct MetricReport {
  std::string method;
  std::string reference;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double data_range = 1.0;
};

/// 10 log10(range^2 / MSE); +infinity when the volumes are identical.
double psnr(const Volume& a, const Volume& b, double data_range);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean 3D SSIM over every fully-contained Gaussian window position.
double ssim(const Volume& a, const Volume& b, double data_range, const SsimOptions& opts = {});

/// Normalized 1D Gaussian window used by ssim.
Eigen::ArrayXd gaussian_window(int size, double sigma);

/// PSNR and SSIM of `candidate` against `reference`. A non-positive
/// `data_range` means reference max - min.
MetricReport evaluate(const Volume& reference, const Volume& candidate, const std::string& method,
                      double data_range = 0.0);

}  // namespace irem
