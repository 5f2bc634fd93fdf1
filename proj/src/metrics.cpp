#include "irem/metrics.hpp"

#include <cmath>
#include <limits>

namespace irem {

namespace {

void require_same_dims(const Volume& a, const Volume& b) {
  if (a.dims != b.dims) throw ValidationError("volume dimensions differ");
}

// Valid-mode correlation of a dense x-fastest field with `w` along `axis`.
Eigen::ArrayXd filter_axis(const Eigen::ArrayXd& in, Index3& dims, int axis, const Eigen::ArrayXd& w) {
  Index3 out_dims = dims;
  out_dims[axis] -= static_cast<int>(w.size()) - 1;
  Eigen::ArrayXd out(std::int64_t{out_dims.x()} * out_dims.y() * out_dims.z());
  const std::int64_t in_stride[3] = {1, dims.x(), std::int64_t{dims.x()} * dims.y()};
  std::int64_t o = 0;
  for (int k = 0; k < out_dims.z(); ++k)
    for (int j = 0; j < out_dims.y(); ++j)
      for (int i = 0; i < out_dims.x(); ++i) {
        const std::int64_t base = i + std::int64_t{dims.x()} * (j + std::int64_t{dims.y()} * k);
        double acc = 0.0;
        for (Eigen::Index t = 0; t < w.size(); ++t) acc += w[t] * in[base + t * in_stride[axis]];
        out[o++] = acc;
      }
  dims = out_dims;
  return out;
}

Eigen::ArrayXd gaussian_blur_valid(const Eigen::ArrayXd& field, const Index3& dims, const Eigen::ArrayXd& w) {
  Index3 d = dims;
  Eigen::ArrayXd x = filter_axis(field, d, 0, w);
  x = filter_axis(x, d, 1, w);
  return filter_axis(x, d, 2, w);
}

}  // namespace

double psnr(const Volume& a, const Volume& b, double data_range) {
  require_same_dims(a, b);
  if (!(data_range > 0)) throw ValidationError("data range must be positive");
  const double mse = (a.data.cast<double>() - b.data.cast<double>()).square().mean();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

Eigen::ArrayXd gaussian_window(int size, double sigma) {
  Eigen::ArrayXd w(size);
  const double center = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) w[i] = std::exp(-(i - center) * (i - center) / (2.0 * sigma * sigma));
  return w / w.sum();
}

double ssim(const Volume& a, const Volume& b, double data_range, const SsimOptions& opts) {
  require_same_dims(a, b);
  if (!(data_range > 0)) throw ValidationError("data range must be positive");
  if (opts.window < 1 || !(opts.sigma > 0)) throw ValidationError("invalid SSIM window");
  if ((a.dims.array() < opts.window).any())
    throw ValidationError("volume is smaller than the " + std::to_string(opts.window) + "^3 SSIM window");

  const Eigen::ArrayXd w = gaussian_window(opts.window, opts.sigma);
  const Eigen::ArrayXd x = a.data.cast<double>();
  const Eigen::ArrayXd y = b.data.cast<double>();
  const Eigen::ArrayXd mu_x = gaussian_blur_valid(x, a.dims, w);
  const Eigen::ArrayXd mu_y = gaussian_blur_valid(y, a.dims, w);
  const Eigen::ArrayXd var_x = gaussian_blur_valid(x * x, a.dims, w) - mu_x.square();
  const Eigen::ArrayXd var_y = gaussian_blur_valid(y * y, a.dims, w) - mu_y.square();
  const Eigen::ArrayXd cov = gaussian_blur_valid(x * y, a.dims, w) - mu_x * mu_y;

  const double c1 = std::pow(opts.k1 * data_range, 2);
  const double c2 = std::pow(opts.k2 * data_range, 2);
  const Eigen::ArrayXd map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) /
                             ((mu_x.square() + mu_y.square() + c1) * (var_x + var_y + c2));
  return map.mean();
}

MetricReport evaluate(const Volume& reference, const Volume& candidate, const std::string& method,
                      double data_range) {
  if (!(data_range > 0)) data_range = static_cast<double>(reference.data.maxCoeff() - reference.data.minCoeff());
  if (!(data_range > 0)) throw ValidationError("reference volume is constant; pass an explicit data range");
  MetricReport r;
  r.method = method;
  r.data_range = data_range;
  r.psnr_db = psnr(reference, candidate, data_range);
  r.ssim = ssim(reference, candidate, data_range);
  return r;
}

}  // namespace irem
