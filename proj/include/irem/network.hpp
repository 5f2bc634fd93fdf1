#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "irem/volume.hpp"

namespace irem {

// Fully-connected coordinate network: 18 affine layers, the first 17 each
// followed by batch normalization and ReLU, the last one linear with a
// scalar output. The encoded input is concatenated below the activations of
// layers 6 and 12 (1-based) before they enter layers 7 and 13.
inline constexpr int kLayerCount = 18;
inline constexpr int kDefaultHiddenWidth = 256;

/// 0-based indices of the layers whose input carries the encoder skip.
inline constexpr bool has_skip_input(int layer) { return layer == 6 || layer == 12; }

enum class Mode { train, eval };

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct Layer {
  MatrixX<Scalar> weight;  // out x in
  VectorX<Scalar> bias;
  // Batch-norm state; empty on the output layer.
  VectorX<Scalar> bn_scale;
  VectorX<Scalar> bn_shift;
  VectorX<Scalar> running_mean;
  VectorX<Scalar> running_var;

  bool has_norm() const { return bn_scale.size() > 0; }
};

template <typename Scalar>
struct Network {
  int encoding_dim = 0;  // 2L
  int hidden_width = kDefaultHiddenWidth;
  Scalar bn_momentum = Scalar(0.1);
  Scalar bn_epsilon = Scalar(1e-5);
  std::vector<Layer<Scalar>> layers;
};

inline int layer_input_width(int layer, int encoding_dim, int hidden_width) {
  if (layer == 0) return encoding_dim;
  return has_skip_input(layer) ? hidden_width + encoding_dim : hidden_width;
}

inline int layer_output_width(int layer, int hidden_width) {
  return layer == kLayerCount - 1 ? 1 : hidden_width;
}

/// Trainable scalars (weights, biases, BN scale/shift). Running statistics
/// are buffers and are not counted.
inline std::int64_t parameter_count(int encoding_dim, int hidden_width = kDefaultHiddenWidth) {
  std::int64_t total = 0;
  for (int l = 0; l < kLayerCount; ++l) {
    const std::int64_t in = layer_input_width(l, encoding_dim, hidden_width);
    const std::int64_t out = layer_output_width(l, hidden_width);
    total += out * in + out;
    if (l + 1 < kLayerCount) total += 2 * out;
  }
  return total;
}

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases, identity
/// batch-norm. Deterministic in `seed`.
template <typename Scalar>
Network<Scalar> init_params(int half_dim, std::uint64_t seed, int hidden_width = kDefaultHiddenWidth) {
  if (half_dim < 1) throw ValidationError("encoder half dimension L must be >= 1");
  if (hidden_width < 1) throw ValidationError("hidden width must be >= 1");
  Network<Scalar> net;
  net.encoding_dim = 2 * half_dim;
  net.hidden_width = hidden_width;
  net.layers.resize(kLayerCount);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < kLayerCount; ++l) {
    const int in = layer_input_width(l, net.encoding_dim, hidden_width);
    const int out = layer_output_width(l, hidden_width);
    std::uniform_real_distribution<double> uniform(-std::sqrt(6.0 / in), std::sqrt(6.0 / in));
    Layer<Scalar>& layer = net.layers[l];
    layer.weight.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = static_cast<Scalar>(uniform(rng));
    layer.bias = VectorX<Scalar>::Zero(out);
    if (l + 1 < kLayerCount) {
      layer.bn_scale = VectorX<Scalar>::Ones(out);
      layer.bn_shift = VectorX<Scalar>::Zero(out);
      layer.running_mean = VectorX<Scalar>::Zero(out);
      layer.running_var = VectorX<Scalar>::Ones(out);
    }
  }
  return net;
}

/// Per-layer intermediate values of one forward pass, kept for backward.
template <typename Scalar>
struct ForwardCache {
  Mode mode = Mode::eval;
  MatrixX<Scalar> features;
  // inputs[l] is what layer l consumed; for l > 0 its top hidden_width rows
  // are the post-ReLU activations of layer l - 1.
  std::vector<MatrixX<Scalar>> inputs;
  std::vector<MatrixX<Scalar>> pre_activation;
  std::vector<MatrixX<Scalar>> normalized;
  std::vector<MatrixX<Scalar>> post_norm;
  std::vector<VectorX<Scalar>> batch_mean;
  std::vector<VectorX<Scalar>> batch_var;
  std::vector<VectorX<Scalar>> inv_std;
  RowVectorX<Scalar> output;

  Eigen::Index batch_size() const { return features.cols(); }
};

template <typename Scalar>
void check_features(const Network<Scalar>& net, const MatrixX<Scalar>& features) {
  if (static_cast<int>(net.layers.size()) != kLayerCount)
    throw Error("network has " + std::to_string(net.layers.size()) + " layers, expected 18");
  if (features.rows() != net.encoding_dim)
    throw Error("feature width " + std::to_string(features.rows()) + " does not match network input " +
                std::to_string(net.encoding_dim));
  if (!features.allFinite()) throw Error("non-finite input features");
}

/// Runs the network on a batch of encoded features (2L x batch). Train mode
/// normalizes with batch statistics, eval mode with the running ones.
/// Running statistics are not touched here; see forward_train.
template <typename Scalar>
const RowVectorX<Scalar>& forward(const Network<Scalar>& net, const MatrixX<Scalar>& features,
                                  Mode mode, ForwardCache<Scalar>& cache) {
  check_features(net, features);
  const Eigen::Index batch = features.cols();
  if (mode == Mode::train && batch < 2)
    throw Error("train-mode forward needs a batch of at least 2 samples");

  const int h = net.hidden_width;
  const int e = net.encoding_dim;
  cache.mode = mode;
  cache.features = features;
  cache.inputs.resize(kLayerCount);
  cache.pre_activation.resize(kLayerCount);
  cache.normalized.resize(kLayerCount);
  cache.post_norm.resize(kLayerCount);
  cache.batch_mean.resize(kLayerCount);
  cache.batch_var.resize(kLayerCount);
  cache.inv_std.resize(kLayerCount);

  cache.inputs[0] = features;
  for (int l = 0; l < kLayerCount; ++l) {
    const Layer<Scalar>& layer = net.layers[l];
    MatrixX<Scalar>& z = cache.pre_activation[l];
    z.noalias() = layer.weight * cache.inputs[l];
    if (!layer.has_norm()) {
      z.colwise() += layer.bias;
      break;
    }

    VectorX<Scalar>& mean = cache.batch_mean[l];
    VectorX<Scalar>& var = cache.batch_var[l];
    if (mode == Mode::train) {
      mean.setZero(z.rows());
      for (Eigen::Index j = 0; j < batch; ++j) {
        z.col(j) += layer.bias;
        mean += z.col(j);
      }
      mean /= static_cast<Scalar>(batch);
      var.setZero(z.rows());
      for (Eigen::Index j = 0; j < batch; ++j) var.array() += (z.col(j) - mean).array().square();
      var /= static_cast<Scalar>(batch);
    } else {
      z.colwise() += layer.bias;
      mean = layer.running_mean;
      var = layer.running_var;
    }
    cache.inv_std[l] = (var.array() + net.bn_epsilon).rsqrt().matrix();

    // Normalize, scale/shift and rectify in one sweep over the batch.
    MatrixX<Scalar>& xhat = cache.normalized[l];
    MatrixX<Scalar>& y = cache.post_norm[l];
    MatrixX<Scalar>& next = cache.inputs[l + 1];
    xhat.resize(h, batch);
    y.resize(h, batch);
    next.resize(has_skip_input(l + 1) ? h + e : h, batch);
    const auto inv_std = cache.inv_std[l].array();
    const auto scale = layer.bn_scale.array();
    const auto shift = layer.bn_shift.array();
    for (Eigen::Index j = 0; j < batch; ++j) {
      xhat.col(j).array() = (z.col(j) - mean).array() * inv_std;
      y.col(j).array() = xhat.col(j).array() * scale + shift;
      next.col(j).head(h) = y.col(j).cwiseMax(Scalar(0));
    }
    if (has_skip_input(l + 1)) next.bottomRows(e) = features;
  }
  cache.output = cache.pre_activation[kLayerCount - 1].row(0);
  return cache.output;
}

/// Exponential moving update of the BN running statistics from a train-mode
/// cache; the running variance uses the unbiased batch variance.
template <typename Scalar>
void update_running_stats(Network<Scalar>& net, const ForwardCache<Scalar>& cache) {
  if (cache.mode != Mode::train) throw Error("running statistics need a train-mode cache");
  const Scalar n = static_cast<Scalar>(cache.batch_size());
  const Scalar m = net.bn_momentum;
  for (int l = 0; l + 1 < kLayerCount; ++l) {
    Layer<Scalar>& layer = net.layers[l];
    layer.running_mean = (1 - m) * layer.running_mean + m * cache.batch_mean[l];
    layer.running_var = (1 - m) * layer.running_var + (m * n / (n - 1)) * cache.batch_var[l];
  }
}

template <typename Scalar>
const RowVectorX<Scalar>& forward_train(Network<Scalar>& net, const MatrixX<Scalar>& features,
                                        ForwardCache<Scalar>& cache) {
  forward(net, features, Mode::train, cache);
  update_running_stats(net, cache);
  return cache.output;
}

/// Pure eval-mode forward.
template <typename Scalar>
RowVectorX<Scalar> forward_eval(const Network<Scalar>& net, const MatrixX<Scalar>& features) {
  ForwardCache<Scalar> cache;
  return forward(net, features, Mode::eval, cache);
}

template <typename Scalar>
struct LayerGradient {
  MatrixX<Scalar> weight;
  VectorX<Scalar> bias;
  VectorX<Scalar> bn_scale;
  VectorX<Scalar> bn_shift;
};

template <typename Scalar>
struct Gradients {
  std::vector<LayerGradient<Scalar>> layers;
  // d loss / d features, summed over the three places the encoding enters.
  // Only filled when requested.
  MatrixX<Scalar> features;
};

/// Zero-valued gradient with the shapes of `net`.
template <typename Scalar>
Gradients<Scalar> zeros_like(const Network<Scalar>& net) {
  Gradients<Scalar> g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer<Scalar>& src = net.layers[l];
    g.layers[l].weight = MatrixX<Scalar>::Zero(src.weight.rows(), src.weight.cols());
    g.layers[l].bias = VectorX<Scalar>::Zero(src.bias.size());
    g.layers[l].bn_scale = VectorX<Scalar>::Zero(src.bn_scale.size());
    g.layers[l].bn_shift = VectorX<Scalar>::Zero(src.bn_shift.size());
  }
  return g;
}

/// Reverse-mode pass for a train-mode cache. `output_grads` holds
/// d loss / d output per sample. Gradients flow through the batch
/// statistics of every BN layer.
template <typename Scalar>
Gradients<Scalar> backward(const Network<Scalar>& net, const ForwardCache<Scalar>& cache,
                           const RowVectorX<Scalar>& output_grads, bool want_feature_grad = false) {
  if (cache.mode != Mode::train) throw Error("backward needs a train-mode forward cache");
  if (cache.inputs.size() != kLayerCount || cache.features.rows() != net.encoding_dim ||
      cache.inputs[kLayerCount - 1].rows() != net.layers[kLayerCount - 1].weight.cols())
    throw Error("forward cache does not match network shape");
  if (output_grads.size() != cache.batch_size())
    throw Error("output gradient length does not match the batch");

  const int h = net.hidden_width;
  const int e = net.encoding_dim;
  const Scalar n = static_cast<Scalar>(cache.batch_size());
  Gradients<Scalar> grads;
  grads.layers.resize(kLayerCount);
  if (want_feature_grad) grads.features = MatrixX<Scalar>::Zero(e, cache.batch_size());

  MatrixX<Scalar> dz = output_grads;
  MatrixX<Scalar> dinput;
  for (int l = kLayerCount - 1; l >= 0; --l) {
    const Layer<Scalar>& layer = net.layers[l];
    LayerGradient<Scalar>& g = grads.layers[l];

    if (layer.has_norm()) {
      // dinput currently holds d loss / d inputs[l + 1].
      const auto& y = cache.post_norm[l];
      const auto& xhat = cache.normalized[l];
      const Eigen::Index batch = xhat.cols();
      const auto scale = layer.bn_scale.array();
      g.bn_scale.setZero(h);
      g.bn_shift.setZero(h);
      for (Eigen::Index j = 0; j < batch; ++j) {
        const auto dy = (y.col(j).array() > Scalar(0)).select(dinput.col(j).head(h).array(), Scalar(0));
        g.bn_scale.array() += dy * xhat.col(j).array();
        g.bn_shift.array() += dy;
      }
      // Sums over the batch of d loss / d xhat and of its product with xhat.
      const VectorX<Scalar> sum_dxhat = (g.bn_shift.array() * scale).matrix();
      const VectorX<Scalar> sum_dxhat_xhat = (g.bn_scale.array() * scale).matrix();
      const auto coef = (cache.inv_std[l].array() / n).eval();
      dz.resize(h, batch);
      for (Eigen::Index j = 0; j < batch; ++j) {
        const auto dxhat =
            (y.col(j).array() > Scalar(0)).select(dinput.col(j).head(h).array(), Scalar(0)) * scale;
        dz.col(j).array() =
            (n * dxhat - xhat.col(j).array() * sum_dxhat_xhat.array() - sum_dxhat.array()) * coef;
      }
    }

    g.weight.noalias() = dz * cache.inputs[l].transpose();
    g.bias = dz.rowwise().sum();
    if (l > 0 || want_feature_grad) {
      dinput.noalias() = layer.weight.transpose() * dz;
      if (want_feature_grad) {
        if (l == 0)
          grads.features += dinput;
        else if (has_skip_input(l))
          grads.features += dinput.bottomRows(e);
      }
    }
  }
  return grads;
}

/// Views over every trainable tensor, in checkpoint order: per layer the
/// weight, bias, then BN scale and shift.
template <typename Scalar>
std::vector<std::span<Scalar>> trainable_tensors(Network<Scalar>& net) {
  std::vector<std::span<Scalar>> out;
  for (Layer<Scalar>& l : net.layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    if (l.has_norm()) {
      out.emplace_back(l.bn_scale.data(), static_cast<std::size_t>(l.bn_scale.size()));
      out.emplace_back(l.bn_shift.data(), static_cast<std::size_t>(l.bn_shift.size()));
    }
  }
  return out;
}

template <typename Scalar>
std::vector<std::span<Scalar>> trainable_tensors(Gradients<Scalar>& g) {
  std::vector<std::span<Scalar>> out;
  for (LayerGradient<Scalar>& l : g.layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    if (l.bn_scale.size() > 0) {
      out.emplace_back(l.bn_scale.data(), static_cast<std::size_t>(l.bn_scale.size()));
      out.emplace_back(l.bn_shift.data(), static_cast<std::size_t>(l.bn_shift.size()));
    }
  }
  return out;
}

}  // namespace irem
