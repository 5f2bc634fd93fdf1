#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "irem/encoder.hpp"
#include "irem/network.hpp"
#include "irem/volume.hpp"

namespace irem {

/// One observed (coordinate in N, normalized intensity) pair.
struct TrainingSample {
  Vec3 coordinate;
  float intensity = 0.0f;
};

/// Every voxel of every stack as a training sample: stack-major, then
/// x-fastest within a stack.
std::vector<TrainingSample> build_training_set(const NormalizedStackSet& set);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int batch_size = 2500;
  double lr0 = 1e-4;
  double decay_factor = 0.5;
  int decay_every = 500;
  AdamHyper adam;
  int epochs = 1;
  std::uint64_t shuffle_seed = 0;
  // Save a checkpoint every this many epochs; 0 saves only the final one.
  int checkpoint_every = 0;
};

void validate(const TrainConfig& cfg);

/// lr0 * decay_factor ^ floor(epoch / decay_every).
double lr_at(const TrainConfig& cfg, int epoch);

template <typename Scalar>
struct LossAndGrad {
  double loss = 0.0;
  RowVectorX<Scalar> grad;
};

/// Mean squared error over the batch with d loss / d pred = 2 (pred - target) / K.
template <typename Scalar>
LossAndGrad<Scalar> mse_loss(const RowVectorX<Scalar>& pred, const RowVectorX<Scalar>& target) {
  if (pred.size() != target.size()) throw Error("prediction and target lengths differ");
  if (pred.size() == 0) throw Error("empty batch");
  const auto k = static_cast<Scalar>(pred.size());
  LossAndGrad<Scalar> out;
  const RowVectorX<Scalar> diff = pred - target;
  out.loss = diff.template cast<double>().squaredNorm() / static_cast<double>(pred.size());
  out.grad = (Scalar(2) / k) * diff;
  return out;
}

template <typename Scalar>
struct AdamState {
  std::int64_t step = 0;
  std::vector<VectorX<Scalar>> first_moment;
  std::vector<VectorX<Scalar>> second_moment;
};

/// One bias-corrected Adam update over a list of tensors. Moments are
/// zero-initialized on the first call.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, std::span<const std::span<Scalar>> params,
               std::span<const std::span<Scalar>> grads, double lr, const AdamHyper& hyper = {}) {
  if (params.size() != grads.size()) throw Error("parameter and gradient lists differ in length");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(VectorX<Scalar>::Zero(static_cast<Eigen::Index>(p.size())));
      state.second_moment.push_back(VectorX<Scalar>::Zero(static_cast<Eigen::Index>(p.size())));
    }
  }
  if (state.first_moment.size() != params.size()) throw Error("optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].size() != grads[i].size() ||
        static_cast<Eigen::Index>(params[i].size()) != state.first_moment[i].size())
      throw Error("parameter, gradient and optimizer shapes differ");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(hyper.beta1);
  const auto b2 = static_cast<Scalar>(hyper.beta2);
  const auto step_size = static_cast<Scalar>(lr / (1.0 - std::pow(hyper.beta1, t)));
  const auto v_correction = static_cast<Scalar>(1.0 / (1.0 - std::pow(hyper.beta2, t)));
  const auto eps = static_cast<Scalar>(hyper.epsilon);

  using ArrayMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(params[i].size());
    ArrayMap p(params[i].data(), n);
    ArrayMap g(grads[i].data(), n);
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.square();
    p -= step_size * m / ((v * v_correction).sqrt() + eps);
  }
}

template <typename Scalar>
void adam_step(AdamState<Scalar>& state, Network<Scalar>& net, Gradients<Scalar>& grads, double lr,
               const AdamHyper& hyper = {}) {
  const auto p = trainable_tensors(net);
  const auto g = trainable_tensors(grads);
  adam_step<Scalar>(state, std::span<const std::span<Scalar>>(p), std::span<const std::span<Scalar>>(g), lr,
                    hyper);
}

/// Encoder and network plus everything needed to evaluate them in world
/// coordinates.
struct Model {
  FourierEncoder<float> encoder;
  Network<float> network;
  Box3 bbox;
  double intensity_scale = 1.0;
  int epoch = 0;
  std::uint64_t init_seed = 0;

  UnitCubeMap unit_map() const { return {bbox}; }
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

/// Called after each completed epoch with the number of completed epochs.
using EpochHook = std::function<void(const Model&, const EpochRecord&)>;

/// Mini-batch Adam over the training set. Each epoch shuffles with
/// shuffle_seed + epoch, keeps the final short batch, and uses lr_at(epoch).
/// Returns one record per epoch.
std::vector<EpochRecord> train(const TrainConfig& cfg, const std::vector<TrainingSample>& samples,
                               Model& model, const EpochHook& on_epoch = {});

/// Unit-cube coordinates of training samples, as float columns (3 x n).
Eigen::Matrix3Xf unit_coordinates(const std::vector<TrainingSample>& samples, const UnitCubeMap& map);

}  // namespace irem
