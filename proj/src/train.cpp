#include "irem/train.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

namespace irem {

std::vector<TrainingSample> build_training_set(const NormalizedStackSet& set) {
  if (set.stacks.empty() || set.stacks.size() != set.transforms.size())
    throw ValidationError("stack set needs one transform per stack");
  std::size_t total = 0;
  for (const Volume& s : set.stacks) total += static_cast<std::size_t>(s.voxel_count());

  std::vector<TrainingSample> samples;
  samples.reserve(total);
  for (std::size_t s = 0; s < set.stacks.size(); ++s) {
    const Volume& v = set.stacks[s];
    const Rigid& t = set.transforms[s];
    // Same affine as voxel_to_world followed by apply_rigid, folded once.
    const Mat3 linear = t.rotation * v.direction * v.spacing.asDiagonal();
    const Vec3 offset = apply_rigid(t, v.origin);
    for (int k = 0; k < v.dims.z(); ++k)
      for (int j = 0; j < v.dims.y(); ++j)
        for (int i = 0; i < v.dims.x(); ++i)
          samples.push_back({offset + linear * Vec3(i, j, k), v.at(i, j, k)});
  }
  return samples;
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be positive");
  if (!(cfg.lr0 > 0)) throw ValidationError("lr0 must be positive");
  if (!(cfg.decay_factor > 0 && cfg.decay_factor <= 1)) throw ValidationError("decay_factor must be in (0, 1]");
  if (cfg.decay_every < 1) throw ValidationError("decay_every must be positive");
  if (!(cfg.adam.beta1 >= 0 && cfg.adam.beta1 < 1) || !(cfg.adam.beta2 >= 0 && cfg.adam.beta2 < 1))
    throw ValidationError("Adam betas must lie in [0, 1)");
  if (!(cfg.adam.epsilon > 0)) throw ValidationError("Adam epsilon must be positive");
  if (cfg.epochs < 0) throw ValidationError("epochs must be non-negative");
  if (cfg.checkpoint_every < 0) throw ValidationError("checkpoint_every must be non-negative");
}

double lr_at(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw Error("epoch must be non-negative");
  return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

Eigen::Matrix3Xf unit_coordinates(const std::vector<TrainingSample>& samples, const UnitCubeMap& map) {
  Eigen::Matrix3Xf out(3, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = map(samples[i].coordinate).cast<float>();
  return out;
}

std::vector<EpochRecord> train(const TrainConfig& cfg, const std::vector<TrainingSample>& samples,
                               Model& model, const EpochHook& on_epoch) {
  validate(cfg);
  if (samples.size() < 2) throw ValidationError("training needs at least 2 samples");
  if (cfg.batch_size < 2) throw ValidationError("batch_size must be at least 2 for batch normalization");
  if (model.network.encoding_dim != model.encoder.encoding_dim())
    throw Error("encoder and network widths differ");

  const Eigen::Matrix3Xf coords = unit_coordinates(samples, model.unit_map());
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::RowVectorXf intensities(n);
  for (Eigen::Index i = 0; i < n; ++i) intensities[i] = samples[static_cast<std::size_t>(i)].intensity;

  std::vector<EpochRecord> log;
  AdamState<float> adam;
  ForwardCache<float> cache;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Eigen::Matrix3Xf batch_coords;
  Eigen::RowVectorXf batch_target;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(cfg.shuffle_seed + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    const double lr = lr_at(cfg, epoch);
    double loss_sum = 0.0;
    for (Eigen::Index first = 0; first < n; first += cfg.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - first);
      // A trailing batch of one cannot be batch-normalized; it is folded
      // into the batch before it.
      const Eigen::Index size = (n - first - count == 1) ? count + 1 : count;
      batch_coords.resize(3, size);
      batch_target.resize(size);
      for (Eigen::Index i = 0; i < size; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(first + i)];
        batch_coords.col(i) = coords.col(src);
        batch_target[i] = intensities[src];
      }
      const MatrixX<float> features = fourier_encode(model.encoder, batch_coords);
      const RowVectorX<float>& pred = forward_train(model.network, features, cache);
      const LossAndGrad<float> lg = mse_loss<float>(pred, batch_target);
      Gradients<float> grads = backward(model.network, cache, lg.grad);
      adam_step(adam, model.network, grads, lr, cfg.adam);
      loss_sum += lg.loss * static_cast<double>(size);
      if (size != count) break;
    }
    ++model.epoch;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.push_back({epoch, loss_sum / static_cast<double>(n), lr, seconds});
    if (on_epoch) on_epoch(model, log.back());
  }
  return log;
}

}  // namespace irem
