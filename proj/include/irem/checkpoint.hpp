#pragma once

#include <filesystem>

#include "irem/train.hpp"

namespace irem {

// Checkpoint = `<stem>.json` manifest + `<stem>.bin` float32 little-endian
// blob. Blob order, for each layer 1..18: weight (row-major, out x in),
// bias, then for layers 1..17 BN scale, BN shift, running mean, running
// variance. The encoder matrix is not stored; it is redrawn from its seed.

void save_checkpoint(const Model& model, const std::filesystem::path& stem);
Model load_checkpoint(const std::filesystem::path& path);

/// Fresh model: encoder drawn from `encoder_seed`, He-initialized network.
Model make_model(int half_dim, std::uint64_t encoder_seed, std::uint64_t init_seed, const Box3& bbox,
                 double intensity_scale, int hidden_width = kDefaultHiddenWidth,
                 float frequency_scale = 1.0f);

}  // namespace irem
