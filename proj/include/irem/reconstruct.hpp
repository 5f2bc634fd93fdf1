#pragma once

#include <filesystem>

#include "irem/train.hpp"
#include "irem/volume.hpp"

namespace irem {

/// Axis-aligned dense lattice in N with dims floor((max - min) / spacing) + 1.
struct GridSpec {
  Box3 bbox;
  Vec3 spacing = Vec3::Ones();

  Index3 dims() const;
};

void validate(const GridSpec& spec);

/// Default grid: the union box of the stacks at the smallest in-plane
/// spacing among them.
GridSpec default_grid(const NormalizedStackSet& set);

/// Lattice points bbox.min + index .* spacing in x-fastest order (3 x count).
Eigen::Matrix3Xd make_dense_grid(const GridSpec& spec);

struct ReconstructOptions {
  Eigen::Index chunk_size = 8192;
};

/// Eval-mode prediction at world coordinates, in stored intensity units
/// (network output times the model intensity scale).
Eigen::ArrayXf predict(const Model& model, const Eigen::Matrix3Xd& world,
                       const ReconstructOptions& opts = {});

/// Evaluates the model on the dense grid and assembles an isotropic-frame
/// Volume (origin = bbox.min, identity direction).
Volume reconstruct_volume(const Model& model, const GridSpec& spec, const ReconstructOptions& opts = {});

/// As above, but rejects an encoder whose seed or L differ from the model's.
Volume reconstruct_volume(const FourierEncoder<float>& encoder, const Model& model, const GridSpec& spec,
                          const ReconstructOptions& opts = {});

/// Writes one 8-bit binary PGM per slice along `axis`, windowed to the
/// volume's min..max. Returns the number of files written.
int export_slices(const Volume& v, int axis, const std::filesystem::path& dir,
                  const std::string& prefix = "slice");

}  // namespace irem
