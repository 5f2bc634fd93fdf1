#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "irem/volume.hpp"

namespace irem {

/// Scan orientation of a thick-slice stack. The thick axis is z for axial,
/// y for coronal and x for sagittal.
enum class Orientation { axial, coronal, sagittal };

int thick_axis(Orientation o);
std::string_view to_string(Orientation o);
Orientation parse_orientation(std::string_view name);

struct SimulationConfig {
  int factor = 4;
  std::vector<Orientation> orientations = {Orientation::axial, Orientation::coronal,
                                           Orientation::sagittal};
  // Reserved for additive-noise variants; simulation is noiseless.
  std::uint64_t seed = 0;
};

void validate(const SimulationConfig& cfg);

/// Boxcar thick-slice downsampling: each output voxel is the mean of `k`
/// consecutive input voxels along `axis`. Spacing along `axis` grows by `k`
/// and the origin moves so output voxel centers sit at the mean position of
/// their sources.
Volume downsample_axis(const Volume& hr, int axis, int k);

/// One thick-slice stack per requested orientation, in raw intensity units,
/// each sharing the HR world frame.
std::vector<Volume> simulate_stacks(const Volume& hr, const SimulationConfig& cfg);

/// simulate_stacks followed by intensity normalization with identity
/// transforms.
NormalizedStackSet simulate_lr_stacks(const Volume& hr, const SimulationConfig& cfg);

}  // namespace irem
