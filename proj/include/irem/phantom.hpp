#pragma once

#include <string_view>

#include "irem/volume.hpp"

namespace irem {

/// Low-frequency separable sinusoid field in [0.1, 0.9] on an n^3 grid.
Volume make_smooth_phantom(int n, double spacing = 1.0);

/// Head-like phantom on an n^3 grid: skull shell, folded gray/white
/// boundary, ventricles, small bright lesions and a fine oscillating
/// texture. Each voxel is the mean of 3^3 sub-samples.
Volume make_brain_phantom(int n, double spacing = 1.0);

/// Dispatch on "smooth" or "brain".
Volume make_phantom(std::string_view kind, int n, double spacing = 1.0);

}  // namespace irem
