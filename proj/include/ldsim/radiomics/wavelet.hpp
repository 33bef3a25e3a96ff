#pragma once

#include <array>
#include <string>

#include "ldsim/radiomics/roi.hpp"

namespace ldsim::radiomics {

struct SubBand {
  std::string name;  // "wavelet-XYZ", one L/H letter per axis in x, y, z order
  ImageGrid image;
};

// One-level separable orthonormal Haar transform: L = (a + b)/sqrt2,
// H = (a - b)/sqrt2 over pairs (2k, 2k+1) per axis. An odd axis is extended
// by repeating its last sample. Output dims are ceil(n/2), spacing doubles.
// Order: LLL, LLH, LHL, LHH, HLL, HLH, HHL, HHH. Every axis needs >= 2 voxels.
std::array<SubBand, 8> wavelet_decompose(const ImageGrid& patch);

// Mask on the sub-band grid: voxel (i, j, k) takes mask(2i, 2j, 2k). If that
// leaves nothing, a sub-band voxel is set when any voxel of its 2x2x2 block is.
MaskGrid downsample_mask(const MaskGrid& mask);

}  // namespace ldsim::radiomics
