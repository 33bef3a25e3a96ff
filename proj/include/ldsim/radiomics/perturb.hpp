#pragma once

#include <cstdint>
#include <string_view>

#include "ldsim/radiomics/roi.hpp"

namespace ldsim::radiomics {

enum class PerturbMode { kDilate, kErode, kContourNoise };

std::string_view to_string(PerturbMode mode);
PerturbMode parse_perturb_mode(std::string_view text);

struct PerturbationSpec {
  PerturbMode mode = PerturbMode::kDilate;
  double magnitude = 0.15;  // target |dV|/V for dilate / erode
  double flip_probability = 0.3;  // contour_noise
  std::uint64_t seed = 0;

  void validate() const;
};

struct PerturbResult {
  MaskGrid mask;
  int steps = 0;
  // Erosion stopped before reaching the target to stay non-empty, dilation
  // hit the grid border, or contour noise removed the whole mask.
  bool flagged = false;
};

// One 6-connected morphological step. Voxels outside the grid count as
// background.
MaskGrid dilate6(const MaskGrid& mask);
MaskGrid erode6(const MaskGrid& mask);

// Largest 6-connected foreground component; ties go to the component found
// first in x-fastest scan order.
MaskGrid largest_component(const MaskGrid& mask);

// Dilate / erode repeat single steps until |V - V0| / V0 >= magnitude.
// Contour noise flips every voxel that has a 6-neighbour of the other value
// with the given probability, then keeps the largest component.
PerturbResult perturb_roi(const MaskGrid& mask, const PerturbationSpec& spec);

}  // namespace ldsim::radiomics
