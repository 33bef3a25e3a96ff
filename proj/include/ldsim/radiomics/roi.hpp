#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ldsim/volume/grid.hpp"

namespace ldsim::radiomics {

using volume::Dims;
using volume::Grid3;
using volume::ImageGrid;
using volume::MaskGrid;
using volume::Spacing;

using LevelGrid = Grid3<std::uint8_t>;

struct NoduleMeta {
  std::string subject_id;
  std::string nodule_id;
  double malignancy_score = 0.0;
};

// Image patch with its mask and gray-level discretization. Levels are 1..bins
// inside the mask and 0 outside.
struct RoiSample {
  ImageGrid image;
  MaskGrid mask;
  LevelGrid levels;
  int bins = 32;
  NoduleMeta meta;

  std::size_t voxel_count() const;
  void validate() const;
};

struct BoundingBox {
  std::array<std::size_t, 3> lo{}, hi{};  // inclusive
};

// Foreground bounding box. Empty masks throw DataError.
BoundingBox mask_bounds(const MaskGrid& mask);
std::size_t mask_count(const MaskGrid& mask);

// Sub-grid [lo - margin, hi + margin] clipped to the grid.
template <class T>
Grid3<T> crop(const Grid3<T>& g, const BoundingBox& box, std::size_t margin);
BoundingBox expand(const BoundingBox& box, std::size_t margin, const Dims& dims);

// (x - mean) / std over every voxel of the patch (population std). Throws
// DataError when the patch has zero variance.
ImageGrid zscore_normalize(const ImageGrid& patch);

// level = min(bins, floor(bins * (x - min) / (max - min)) + 1) with min and
// max taken over the mask; a constant ROI maps to level 1.
RoiSample discretize_fixed_bins(const ImageGrid& patch, const MaskGrid& mask,
                                int bins = 32);

}  // namespace ldsim::radiomics
