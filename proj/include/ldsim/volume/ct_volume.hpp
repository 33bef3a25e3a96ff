#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldsim/volume/grid.hpp"

namespace ldsim::volume {

enum class IntensityUnit { kRawDicom, kHU, kNormalized };

std::string_view to_string(IntensityUnit unit);
IntensityUnit parse_intensity_unit(std::string_view text);

// Scanner volume with geometry metadata. Immutable once constructed; every
// processing step returns a new volume.
class CtVolume {
 public:
  CtVolume(Dims dims, Spacing spacing, Point3 origin, IntensityUnit unit,
           std::vector<float> values, bool smoothed = false);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const Point3& origin() const { return origin_; }
  IntensityUnit unit() const { return unit_; }
  bool smoothed() const { return smoothed_; }
  const std::vector<float>& values() const { return values_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_.nx * (y + dims_.ny * z);
  }
  float at(std::size_t x, std::size_t y, std::size_t z) const {
    return values_[index(x, y, z)];
  }

  // Same geometry, new payload.
  CtVolume with_values(std::vector<float> values, IntensityUnit unit,
                       bool smoothed) const;
  Grid3<double> to_grid() const;

 private:
  Dims dims_;
  Spacing spacing_;
  Point3 origin_;
  IntensityUnit unit_;
  std::vector<float> values_;
  bool smoothed_;
};

enum class NoduleLabel { kNonMalignant = 0, kMalignant = 1 };

// Binary nodule annotation on the grid of its parent volume.
class NoduleMask {
 public:
  NoduleMask(Dims dims, Spacing spacing, Point3 origin,
             std::vector<std::uint8_t> values, std::string nodule_id,
             double malignancy_score);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const Point3& origin() const { return origin_; }
  const std::vector<std::uint8_t>& values() const { return values_; }
  const std::string& nodule_id() const { return nodule_id_; }
  double malignancy_score() const { return malignancy_score_; }
  // Malignant iff score > 4, non-malignant iff score < 4; a score of exactly
  // 4 belongs to neither class.
  std::optional<NoduleLabel> label() const;
  std::size_t foreground_count() const;

  bool matches_geometry(const CtVolume& v) const;
  MaskGrid to_grid() const;

 private:
  Dims dims_;
  Spacing spacing_;
  Point3 origin_;
  std::vector<std::uint8_t> values_;
  std::string nodule_id_;
  double malignancy_score_;
};

std::optional<NoduleLabel> label_from_score(double malignancy_score);

}  // namespace ldsim::volume
