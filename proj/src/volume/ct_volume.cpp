#include "ldsim/volume/ct_volume.hpp"

#include <algorithm>
#include <cmath>

#include "ldsim/core/error.hpp"

namespace ldsim::volume {
namespace {

void check_geometry(const Dims& dims, const Spacing& spacing,
                    std::size_t value_count) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
    throw DataError("volume dims must all be >= 1");
  if (!(spacing.x > 0) || !(spacing.y > 0) || !(spacing.z > 0))
    throw DataError("volume spacing must all be > 0");
  if (value_count != dims.count())
    throw DataError("volume value count " + std::to_string(value_count) +
                    " does not match dims (" + std::to_string(dims.count()) +
                    ")");
}

}  // namespace

std::string_view to_string(IntensityUnit unit) {
  switch (unit) {
    case IntensityUnit::kRawDicom:
      return "RawDicom";
    case IntensityUnit::kHU:
      return "HU";
    case IntensityUnit::kNormalized:
      return "Normalized";
  }
  return "?";
}

IntensityUnit parse_intensity_unit(std::string_view text) {
  if (text == "RawDicom") return IntensityUnit::kRawDicom;
  if (text == "HU") return IntensityUnit::kHU;
  if (text == "Normalized") return IntensityUnit::kNormalized;
  throw DataError("unknown intensity unit '" + std::string(text) + "'");
}

CtVolume::CtVolume(Dims dims, Spacing spacing, Point3 origin,
                   IntensityUnit unit, std::vector<float> values, bool smoothed)
    : dims_(dims),
      spacing_(spacing),
      origin_(origin),
      unit_(unit),
      values_(std::move(values)),
      smoothed_(smoothed) {
  check_geometry(dims_, spacing_, values_.size());
  for (float v : values_) {
    if (!std::isfinite(v)) throw DataError("volume contains non-finite values");
  }
  if (unit_ == IntensityUnit::kNormalized) {
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    if (*lo < 0.0f || *hi > 1.0f)
      throw DataError("normalized volume has values outside [0,1]");
  }
}

CtVolume CtVolume::with_values(std::vector<float> values, IntensityUnit unit,
                               bool smoothed) const {
  return CtVolume(dims_, spacing_, origin_, unit, std::move(values), smoothed);
}

Grid3<double> CtVolume::to_grid() const {
  return Grid3<double>(dims_, spacing_,
                       std::vector<double>(values_.begin(), values_.end()));
}

std::optional<NoduleLabel> label_from_score(double malignancy_score) {
  if (malignancy_score > 4.0) return NoduleLabel::kMalignant;
  if (malignancy_score < 4.0) return NoduleLabel::kNonMalignant;
  return std::nullopt;
}

NoduleMask::NoduleMask(Dims dims, Spacing spacing, Point3 origin,
                       std::vector<std::uint8_t> values, std::string nodule_id,
                       double malignancy_score)
    : dims_(dims),
      spacing_(spacing),
      origin_(origin),
      values_(std::move(values)),
      nodule_id_(std::move(nodule_id)),
      malignancy_score_(malignancy_score) {
  check_geometry(dims_, spacing_, values_.size());
  std::size_t fg = 0;
  for (auto& v : values_) {
    if (v > 1) throw DataError("nodule mask values must be 0 or 1");
    fg += v;
  }
  if (fg == 0)
    throw DataError("nodule mask '" + nodule_id_ + "' has no foreground voxels");
  if (!(malignancy_score_ >= 1.0 && malignancy_score_ <= 5.0))
    throw DataError("malignancy score must lie in [1,5]");
}

std::optional<NoduleLabel> NoduleMask::label() const {
  return label_from_score(malignancy_score_);
}

std::size_t NoduleMask::foreground_count() const {
  return static_cast<std::size_t>(
      std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

bool NoduleMask::matches_geometry(const CtVolume& v) const {
  return dims_ == v.dims() && spacing_ == v.spacing() && origin_ == v.origin();
}

MaskGrid NoduleMask::to_grid() const {
  return MaskGrid(dims_, spacing_, values_);
}

}  // namespace ldsim::volume
