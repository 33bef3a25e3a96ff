#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ldsim/radiomics/features.hpp"
#include "ldsim/radiomics/perturb.hpp"
#include "ldsim/radiomics/roi.hpp"
#include "ldsim/radiomics/shape.hpp"
#include "ldsim/volume/ct_volume.hpp"

namespace ldsim::radiomics {

struct ExtractionConfig {
  int bins = 32;
  Spacing target_spacing{1.0, 1.0, 1.0};
  double margin_mm = 4.0;  // context kept around the mask bounding box
  MeshConfig mesh;
  bool wavelet = true;

  void validate() const;
};

nlohmann::json to_json(const ExtractionConfig& cfg);
ExtractionConfig extraction_config_from_json(const nlohmann::json& j);

// Feature names in output order: original_shape_*, then per image
// (original, wavelet-LLL .. wavelet-HHH) the first-order and five texture
// families as <image>_<class>_<feature>. 851 names with the default config.
std::vector<std::string> feature_schema(const ExtractionConfig& cfg);
// Schema document: version, config, ordered names, and an FNV-1a hash of the
// names and config.
nlohmann::json schema_json(const ExtractionConfig& cfg);

// Crop around the mask, resample both to the target spacing (cubic image,
// nearest mask), Z-score the patch, then compute every feature family.
FeatureVector extract_all(const ImageGrid& image, const MaskGrid& mask,
                          const ExtractionConfig& cfg);
FeatureVector extract_all(const volume::CtVolume& image,
                          const volume::NoduleMask& mask,
                          const ExtractionConfig& cfg);

// The patch and mask extract_all works on, after crop and resampling.
struct PreparedRoi {
  ImageGrid patch;  // Z-scored
  MaskGrid mask;
};
PreparedRoi prepare_roi(const ImageGrid& image, const MaskGrid& mask,
                        const ExtractionConfig& cfg);
// Features of an already prepared patch; perturbed masks reuse the patch.
FeatureVector extract_prepared(const PreparedRoi& roi,
                               const ExtractionConfig& cfg);

// One CSV row: identifiers, label (1 malignant, 0 not) and values in schema
// order. `perturbation` is "none" for the unmodified mask.
struct FeatureRow {
  std::string subject_id;
  std::string nodule_id;
  int label = 0;
  std::string perturbation = "none";
  std::vector<double> values;
};

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;
};

// Header: subject_id,nodule_id,label,perturbation,<names...>. Values are
// written with 17 significant digits so reading back is exact.
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& t);
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace ldsim::radiomics
