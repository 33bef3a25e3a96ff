#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ldsim/degrade/noise.hpp"
#include "ldsim/ml/pipeline.hpp"
#include "ldsim/radiomics/extract.hpp"
#include "ldsim/stats/bootstrap.hpp"
#include "ldsim/volume/manifest.hpp"
#include "ldsim/volume/phantom.hpp"
#include "ldsim/volume/preprocess.hpp"

namespace ldsim::app {

// Synthetic cohort. SDCT subjects are stored as generated; LDCT subjects are
// acquired through `acquisition` and split into validation and test halves.
struct PhantomDatasetConfig {
  int subjects = 120;
  double ldct_fraction = 0.4;
  double validation_fraction = 0.5;  // of the LDCT subjects
  double sdct_mA = 200.0;
  double ldct_mA = 50.0;
  volume::ThoraxConfig thorax;
  degrade::DegradeConfig acquisition;

  PhantomDatasetConfig();
  void validate() const;
};

struct MetricsConfig {
  std::size_t patch_size = 128;
  int ms_ssim_scales = 5;
  std::size_t kid_subset_size = 100;
  std::size_t kid_subsets = 10;

  void validate() const;
};

struct RadiomicsRunConfig {
  radiomics::ExtractionConfig extraction;
  bool perturbations = true;  // dilate, erode and contour_noise rows
  double perturb_magnitude = 0.15;
  double flip_probability = 0.3;

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string log_level = "info";
  PhantomDatasetConfig phantom;
  volume::PreprocessConfig preprocess;
  degrade::DegradeConfig degrade;
  MetricsConfig metrics;
  RadiomicsRunConfig radiomics;
  ml::TrainConfig train;
  stats::BootstrapConfig evaluate;
  double compare_alpha = 0.05;

  // Throws ConfigError on the first invalid field.
  void validate() const;
};

// Missing keys keep their defaults; unknown top-level keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// `workers` and `log` are runtime settings and are not serialized, so they
// never change a run id or an artifact.
nlohmann::json to_json(const RunConfig& c);

nlohmann::json to_json(const volume::ThoraxConfig& c);
volume::ThoraxConfig thorax_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const volume::PreprocessConfig& c);
volume::PreprocessConfig preprocess_config_from_json(const nlohmann::json& j);

}  // namespace ldsim::app
