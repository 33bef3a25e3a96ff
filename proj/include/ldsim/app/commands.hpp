#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldsim/app/config.hpp"

namespace ldsim::app {

namespace fs = std::filesystem;

// Every command validates the config first, writes its primary outputs
// atomically under `out` and returns the primary report it wrote. Timing
// and progress bookkeeping go to "<out>/<command>.run.json".

// volumes/<sid>.mha, masks/<nodule>.mha, manifest.csv (all subjects),
// manifest_sdct.csv, manifest_ldct.csv with its manifest_ldct_val.csv and
// manifest_ldct_test.csv halves, manifest_ldct_reference.csv (noise-free
// counterparts of the LDCT subjects, for image-quality metrics) and
// phantom_summary.json.
nlohmann::json cmd_phantom(const RunConfig& cfg, const fs::path& out);

// Degrades every volume of `manifest` with cfg.degrade and writes
// volumes/<sid>.mha, manifest.csv (masks referenced in place) and
// degrade_summary.json. Subjects whose input, config and existing output
// hashes match degrade_state.json are skipped.
nlohmann::json cmd_degrade(const RunConfig& cfg, const fs::path& manifest,
                           const fs::path& out);

// Pairs records by subject id; any unmatched subject is a DataError.
nlohmann::json cmd_metrics(const RunConfig& cfg, const fs::path& real_manifest,
                           const fs::path& generated_manifest, const fs::path& out);

// features.csv (one "none" row per labelled nodule plus one row per
// perturbation), feature_schema.json and radiomics_summary.json.
nlohmann::json cmd_radiomics(const RunConfig& cfg, const fs::path& manifest,
                             const fs::path& out);

// model.json and selection_report.json. `train_features` carries the
// perturbation rows; `validation_features` is read for its "none" rows.
nlohmann::json cmd_train(const RunConfig& cfg, const fs::path& train_features,
                         const fs::path& validation_features, const fs::path& out);

// evaluation.json (bootstrap over the "none" rows) and predictions.csv.
nlohmann::json cmd_evaluate(const RunConfig& cfg, const fs::path& model,
                            const fs::path& features, const fs::path& out);

using NamedPath = std::pair<std::string, fs::path>;

// comparison.json, violin_<metric>.csv per metric, violin_data.json and
// violin.svg.
nlohmann::json cmd_compare(const RunConfig& cfg, const std::vector<NamedPath>& evaluations,
                           const fs::path& out);

// Minimal SVG: one mirrored kernel-density outline per method and metric
// panel, with a mean tick.
std::string violin_svg(const std::vector<std::string>& methods,
                       const std::vector<std::string>& metrics,
                       const std::vector<std::vector<std::vector<double>>>& values);

}  // namespace ldsim::app
