#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ldsim/core/rng.hpp"

namespace ldsim::stats {

struct BootstrapConfig {
  int iterations = 1000;
  // Resample size per class as a fraction of that class's count.
  double resample_fraction = 1.0;
  unsigned workers = 1;

  void validate() const;
};

struct MetricSummary {
  std::string metric;
  double point = 0.0;  // on the full sample
  std::vector<double> values;  // one per iteration
  double mean = 0.0, ci_lo = 0.0, ci_hi = 0.0;  // 2.5 / 97.5 percentiles
};

struct BootstrapResult {
  static constexpr int kSchemaVersion = 1;

  int iterations = 0;
  double resample_fraction = 1.0;
  double threshold = 0.5;
  std::size_t n_positive = 0, n_negative = 0;
  // Fingerprint of the resampling plan (stream key, labels, size, fraction).
  // Results sharing it resampled identical rows at every iteration.
  std::string alignment_key;
  // auc, balanced_accuracy, sensitivity, specificity
  std::vector<MetricSummary> metrics;

  const MetricSummary& at(const std::string& metric) const;
  nlohmann::json to_json() const;
  static BootstrapResult from_json(const nlohmann::json& j);
};

const std::vector<std::string>& metric_names();

// Percentile at q in [0, 100] with linear interpolation between order
// statistics.
double percentile(std::vector<double> values, double q);

// Iteration i draws round(fraction * n_c) rows (at least one) with
// replacement from each class c using rng.substream("bootstrap", i), so both
// classes are always present and iteration i picks the same rows for every
// score vector evaluated on the same labels and stream.
BootstrapResult bootstrap_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                                  double threshold, const BootstrapConfig& cfg,
                                  const RngStream& rng);

}  // namespace ldsim::stats
