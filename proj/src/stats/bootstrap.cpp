#include "ldsim/stats/bootstrap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "ldsim/core/error.hpp"
#include "ldsim/core/hash.hpp"
#include "ldsim/core/parallel.hpp"
#include "ldsim/ml/roc.hpp"

namespace ldsim::stats {

void BootstrapConfig::validate() const {
  if (iterations < 1) throw ConfigError("bootstrap: iterations must be >= 1");
  if (!(resample_fraction > 0.0 && resample_fraction <= 1.0))
    throw ConfigError("bootstrap: resample_fraction must be in (0, 1]");
  if (workers < 1) throw ConfigError("bootstrap: workers must be >= 1");
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"auc", "balanced_accuracy", "sensitivity",
                                                 "specificity"};
  return names;
}

const MetricSummary& BootstrapResult::at(const std::string& metric) const {
  for (const auto& m : metrics)
    if (m.metric == metric) return m;
  throw DataError("bootstrap: no metric '" + metric + "'");
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw DataError("percentile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

BootstrapResult bootstrap_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                                  double threshold, const BootstrapConfig& cfg,
                                  const RngStream& rng) {
  cfg.validate();
  if (scores.size() != labels.size()) throw DataError("bootstrap: score and label counts differ");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("bootstrap: labels must be 0 or 1");
    (labels[i] ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) throw DataError("bootstrap: both classes required");
  auto draw_size = [&](std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.resample_fraction * n)));
  };
  const std::size_t m_pos = draw_size(pos.size()), m_neg = draw_size(neg.size());

  BootstrapResult res;
  res.iterations = cfg.iterations;
  res.resample_fraction = cfg.resample_fraction;
  res.threshold = threshold;
  res.n_positive = pos.size();
  res.n_negative = neg.size();
  Fnv1a64 h;
  h.update_pod(rng.key());
  h.update_pod(cfg.iterations);
  h.update_pod(cfg.resample_fraction);
  for (int l : labels) h.update_pod(l);
  res.alignment_key = h.hex();

  const auto n_it = static_cast<std::size_t>(cfg.iterations);
  std::vector<std::array<double, 4>> values(n_it);
  parallel_for(n_it, effective_workers(cfg.workers, n_it), [&](std::size_t it) {
    RngStream r = rng.substream("bootstrap", it);
    std::vector<double> s;
    std::vector<int> y;
    s.reserve(m_pos + m_neg);
    for (std::size_t k = 0; k < m_pos; ++k) {
      s.push_back(scores[pos[r.uniform_index(pos.size())]]);
      y.push_back(1);
    }
    for (std::size_t k = 0; k < m_neg; ++k) {
      s.push_back(scores[neg[r.uniform_index(neg.size())]]);
      y.push_back(0);
    }
    const double auc = ml::roc_auc(s, y).auc;
    const ml::BinaryMetrics bm = ml::metrics_at(s, y, threshold);
    values[it] = {auc, bm.balanced_accuracy, bm.sensitivity, bm.specificity};
  });

  const double full_auc = ml::roc_auc(scores, labels).auc;
  const ml::BinaryMetrics full = ml::metrics_at(scores, labels, threshold);
  const std::array<double, 4> point = {full_auc, full.balanced_accuracy, full.sensitivity,
                                       full.specificity};
  for (std::size_t m = 0; m < 4; ++m) {
    MetricSummary ms;
    ms.metric = metric_names()[m];
    ms.point = point[m];
    for (const auto& v : values) ms.values.push_back(v[m]);
    ms.mean = std::accumulate(ms.values.begin(), ms.values.end(), 0.0) / static_cast<double>(n_it);
    // Percentiles of a skewed sample can sit on one side of the mean; the
    // interval is widened to contain it.
    ms.ci_lo = std::min(percentile(ms.values, 2.5), ms.mean);
    ms.ci_hi = std::max(percentile(ms.values, 97.5), ms.mean);
    res.metrics.push_back(std::move(ms));
  }
  return res;
}

nlohmann::json BootstrapResult::to_json() const {
  nlohmann::json m = nlohmann::json::object();
  for (const auto& s : metrics)
    m[s.metric] = {{"point", s.point}, {"mean", s.mean}, {"ci_lo", s.ci_lo}, {"ci_hi", s.ci_hi},
                   {"values", s.values}};
  return {{"schema_version", kSchemaVersion},
          {"iterations", iterations},
          {"resample_fraction", resample_fraction},
          {"threshold", threshold},
          {"n_positive", n_positive},
          {"n_negative", n_negative},
          {"alignment_key", alignment_key},
          {"metrics", m}};
}

BootstrapResult BootstrapResult::from_json(const nlohmann::json& j) {
  BootstrapResult r;
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw DataError("bootstrap: unsupported schema_version");
    r.iterations = j.at("iterations").get<int>();
    r.resample_fraction = j.at("resample_fraction").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.n_positive = j.at("n_positive").get<std::size_t>();
    r.n_negative = j.at("n_negative").get<std::size_t>();
    r.alignment_key = j.at("alignment_key").get<std::string>();
    for (const auto& name : metric_names()) {
      const auto& m = j.at("metrics").at(name);
      MetricSummary s;
      s.metric = name;
      s.point = m.at("point").get<double>();
      s.mean = m.at("mean").get<double>();
      s.ci_lo = m.at("ci_lo").get<double>();
      s.ci_hi = m.at("ci_hi").get<double>();
      s.values = m.at("values").get<std::vector<double>>();
      if (s.values.size() != static_cast<std::size_t>(r.iterations))
        throw DataError("bootstrap: value count differs from iterations");
      r.metrics.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bootstrap json: ") + e.what());
  }
  return r;
}

}  // namespace ldsim::stats
