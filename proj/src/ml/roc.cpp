#include "ldsim/ml/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ldsim/core/error.hpp"

namespace ldsim::ml {
namespace {

void check(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw DataError("roc: scores and labels differ in length");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("roc: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw DataError("roc: non-finite score");
    pos += labels[i];
  }
  if (pos == 0 || pos == labels.size()) throw DataError("roc: both classes are required");
}

}  // namespace

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double np = std::count(labels.begin(), labels.end(), 1);
  const double nn = static_cast<double>(labels.size()) - np;
  RocResult r;
  r.curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  r.curve.fpr.push_back(0.0);
  r.curve.tpr.push_back(0.0);
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::size_t j = i;
    for (; j < order.size() && scores[order[j]] == s; ++j) (labels[order[j]] ? tp : fp) += 1;
    const double fpr = fp / nn, tpr = tp / np;
    r.auc += (fpr - r.curve.fpr.back()) * (tpr + r.curve.tpr.back()) / 2.0;
    r.curve.thresholds.push_back(s);
    r.curve.fpr.push_back(fpr);
    r.curve.tpr.push_back(tpr);
    i = j;
  }
  return r;
}

double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels) {
  check(scores, labels);
  double u = 0, np = 0, nn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      u += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  for (int l : labels) (l ? np : nn) += 1;
  return u / (np * nn);
}

ThresholdChoice optimal_threshold(const RocCurve& roc) {
  if (roc.thresholds.empty()) throw DataError("optimal_threshold: empty curve");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < roc.thresholds.size(); ++k) {
    const double d = std::hypot(roc.fpr[k], 1.0 - roc.tpr[k]);
    // Thresholds descend along the curve, so <= keeps the lower one on ties.
    if (d <= best_d + 1e-12) {
      best = k;
      best_d = std::min(best_d, d);
    }
  }
  ThresholdChoice c;
  c.fpr = roc.fpr[best];
  c.tpr = roc.tpr[best];
  c.distance = std::hypot(c.fpr, 1.0 - c.tpr);
  const double s = roc.thresholds[best];
  if (std::isinf(s)) {
    const double top = roc.thresholds.size() > 1 ? roc.thresholds[1] : 0.5;
    c.threshold = (top + 1.0) / 2.0;
  } else {
    const double next = best + 1 < roc.thresholds.size() ? roc.thresholds[best + 1] : 0.0;
    c.threshold = (s + next) / 2.0;
  }
  c.threshold = std::clamp(c.threshold, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  return c;
}

BinaryMetrics metrics_at(const std::vector<double>& scores,
                         const std::vector<int>& labels, double threshold) {
  check(scores, labels);
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pos = scores[i] >= threshold;
    if (labels[i]) (pos ? tp : fn) += 1;
    else (pos ? fp : tn) += 1;
  }
  BinaryMetrics m;
  m.sensitivity = tp / (tp + fn);
  m.specificity = tn / (tn + fp);
  m.balanced_accuracy = (m.sensitivity + m.specificity) / 2.0;
  return m;
}

}  // namespace ldsim::ml
