#pragma once

#include <vector>

namespace ldsim::ml {

// Operating points for the rule "positive iff score >= threshold", one per
// distinct score in descending order, preceded by (0, 0) at +inf.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> fpr, tpr;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

// Trapezoidal AUC over the curve; tied scores form one diagonal step, which
// equals the Mann-Whitney midrank formulation. Both classes required.
RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// U / (n+ n-) with U counting positive-negative pairs, ties as 1/2.
double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels);

// Operating point closest to (0, 1); distance ties go to the lower
// threshold. The returned threshold is the midpoint between the chosen score
// and the next lower distinct score (0 below the minimum, 1 above the
// maximum), so it reproduces the chosen point on the fitting data.
struct ThresholdChoice {
  double threshold = 0.5;
  double fpr = 0.0, tpr = 0.0, distance = 0.0;
};
ThresholdChoice optimal_threshold(const RocCurve& roc);

struct BinaryMetrics {
  double sensitivity = 0.0, specificity = 0.0, balanced_accuracy = 0.0;
};
// Positive iff score >= threshold.
BinaryMetrics metrics_at(const std::vector<double>& scores,
                         const std::vector<int>& labels, double threshold);

}  // namespace ldsim::ml
