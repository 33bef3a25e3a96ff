#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ldsim/ml/dataset.hpp"

namespace ldsim::ml {

// ICC(A,1): two-way model, absolute agreement, single measurement, on an
// n_subjects x k_raters table. A table with no variation at all is 1.
double icc_a1(const Eigen::MatrixXd& table);

struct MannWhitney {
  double u = 0.0;  // U of the first sample, ties counted 1/2
  double z = 0.0;
  double p = 1.0;  // two-sided, normal approximation with tie and continuity correction
};
MannWhitney mann_whitney(const std::vector<double>& a, const std::vector<double>& b);

struct StabilityResult {
  std::vector<std::string> kept;  // input order
  std::vector<double> icc;        // per input feature
};
// Each perturbed matrix must hold every (group, row id) of `original`; the
// ICC table per feature is original plus one column per perturbation.
StabilityResult stability_filter(const FeatureMatrix& original,
                                 const std::vector<FeatureMatrix>& perturbed,
                                 double icc_threshold = 0.75);

struct DiscriminativeResult {
  std::vector<std::string> kept;  // ascending p, ties in input order
  std::vector<double> p;          // per input feature
};
DiscriminativeResult discriminative_filter(const FeatureMatrix& fm, double p_threshold = 0.05);

// Walks `ordered` and keeps a feature unless |Spearman rho| with an already
// kept one exceeds the threshold.
std::vector<std::string> redundancy_filter(const FeatureMatrix& fm,
                                           const std::vector<std::string>& ordered,
                                           double rho_threshold = 0.9);

}  // namespace ldsim::ml
