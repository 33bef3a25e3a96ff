#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "ldsim/stats/bootstrap.hpp"
#include "ldsim/stats/tests.hpp"

namespace ldsim::stats {

struct PairwiseResult {
  std::string a, b;
  WilcoxonResult test;
  double p_adjusted = 1.0;
};

struct MetricComparison {
  std::string metric;
  FriedmanResult friedman;
  bool pairwise_run = false;  // only when friedman.p < alpha
  std::vector<PairwiseResult> pairwise;
};

struct ComparisonResult {
  std::vector<std::string> methods;
  double alpha = 0.05;
  std::vector<MetricComparison> metrics;
};

using NamedBootstrap = std::pair<std::string, BootstrapResult>;

// Blocks are bootstrap iterations; every method must share the alignment key
// and iteration count. Pairwise Wilcoxon tests use Bonferroni m = k(k-1)/2.
ComparisonResult compare_methods(const std::vector<NamedBootstrap>& methods, double alpha = 0.05);

// Per method {metric: {mean, ci_lo, ci_hi}}, then friedman and pairwise
// sections per metric.
nlohmann::json comparison_json(const std::vector<NamedBootstrap>& methods,
                               const ComparisonResult& result);

}  // namespace ldsim::stats
