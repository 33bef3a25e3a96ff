#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace ldsim::stats {

struct FriedmanResult {
  double statistic = 0.0;
  double p = 1.0;
  std::size_t blocks = 0, methods = 0;
};

// Rows are blocks, columns methods. Midranks within each block; the statistic
// carries the tie correction and p is the chi-square (k - 1) upper tail. A
// table tied within every block gives statistic 0 and p 1.
FriedmanResult friedman_test(const Eigen::MatrixXd& table);

enum class Alternative { kTwoSided, kGreater, kLess };

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0, w_minus = 0.0;
  double p = 1.0;
  std::size_t n = 0;  // nonzero differences
  bool exact = false;
  bool degenerate = false;  // every difference was zero
};

// Differences x - y; zeros dropped, midranks of |d|. Exact null distribution
// (tie-aware, by dynamic programming over doubled ranks) for n <= exact_max_n,
// otherwise the normal approximation with tie-adjusted variance and
// continuity correction. kGreater tests x > y.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                    Alternative alt = Alternative::kTwoSided,
                                    std::size_t exact_max_n = 25);

// min(1, p * m) elementwise.
std::vector<double> bonferroni_adjust(const std::vector<double>& p, std::size_t m);

}  // namespace ldsim::stats
