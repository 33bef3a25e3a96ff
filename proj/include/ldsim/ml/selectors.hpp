#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "ldsim/core/rng.hpp"

namespace ldsim::ml {

enum class SelectorKind { kLasso, kMrmr, kPca, kRfe, kRfImportance };

std::string_view to_string(SelectorKind kind);
SelectorKind parse_selector_kind(std::string_view text);
const std::vector<SelectorKind>& all_selectors();

// ---------------------------------------------------------------- LASSO

struct LassoFit {
  double intercept = 0.0;
  Eigen::VectorXd beta;
  int iterations = 0;
  bool converged = false;
};

// Coordinate descent for
//   (1 / 2n) sum_i w_i (z_i - b0 - x_i beta)^2 + lambda |beta|_1
// with an unpenalized intercept. `warm` seeds the coefficients.
LassoFit weighted_lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& w, double lambda,
                           const LassoFit* warm = nullptr, double tol = 1e-10,
                           int max_sweeps = 10000);

// L1-penalized logistic regression, (1/n) sum log-loss + lambda |beta|_1, by
// iteratively reweighted least squares around weighted_lasso_cd with step
// halving. Throws NumericalError if it does not converge.
LassoFit logistic_lasso(const Eigen::MatrixXd& X, const std::vector<int>& y, double lambda,
                        const LassoFit* warm = nullptr, int max_outer = 100);

// Smallest lambda for which every coefficient is zero.
double lasso_lambda_max(const Eigen::MatrixXd& X, const std::vector<int>& y);

struct LassoConfig {
  int n_lambdas = 20;
  double min_ratio = 0.01;  // smallest lambda / lambda_max
  int folds = 5;

  void validate() const;
};

struct LassoSelection {
  std::vector<Eigen::Index> selected;  // nonzero coefficients, by |beta| descending
  double lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> cv_auc;  // mean held-out AUC per lambda
  LassoFit fit;
};

// Lambda chosen by grouped k-fold CV AUC (groups never straddle folds); ties
// go to the larger lambda. Columns are expected standardized.
LassoSelection lasso_select(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const std::vector<std::string>& groups, const LassoConfig& cfg,
                            const RngStream& rng);

// ---------------------------------------------------------------- MRMR

// Bin index 0..bins-1 against the column's interpolated quantile edges.
std::vector<int> quantile_bins(const Eigen::VectorXd& col, int bins = 4);
// Plug-in mutual information (nats) of two discrete sequences.
double mutual_information(const std::vector<int>& a, const std::vector<int>& b);
// Greedy MID: first the most relevant feature, then argmax of
// I(f; y) - mean_{s in S} I(f; s). Ties go to the lower column index.
std::vector<Eigen::Index> mrmr_order(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                     std::size_t k, int bins = 4);

// ---------------------------------------------------------------- PCA

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // d x k, unit columns
  Eigen::VectorXd explained_variance;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& Z) const;
  nlohmann::json to_json() const;
  static PcaModel from_json(const nlohmann::json& j);
};

// Top-k principal axes of the centered data; each axis is signed so its
// largest-magnitude loading is positive. k above the numerical rank throws.
PcaModel pca_fit(const Eigen::MatrixXd& X, Eigen::Index k);

// ---------------------------------------------------------------- RFE / RF

// Recursive elimination with L2 logistic regression down to k_min features:
// the returned order lists survivors first, so its k-prefix is the set left
// when k features remain (k >= k_min).
std::vector<Eigen::Index> rfe_order(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                    std::size_t k_min, double c = 1.0);

// Columns by mean impurity decrease of a random forest, descending.
std::vector<Eigen::Index> rf_importance_order(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                              RngStream& rng, int trees = 200,
                                              Eigen::VectorXd* importances = nullptr);

}  // namespace ldsim::ml
