#pragma once

#include <Eigen/Core>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ldsim/ml/balance.hpp"
#include "ldsim/ml/classifiers.hpp"
#include "ldsim/ml/dataset.hpp"
#include "ldsim/ml/selectors.hpp"

namespace ldsim::ml {

struct TrainConfig {
  double icc_threshold = 0.75;
  double p_threshold = 0.05;
  double rho_threshold = 0.9;
  std::vector<SelectorKind> selectors = all_selectors();
  std::vector<ClassifierKind> classifiers = all_classifiers();
  std::vector<int> subset_sizes = {5, 10, 15, 20};
  LassoConfig lasso;
  ClassifierParams params;
  int selector_forest_trees = 200;
  bool balance = true;
  std::size_t balance_target = 0;  // 0: min(majority, minority * (1 + perturbations))
  unsigned workers = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep their defaults; `workers` is not serialized.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainingData {
  FeatureMatrix train;                         // original ROIs
  std::vector<FeatureMatrix> train_perturbed;  // same rows re-extracted per perturbation
  FeatureMatrix validation;
};

// Validation outcome of one grid cell. For LASSO, k is the number of nonzero
// coefficients at the cross-validated lambda.
struct ComboResult {
  SelectorKind selector = SelectorKind::kLasso;
  ClassifierKind classifier = ClassifierKind::kLogistic;
  int k = 0;
  bool skipped = false;
  std::string skip_reason;
  std::vector<std::string> features;
  double auc = 0, sensitivity = 0, specificity = 0, balanced_accuracy = 0;
  double threshold = 0.5;

  double mean_score() const { return (auc + sensitivity + specificity + balanced_accuracy) / 4.0; }
};

// Index of the best non-skipped combination: highest 4-metric mean, then
// higher AUC, then smaller k, then earlier position. Empty grid throws.
std::size_t model_selection(const std::vector<ComboResult>& results);

// Frozen inference pipeline: standardize the consumed columns, optionally
// project on principal axes, score, threshold.
class TrainedModel {
 public:
  static constexpr int kSchemaVersion = 1;

  SelectorKind selector = SelectorKind::kLasso;
  int k = 0;
  std::vector<std::string> input_features;
  Standardizer standardizer;
  std::optional<PcaModel> pca;
  std::shared_ptr<const Classifier> classifier;
  double threshold = 0.5;

  ClassifierKind classifier_kind() const { return classifier->kind(); }
  // Rows of X are samples over input_features, in that order.
  Eigen::VectorXd predict_matrix(const Eigen::MatrixXd& X) const;
  // Columns are looked up by name; extra columns are ignored.
  Eigen::VectorXd predict_proba(const FeatureMatrix& fm) const;
  std::vector<int> predict(const FeatureMatrix& fm) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

struct SelectionReport {
  std::vector<std::string> input, stable, discriminative, non_redundant;
  std::vector<double> icc, p_values;  // per input / per stable feature
  BalanceReport balance;
  double lasso_lambda = 0.0;
  std::vector<double> lasso_lambdas, lasso_cv_auc;
  // Selector outputs per subset size; PCA lists the components it keeps.
  nlohmann::json selector_outputs = nlohmann::json::object();
  std::vector<ComboResult> combos;
  std::size_t winner = 0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  TrainedModel model;
  SelectionReport report;
};

// Filters on the original training rows, balances, standardizes on the
// balanced training set, runs the selector x k x classifier grid against the
// validation split and freezes the winner with its validation threshold.
TrainResult train_pipeline(const TrainingData& data, const TrainConfig& cfg, const RngStream& rng);

}  // namespace ldsim::ml
