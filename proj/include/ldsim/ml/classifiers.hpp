#pragma once

#include <Eigen/Core>
#include <memory>
#include <nlohmann/json.hpp>
#include <string_view>
#include <vector>

#include "ldsim/core/rng.hpp"

namespace ldsim::ml {

enum class ClassifierKind { kAdaBoost, kDecisionTree, kKnn, kLogistic, kRandomForest };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view text);
const std::vector<ClassifierKind>& all_classifiers();

struct ClassifierParams {
  int tree_max_depth = 8;
  int knn_k = 5;
  double logistic_c = 1.0;  // inverse L2 strength on the summed log-loss
  int forest_trees = 200;
  int forest_max_depth = 32;
  int boost_estimators = 100;
  double boost_learning_rate = 1.0;

  void validate() const;
};

nlohmann::json to_json(const ClassifierParams& p);
ClassifierParams classifier_params_from_json(const nlohmann::json& j);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassifierKind kind() const = 0;
  // y in {0, 1}; both classes required. `rng` drives any randomization.
  virtual void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) = 0;
  // P(y = 1 | x) per row, in [0, 1].
  virtual Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const ClassifierParams& p);
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

// CART with Gini impurity and weighted samples. Split thresholds are
// midpoints between consecutive distinct values; x <= t goes left.
class DecisionTree : public Classifier {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double prob = 0.0;  // weighted positive fraction
  };

  explicit DecisionTree(int max_depth = 8, int max_features = 0)
      : max_depth_(max_depth), max_features_(max_features) {}

  ClassifierKind kind() const override { return ClassifierKind::kDecisionTree; }
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) override;
  // max_features = 0 considers every feature at each split; otherwise that
  // many are drawn without replacement per node.
  void fit_weighted(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const Eigen::VectorXd& w, RngStream* rng);
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  nlohmann::json to_json() const override;
  static DecisionTree from_json(const nlohmann::json& j);

  // Total weighted impurity decrease per feature (unnormalized).
  const Eigen::VectorXd& impurity_decrease() const { return decrease_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  int build(const Eigen::MatrixXd& X, const std::vector<int>& y, const Eigen::VectorXd& w,
            std::vector<Eigen::Index>& idx, std::size_t lo, std::size_t hi, int depth,
            RngStream* rng);

  int max_depth_, max_features_;
  std::vector<Node> nodes_;
  Eigen::VectorXd decrease_;
};

// Distance-weighted k nearest neighbours (Euclidean). Exact matches take all
// the weight; distance ties are broken by training row order.
class Knn : public Classifier {
 public:
  explicit Knn(int k = 5) : k_(k) {}
  ClassifierKind kind() const override { return ClassifierKind::kKnn; }
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  nlohmann::json to_json() const override;
  static Knn from_json(const nlohmann::json& j);

 private:
  int k_;
  Eigen::MatrixXd X_;
  std::vector<int> y_;
};

// L2-penalized logistic regression: minimize C * sum log-loss + |w|^2 / 2
// (intercept unpenalized) by damped Newton iterations.
class LogisticRegression : public Classifier {
 public:
  explicit LogisticRegression(double c = 1.0) : c_(c) {}
  ClassifierKind kind() const override { return ClassifierKind::kLogistic; }
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) override;
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y);
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  nlohmann::json to_json() const override;
  static LogisticRegression from_json(const nlohmann::json& j);

  const Eigen::VectorXd& coef() const { return w_; }
  double intercept() const { return b_; }

 private:
  double c_;
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

// Bagged CART trees with sqrt(d) candidate features per split.
class RandomForest : public Classifier {
 public:
  RandomForest(int trees = 200, int max_depth = 32) : n_trees_(trees), max_depth_(max_depth) {}
  ClassifierKind kind() const override { return ClassifierKind::kRandomForest; }
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  nlohmann::json to_json() const override;
  static RandomForest from_json(const nlohmann::json& j);

  // Mean over trees of each tree's normalized impurity decrease; sums to 1.
  Eigen::VectorXd feature_importances() const;

 private:
  int n_trees_, max_depth_;
  Eigen::Index n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

// Discrete AdaBoost (SAMME, two classes) over depth-1 trees. The probability
// is the logistic of the alpha-weighted vote margin normalized by sum alpha.
class AdaBoost : public Classifier {
 public:
  AdaBoost(int estimators = 100, double learning_rate = 1.0)
      : n_estimators_(estimators), learning_rate_(learning_rate) {}
  ClassifierKind kind() const override { return ClassifierKind::kAdaBoost; }
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  nlohmann::json to_json() const override;
  static AdaBoost from_json(const nlohmann::json& j);

  std::size_t stage_count() const { return stumps_.size(); }

 private:
  int n_estimators_;
  double learning_rate_;
  std::vector<DecisionTree> stumps_;
  std::vector<double> alphas_;
};

}  // namespace ldsim::ml
