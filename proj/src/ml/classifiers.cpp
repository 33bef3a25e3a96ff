#include "ldsim/ml/classifiers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ldsim/core/error.hpp"
#include "ldsim/ml/dataset.hpp"

namespace ldsim::ml {
namespace {

void check_training(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (X.rows() != static_cast<Eigen::Index>(y.size()))
    throw DataError("classifier: row count differs from label count");
  if (X.rows() == 0 || X.cols() == 0) throw DataError("classifier: empty training set");
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<long>(y.size()))
    throw DataError("classifier: training set has a single class");
}

double gini(double wp, double w) {
  if (w <= 0.0) return 0.0;
  const double p = wp / w;
  return 2.0 * p * (1.0 - p);
}

}  // namespace

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kAdaBoost:
      return "AdaBoost";
    case ClassifierKind::kDecisionTree:
      return "DecisionTree";
    case ClassifierKind::kKnn:
      return "KNN";
    case ClassifierKind::kLogistic:
      return "LogisticRegression";
    case ClassifierKind::kRandomForest:
      return "RandomForest";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
  for (auto k : all_classifiers())
    if (to_string(k) == text) return k;
  throw ConfigError("unknown classifier: " + std::string(text));
}

const std::vector<ClassifierKind>& all_classifiers() {
  static const std::vector<ClassifierKind> all = {
      ClassifierKind::kAdaBoost, ClassifierKind::kDecisionTree, ClassifierKind::kKnn,
      ClassifierKind::kLogistic, ClassifierKind::kRandomForest};
  return all;
}

void ClassifierParams::validate() const {
  if (tree_max_depth < 1 || forest_max_depth < 1) throw ConfigError("classifier: depth must be >= 1");
  if (knn_k < 1) throw ConfigError("classifier: knn k must be >= 1");
  if (!(logistic_c > 0)) throw ConfigError("classifier: logistic C must be > 0");
  if (forest_trees < 1 || boost_estimators < 1)
    throw ConfigError("classifier: ensemble size must be >= 1");
  if (!(boost_learning_rate > 0)) throw ConfigError("classifier: learning rate must be > 0");
}

nlohmann::json to_json(const ClassifierParams& p) {
  return {{"tree_max_depth", p.tree_max_depth},   {"knn_k", p.knn_k},
          {"logistic_c", p.logistic_c},           {"forest_trees", p.forest_trees},
          {"forest_max_depth", p.forest_max_depth}, {"boost_estimators", p.boost_estimators},
          {"boost_learning_rate", p.boost_learning_rate}};
}

ClassifierParams classifier_params_from_json(const nlohmann::json& j) {
  ClassifierParams p;
  try {
    p.tree_max_depth = j.value("tree_max_depth", p.tree_max_depth);
    p.knn_k = j.value("knn_k", p.knn_k);
    p.logistic_c = j.value("logistic_c", p.logistic_c);
    p.forest_trees = j.value("forest_trees", p.forest_trees);
    p.forest_max_depth = j.value("forest_max_depth", p.forest_max_depth);
    p.boost_estimators = j.value("boost_estimators", p.boost_estimators);
    p.boost_learning_rate = j.value("boost_learning_rate", p.boost_learning_rate);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("classifier params: ") + e.what());
  }
  p.validate();
  return p;
}

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const ClassifierParams& p) {
  p.validate();
  switch (kind) {
    case ClassifierKind::kAdaBoost:
      return std::make_unique<AdaBoost>(p.boost_estimators, p.boost_learning_rate);
    case ClassifierKind::kDecisionTree:
      return std::make_unique<DecisionTree>(p.tree_max_depth);
    case ClassifierKind::kKnn:
      return std::make_unique<Knn>(p.knn_k);
    case ClassifierKind::kLogistic:
      return std::make_unique<LogisticRegression>(p.logistic_c);
    case ClassifierKind::kRandomForest:
      return std::make_unique<RandomForest>(p.forest_trees, p.forest_max_depth);
  }
  throw ConfigError("unknown classifier kind");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  try {
    switch (parse_classifier_kind(j.at("kind").get<std::string>())) {
      case ClassifierKind::kAdaBoost:
        return std::make_unique<AdaBoost>(AdaBoost::from_json(j));
      case ClassifierKind::kDecisionTree:
        return std::make_unique<DecisionTree>(DecisionTree::from_json(j));
      case ClassifierKind::kKnn:
        return std::make_unique<Knn>(Knn::from_json(j));
      case ClassifierKind::kLogistic:
        return std::make_unique<LogisticRegression>(LogisticRegression::from_json(j));
      case ClassifierKind::kRandomForest:
        return std::make_unique<RandomForest>(RandomForest::from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model json: ") + e.what());
  }
  throw DataError("model json: unknown classifier");
}

// ---------------------------------------------------------------- CART

void DecisionTree::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) {
  check_training(X, y);
  fit_weighted(X, y, Eigen::VectorXd::Ones(X.rows()), max_features_ > 0 ? &rng : nullptr);
}

void DecisionTree::fit_weighted(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                const Eigen::VectorXd& w, RngStream* rng) {
  if (X.rows() != static_cast<Eigen::Index>(y.size()) || w.size() != X.rows())
    throw DataError("tree: inconsistent training arrays");
  nodes_.clear();
  decrease_ = Eigen::VectorXd::Zero(X.cols());
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (w[i] > 0.0) idx.push_back(i);
  if (idx.empty()) throw DataError("tree: no sample has positive weight");
  build(X, y, w, idx, 0, idx.size(), 0, rng);
}

int DecisionTree::build(const Eigen::MatrixXd& X, const std::vector<int>& y,
                        const Eigen::VectorXd& w, std::vector<Eigen::Index>& idx,
                        std::size_t lo, std::size_t hi, int depth, RngStream* rng) {
  double W = 0, Wp = 0;
  for (std::size_t k = lo; k < hi; ++k) {
    W += w[idx[k]];
    if (y[idx[k]]) Wp += w[idx[k]];
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({-1, 0.0, -1, -1, Wp / W});
  if (depth >= max_depth_ || Wp == 0.0 || Wp == W || hi - lo < 2) return id;

  const auto d = X.cols();
  std::vector<Eigen::Index> features(static_cast<std::size_t>(d));
  std::iota(features.begin(), features.end(), 0);
  std::size_t n_try = features.size();
  if (max_features_ > 0 && max_features_ < d && rng) {
    n_try = static_cast<std::size_t>(max_features_);
    for (std::size_t k = 0; k < n_try; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng->uniform_index(features.size() - k));
      std::swap(features[k], features[j]);
    }
  }

  const double parent = W * gini(Wp, W);
  double best_gain = 1e-12 * W;
  Eigen::Index best_f = -1;
  double best_t = 0.0;
  std::vector<std::pair<double, Eigen::Index>> col(hi - lo);
  for (std::size_t t = 0; t < n_try; ++t) {
    const Eigen::Index f = features[t];
    for (std::size_t k = lo; k < hi; ++k) col[k - lo] = {X(idx[k], f), idx[k]};
    std::sort(col.begin(), col.end());
    double wl = 0, wlp = 0;
    for (std::size_t k = 0; k + 1 < col.size(); ++k) {
      const Eigen::Index i = col[k].second;
      wl += w[i];
      if (y[i]) wlp += w[i];
      if (col[k].first == col[k + 1].first) continue;
      const double gain = parent - wl * gini(wlp, wl) - (W - wl) * gini(Wp - wlp, W - wl);
      if (gain > best_gain) {
        best_gain = gain;
        best_f = f;
        best_t = (col[k].first + col[k + 1].first) / 2.0;
        if (!(best_t < col[k + 1].first)) best_t = col[k].first;
      }
    }
  }
  if (best_f < 0) return id;

  const auto mid = std::stable_partition(
      idx.begin() + static_cast<long>(lo), idx.begin() + static_cast<long>(hi),
      [&](Eigen::Index i) { return X(i, best_f) <= best_t; });
  const auto split = static_cast<std::size_t>(mid - idx.begin());
  decrease_[best_f] += best_gain;
  nodes_[id].feature = static_cast<int>(best_f);
  nodes_[id].threshold = best_t;
  const int left = build(X, y, w, idx, lo, split, depth + 1, rng);
  const int right = build(X, y, w, idx, split, hi, depth + 1, rng);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double DecisionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (nodes_.empty()) throw DataError("tree: not fitted");
  int n = 0;
  while (nodes_[n].feature >= 0)
    n = x[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
  return nodes_[n].prob;
}

Eigen::VectorXd DecisionTree::predict_proba(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd p(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) p[i] = predict_row(X.row(i));
  return p;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.prob});
  return {{"kind", to_string(kind())},
          {"max_depth", max_depth_},
          {"max_features", max_features_},
          {"n_features", decrease_.size()},
          {"nodes", nodes}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t(j.at("max_depth").get<int>(), j.at("max_features").get<int>());
  for (const auto& n : j.at("nodes"))
    t.nodes_.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                        n.at(3).get<int>(), n.at(4).get<double>()});
  t.decrease_ = Eigen::VectorXd::Zero(j.at("n_features").get<Eigen::Index>());
  const int count = static_cast<int>(t.nodes_.size());
  for (const auto& n : t.nodes_)
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      throw DataError("model json: malformed tree");
  return t;
}

// ---------------------------------------------------------------- KNN

void Knn::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream&) {
  check_training(X, y);
  X_ = X;
  y_ = y;
}

Eigen::VectorXd Knn::predict_proba(const Eigen::MatrixXd& X) const {
  if (X_.rows() == 0) throw DataError("knn: not fitted");
  if (X.cols() != X_.cols()) throw DataError("knn: feature count mismatch");
  const auto n = static_cast<std::size_t>(X_.rows());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
  Eigen::VectorXd out(X.rows());
  std::vector<std::pair<double, std::size_t>> d(n);
  for (Eigen::Index q = 0; q < X.rows(); ++q) {
    for (std::size_t i = 0; i < n; ++i)
      d[i] = {(X_.row(static_cast<Eigen::Index>(i)) - X.row(q)).norm(), i};
    std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
    double wsum = 0, wpos = 0;
    if (d[0].first == 0.0) {
      for (std::size_t i = 0; i < k && d[i].first == 0.0; ++i) {
        wsum += 1;
        wpos += y_[d[i].second];
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        wsum += 1.0 / d[i].first;
        wpos += y_[d[i].second] / d[i].first;
      }
    }
    out[q] = wpos / wsum;
  }
  return out;
}

nlohmann::json Knn::to_json() const {
  return {{"kind", to_string(kind())}, {"k", k_}, {"X", matrix_to_json(X_)}, {"y", y_}};
}

Knn Knn::from_json(const nlohmann::json& j) {
  Knn m(j.at("k").get<int>());
  m.X_ = matrix_from_json(j.at("X"));
  m.y_ = j.at("y").get<std::vector<int>>();
  if (static_cast<Eigen::Index>(m.y_.size()) != m.X_.rows()) throw DataError("model json: knn size");
  return m;
}

// ---------------------------------------------------------------- logistic

void LogisticRegression::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream&) {
  fit(X, y);
}

void LogisticRegression::fit(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  check_training(X, y);
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd A(n, d + 1);
  A.col(0).setOnes();
  A.rightCols(d) = X;
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  auto objective = [&](const Eigen::VectorXd& t) {
    const Eigen::VectorXd z = A * t;
    double f = 0;
    for (Eigen::Index i = 0; i < n; ++i) f += softplus(z[i]) - yv[i] * z[i];
    return c_ * f + 0.5 * t.tail(d).squaredNorm();
  };
  double f = objective(theta);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd z = A * theta;
    Eigen::VectorXd p(n), h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(z[i]);
      h[i] = p[i] * (1.0 - p[i]);
    }
    Eigen::VectorXd g = c_ * A.transpose() * (p - yv);
    g.tail(d) += theta.tail(d);
    Eigen::MatrixXd H = c_ * A.transpose() * h.asDiagonal() * A;
    H.diagonal().tail(d).array() += 1.0;
    H(0, 0) += 1e-10;
    const Eigen::VectorXd step = H.ldlt().solve(g);
    double s = 1.0, f_new = objective(theta - step);
    while (f_new > f + 1e-12 * std::abs(f) && s > 1e-10) {
      s *= 0.5;
      f_new = objective(theta - s * step);
    }
    theta -= s * step;
    const double change = (s * step).cwiseAbs().maxCoeff();
    f = f_new;
    if (change < 1e-10) break;
  }
  if (!theta.allFinite()) throw NumericalError("logistic regression: non-finite coefficients");
  b_ = theta[0];
  w_ = theta.tail(d);
}

Eigen::VectorXd LogisticRegression::predict_proba(const Eigen::MatrixXd& X) const {
  if (X.cols() != w_.size()) throw DataError("logistic regression: feature count mismatch");
  const Eigen::VectorXd z = (X * w_).array() + b_;
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

nlohmann::json LogisticRegression::to_json() const {
  return {{"kind", to_string(kind())}, {"c", c_}, {"intercept", b_}, {"coef", vector_to_json(w_)}};
}

LogisticRegression LogisticRegression::from_json(const nlohmann::json& j) {
  LogisticRegression m(j.at("c").get<double>());
  m.b_ = j.at("intercept").get<double>();
  m.w_ = vector_from_json(j.at("coef"));
  return m;
}

// ---------------------------------------------------------------- forest

void RandomForest::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream& rng) {
  check_training(X, y);
  n_features_ = X.cols();
  const int max_features =
      std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(X.cols())))));
  trees_.assign(static_cast<std::size_t>(n_trees_), DecisionTree(max_depth_, max_features));
  for (int t = 0; t < n_trees_; ++t) {
    RngStream r = rng.substream("tree", static_cast<std::uint64_t>(t));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      w[static_cast<Eigen::Index>(r.uniform_index(static_cast<std::uint64_t>(X.rows())))] += 1.0;
    trees_[static_cast<std::size_t>(t)].fit_weighted(X, y, w, &r);
  }
}

Eigen::VectorXd RandomForest::predict_proba(const Eigen::MatrixXd& X) const {
  if (trees_.empty()) throw DataError("random forest: not fitted");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(X.rows());
  for (const auto& t : trees_) p += t.predict_proba(X);
  return p / static_cast<double>(trees_.size());
}

Eigen::VectorXd RandomForest::feature_importances() const {
  Eigen::VectorXd imp = Eigen::VectorXd::Zero(n_features_);
  int used = 0;
  for (const auto& t : trees_) {
    const double s = t.impurity_decrease().sum();
    if (s <= 0.0) continue;
    imp += t.impurity_decrease() / s;
    ++used;
  }
  if (used == 0) return Eigen::VectorXd::Constant(n_features_, 1.0 / static_cast<double>(n_features_));
  return imp / imp.sum();
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"kind", to_string(kind())},
          {"trees", n_trees_},
          {"max_depth", max_depth_},
          {"n_features", n_features_},
          {"estimators", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f(j.at("trees").get<int>(), j.at("max_depth").get<int>());
  f.n_features_ = j.at("n_features").get<Eigen::Index>();
  for (const auto& t : j.at("estimators")) f.trees_.push_back(DecisionTree::from_json(t));
  return f;
}

// ---------------------------------------------------------------- AdaBoost

void AdaBoost::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, RngStream&) {
  check_training(X, y);
  const Eigen::Index n = X.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  stumps_.clear();
  alphas_.clear();
  for (int m = 0; m < n_estimators_; ++m) {
    DecisionTree stump(1);
    stump.fit_weighted(X, y, w, nullptr);
    const Eigen::VectorXd p = stump.predict_proba(X);
    double err = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if ((p[i] > 0.5 ? 1 : 0) != y[static_cast<std::size_t>(i)]) err += w[i];
    err /= w.sum();
    if (err <= 0.0) {
      stumps_.push_back(std::move(stump));
      alphas_.push_back(1.0);
      break;
    }
    if (err >= 0.5) {
      if (stumps_.empty()) {
        stumps_.push_back(std::move(stump));
        alphas_.push_back(1.0);
      }
      break;
    }
    const double alpha = learning_rate_ * std::log((1.0 - err) / err);
    for (Eigen::Index i = 0; i < n; ++i)
      if ((p[i] > 0.5 ? 1 : 0) != y[static_cast<std::size_t>(i)]) w[i] *= std::exp(alpha);
    w /= w.sum();
    stumps_.push_back(std::move(stump));
    alphas_.push_back(alpha);
  }
}

Eigen::VectorXd AdaBoost::predict_proba(const Eigen::MatrixXd& X) const {
  if (stumps_.empty()) throw DataError("adaboost: not fitted");
  Eigen::VectorXd margin = Eigen::VectorXd::Zero(X.rows());
  double total = 0;
  for (std::size_t m = 0; m < stumps_.size(); ++m) {
    const Eigen::VectorXd p = stumps_[m].predict_proba(X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) margin[i] += alphas_[m] * (p[i] > 0.5 ? 1.0 : -1.0);
    total += alphas_[m];
  }
  return (margin / total).unaryExpr([](double v) { return sigmoid(v); });
}

nlohmann::json AdaBoost::to_json() const {
  nlohmann::json stumps = nlohmann::json::array();
  for (const auto& s : stumps_) stumps.push_back(s.to_json());
  return {{"kind", to_string(kind())},
          {"estimators", n_estimators_},
          {"learning_rate", learning_rate_},
          {"alphas", alphas_},
          {"stumps", stumps}};
}

AdaBoost AdaBoost::from_json(const nlohmann::json& j) {
  AdaBoost a(j.at("estimators").get<int>(), j.at("learning_rate").get<double>());
  a.alphas_ = j.at("alphas").get<std::vector<double>>();
  for (const auto& s : j.at("stumps")) a.stumps_.push_back(DecisionTree::from_json(s));
  if (a.alphas_.size() != a.stumps_.size()) throw DataError("model json: adaboost size");
  return a;
}

}  // namespace ldsim::ml
