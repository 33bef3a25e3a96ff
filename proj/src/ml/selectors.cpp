#include "ldsim/ml/selectors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "ldsim/core/error.hpp"
#include "ldsim/ml/classifiers.hpp"
#include "ldsim/ml/dataset.hpp"
#include "ldsim/ml/roc.hpp"
#include "ldsim/radiomics/firstorder.hpp"

namespace ldsim::ml {
namespace {

void check_xy(const Eigen::MatrixXd& X, const std::vector<int>& y, const char* who) {
  if (X.rows() != static_cast<Eigen::Index>(y.size()))
    throw DataError(std::string(who) + ": row count differs from label count");
  if (X.rows() == 0 || X.cols() == 0) throw DataError(std::string(who) + ": empty input");
  for (int v : y)
    if (v != 0 && v != 1) throw DataError(std::string(who) + ": labels must be 0 or 1");
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& yv, double b0,
                          const Eigen::VectorXd& beta, double lambda) {
  const Eigen::VectorXd eta = (X * beta).array() + b0;
  double f = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) f += softplus(eta[i]) - yv[i] * eta[i];
  return f / static_cast<double>(X.rows()) + lambda * beta.lpNorm<1>();
}

// Indices sorted by key descending, ties by index ascending.
std::vector<Eigen::Index> order_desc(const Eigen::VectorXd& key) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(key.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return key[a] > key[b]; });
  return idx;
}

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
  return out;
}

}  // namespace

std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::kLasso:
      return "LASSO";
    case SelectorKind::kMrmr:
      return "MRMR";
    case SelectorKind::kPca:
      return "PCA";
    case SelectorKind::kRfe:
      return "RFE";
    case SelectorKind::kRfImportance:
      return "RF";
  }
  return "?";
}

SelectorKind parse_selector_kind(std::string_view text) {
  for (SelectorKind k : all_selectors())
    if (to_string(k) == text) return k;
  throw ConfigError("unknown selector '" + std::string(text) + "'");
}

const std::vector<SelectorKind>& all_selectors() {
  static const std::vector<SelectorKind> all = {SelectorKind::kLasso, SelectorKind::kMrmr,
                                                SelectorKind::kPca, SelectorKind::kRfe,
                                                SelectorKind::kRfImportance};
  return all;
}

LassoFit weighted_lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& w, double lambda, const LassoFit* warm,
                           double tol, int max_sweeps) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (z.size() != n || w.size() != n) throw DataError("lasso: size mismatch");
  if (!(lambda >= 0.0)) throw ConfigError("lasso: lambda must be >= 0");
  const double nd = static_cast<double>(n);
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw DataError("lasso: weights sum to zero");
  LassoFit fit;
  fit.beta = Eigen::VectorXd::Zero(d);
  if (warm != nullptr && warm->beta.size() == d) {
    fit.beta = warm->beta;
    fit.intercept = warm->intercept;
  }
  Eigen::VectorXd curv(d);
  for (Eigen::Index j = 0; j < d; ++j) curv[j] = (w.array() * X.col(j).array().square()).sum() / nd;
  Eigen::VectorXd r = z - X * fit.beta;
  r.array() -= fit.intercept;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double max_change = 0;
    const double db = (w.array() * r.array()).sum() / wsum;
    fit.intercept += db;
    r.array() -= db;
    max_change = std::abs(db);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (curv[j] <= 0.0) {
        fit.beta[j] = 0.0;
        continue;
      }
      const double old = fit.beta[j];
      const double rho = (w.array() * X.col(j).array() * r.array()).sum() / nd + curv[j] * old;
      const double next = soft_threshold(rho, lambda) / curv[j];
      if (next != old) {
        r -= (next - old) * X.col(j);
        fit.beta[j] = next;
        max_change = std::max(max_change, std::abs(next - old) * std::sqrt(curv[j]));
      }
    }
    fit.iterations = sweep;
    if (max_change < tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  check_xy(X, y, "lasso");
  Eigen::VectorXd yv(X.rows());
  for (Eigen::Index i = 0; i < yv.size(); ++i) yv[i] = y[static_cast<std::size_t>(i)];
  yv.array() -= yv.mean();
  return (X.transpose() * yv).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

LassoFit logistic_lasso(const Eigen::MatrixXd& X, const std::vector<int>& y, double lambda,
                        const LassoFit* warm, int max_outer) {
  check_xy(X, y, "lasso");
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
  LassoFit cur;
  cur.beta = Eigen::VectorXd::Zero(d);
  if (warm != nullptr && warm->beta.size() == d) {
    cur.beta = warm->beta;
    cur.intercept = warm->intercept;
  } else {
    const double ybar = std::clamp(yv.mean(), 1e-6, 1.0 - 1e-6);
    cur.intercept = std::log(ybar / (1.0 - ybar));
  }
  double f = logistic_objective(X, yv, cur.intercept, cur.beta, lambda);
  double last_delta = 0;
  for (int outer = 1; outer <= max_outer; ++outer) {
    const Eigen::VectorXd eta = (X * cur.beta).array() + cur.intercept;
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(eta[i]);
      w[i] = std::max(p * (1.0 - p), 1e-5);
      z[i] = eta[i] + (yv[i] - p) / w[i];
    }
    const LassoFit cand = weighted_lasso_cd(X, z, w, lambda, &cur, 1e-10, 10000);
    // Step halving on the true objective keeps the iteration monotone.
    double s = 1.0;
    Eigen::VectorXd beta = cand.beta;
    double b0 = cand.intercept;
    double f_new = logistic_objective(X, yv, b0, beta, lambda);
    while (f_new > f + 1e-14 * std::abs(f) && s > 1e-8) {
      s *= 0.5;
      beta = cur.beta + s * (cand.beta - cur.beta);
      b0 = cur.intercept + s * (cand.intercept - cur.intercept);
      f_new = logistic_objective(X, yv, b0, beta, lambda);
    }
    const double change =
        std::max((beta - cur.beta).cwiseAbs().maxCoeff(), std::abs(b0 - cur.intercept));
    last_delta = f - f_new;
    cur.beta = beta;
    cur.intercept = b0;
    cur.iterations = outer;
    f = f_new;
    if (change < 1e-8 || (last_delta >= 0 && last_delta < 1e-13 * (1.0 + std::abs(f)))) {
      cur.converged = true;
      break;
    }
  }
  if (!cur.converged || !cur.beta.allFinite()) {
    std::ostringstream os;
    os << "lasso: IRLS did not converge (lambda=" << lambda << ", iterations=" << cur.iterations
       << ", objective=" << f << ", last decrease=" << last_delta
       << ", nonzero=" << (cur.beta.array() != 0.0).count() << ")";
    throw NumericalError(os.str());
  }
  return cur;
}

void LassoConfig::validate() const {
  if (n_lambdas < 1) throw ConfigError("lasso: n_lambdas must be >= 1");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ConfigError("lasso: min_ratio must be in (0, 1]");
  if (folds < 2) throw ConfigError("lasso: folds must be >= 2");
}

LassoSelection lasso_select(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const std::vector<std::string>& groups, const LassoConfig& cfg,
                            const RngStream& rng) {
  cfg.validate();
  check_xy(X, y, "lasso");
  if (groups.size() != y.size()) throw DataError("lasso: group count differs from row count");
  LassoSelection sel;
  const double lmax = lasso_lambda_max(X, y);
  for (int l = 0; l < cfg.n_lambdas; ++l) {
    const double t = cfg.n_lambdas == 1 ? 0.0 : static_cast<double>(l) / (cfg.n_lambdas - 1);
    sel.lambdas.push_back(lmax * std::pow(cfg.min_ratio, t));
  }

  // Folds are assigned per subject so no subject straddles train and test.
  const std::set<std::string> group_set(groups.begin(), groups.end());
  std::vector<std::string> uniq(group_set.begin(), group_set.end());
  if (static_cast<int>(uniq.size()) < cfg.folds)
    throw DataError("lasso: fewer subjects than CV folds");
  RngStream fold_rng = rng.substream("lasso_folds");
  fold_rng.shuffle(std::span<std::string>(uniq));
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < uniq.size(); ++i) fold_of[uniq[i]] = static_cast<int>(i) % cfg.folds;

  std::vector<double> auc_sum(sel.lambdas.size(), 0.0);
  int used = 0;
  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i)
      (fold_of[groups[i]] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
    std::vector<int> ytr, yte;
    for (auto i : tr) ytr.push_back(y[static_cast<std::size_t>(i)]);
    for (auto i : te) yte.push_back(y[static_cast<std::size_t>(i)]);
    auto has_both = [](const std::vector<int>& v) {
      const auto p = std::count(v.begin(), v.end(), 1);
      return p > 0 && p < static_cast<long>(v.size());
    };
    if (!has_both(ytr) || !has_both(yte)) continue;
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(tr.size()), X.cols());
    Eigen::MatrixXd Xte(static_cast<Eigen::Index>(te.size()), X.cols());
    for (std::size_t i = 0; i < tr.size(); ++i) Xtr.row(static_cast<Eigen::Index>(i)) = X.row(tr[i]);
    for (std::size_t i = 0; i < te.size(); ++i) Xte.row(static_cast<Eigen::Index>(i)) = X.row(te[i]);
    LassoFit path;
    const LassoFit* warm = nullptr;
    for (std::size_t l = 0; l < sel.lambdas.size(); ++l) {
      path = logistic_lasso(Xtr, ytr, sel.lambdas[l], warm);
      warm = &path;
      const Eigen::VectorXd eta = (Xte * path.beta).array() + path.intercept;
      auc_sum[l] += roc_auc(std::vector<double>(eta.data(), eta.data() + eta.size()), yte).auc;
    }
    ++used;
  }
  if (used == 0) throw DataError("lasso: no CV fold holds both classes in train and test");
  std::size_t best = 0;
  for (std::size_t l = 0; l < sel.lambdas.size(); ++l) {
    sel.cv_auc.push_back(auc_sum[l] / used);
    if (sel.cv_auc[l] > sel.cv_auc[best] + 1e-12) best = l;
  }
  sel.lambda = sel.lambdas[best];
  const LassoFit* warm = nullptr;
  for (std::size_t l = 0; l <= best; ++l) {
    sel.fit = logistic_lasso(X, y, sel.lambdas[l], warm);
    warm = &sel.fit;
  }
  for (Eigen::Index j : order_desc(sel.fit.beta.cwiseAbs()))
    if (sel.fit.beta[j] != 0.0) sel.selected.push_back(j);
  return sel;
}

std::vector<int> quantile_bins(const Eigen::VectorXd& col, int bins) {
  if (bins < 2) throw ConfigError("quantile_bins: bins must be >= 2");
  if (col.size() == 0) throw DataError("quantile_bins: empty column");
  std::vector<double> sorted(col.data(), col.data() + col.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b)
    edges.push_back(radiomics::percentile_sorted(sorted, 100.0 * b / bins));
  std::vector<int> out(static_cast<std::size_t>(col.size()));
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    int b = 0;
    for (double e : edges) b += col[i] > e ? 1 : 0;
    out[static_cast<std::size_t>(i)] = b;
  }
  return out;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw DataError("mutual_information: size mismatch");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  double mi = 0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
  return std::max(0.0, mi);
}

std::vector<Eigen::Index> mrmr_order(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                     std::size_t k, int bins) {
  check_xy(X, y, "mrmr");
  const auto d = static_cast<std::size_t>(X.cols());
  if (k < 1 || k > d) throw ConfigError("mrmr: k must be in [1, n_features]");
  std::vector<std::vector<int>> disc(d);
  std::vector<double> relevance(d), redundancy(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    disc[j] = quantile_bins(X.col(static_cast<Eigen::Index>(j)), bins);
    relevance[j] = mutual_information(disc[j], y);
  }
  std::vector<bool> taken(d, false);
  std::vector<Eigen::Index> order;
  while (order.size() < k) {
    std::size_t best = d;
    double best_score = 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (taken[j]) continue;
      const double score =
          order.empty() ? relevance[j] : relevance[j] - redundancy[j] / static_cast<double>(order.size());
      if (best == d || score > best_score + 1e-12) {
        best = j;
        best_score = score;
      }
    }
    taken[best] = true;
    order.push_back(static_cast<Eigen::Index>(best));
    for (std::size_t j = 0; j < d; ++j)
      if (!taken[j]) redundancy[j] += mutual_information(disc[j], disc[best]);
  }
  return order;
}

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw DataError("pca: feature count mismatch");
  return (X.rowwise() - mean.transpose()) * components;
}

Eigen::MatrixXd PcaModel::inverse_transform(const Eigen::MatrixXd& Z) const {
  if (Z.cols() != components.cols()) throw DataError("pca: component count mismatch");
  return (Z * components.transpose()).rowwise() + mean.transpose();
}

nlohmann::json PcaModel::to_json() const {
  return {{"mean", vector_to_json(mean)},
          {"components", matrix_to_json(components)},
          {"explained_variance", vector_to_json(explained_variance)}};
}

PcaModel PcaModel::from_json(const nlohmann::json& j) {
  PcaModel m;
  m.mean = vector_from_json(j.at("mean"));
  m.components = matrix_from_json(j.at("components"));
  m.explained_variance = vector_from_json(j.at("explained_variance"));
  if (m.components.rows() != m.mean.size()) throw DataError("pca: inconsistent model");
  return m;
}

PcaModel pca_fit(const Eigen::MatrixXd& X, Eigen::Index k) {
  if (X.rows() < 2 || X.cols() == 0) throw DataError("pca: need >= 2 rows and >= 1 column");
  if (k < 1) throw ConfigError("pca: k must be >= 1");
  PcaModel m;
  m.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd C = X.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = C.transpose() * C / static_cast<double>(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("pca: eigen decomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues().reverse();
  const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
  const double top = std::max(ev[0], 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > 1e-10 * top && ev[i] > 0.0) ++rank;
  if (k > rank)
    throw DataError("pca: k=" + std::to_string(k) + " exceeds rank " + std::to_string(rank));
  m.components = vecs.leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    m.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (m.components(arg, c) < 0) m.components.col(c) *= -1.0;
  }
  m.explained_variance = ev.head(k);
  return m;
}

std::vector<Eigen::Index> rfe_order(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                    std::size_t k_min, double c) {
  check_xy(X, y, "rfe");
  const auto d = static_cast<std::size_t>(X.cols());
  if (k_min < 1 || k_min > d) throw ConfigError("rfe: k must be in [1, n_features]");
  std::vector<Eigen::Index> active(d);
  std::iota(active.begin(), active.end(), Eigen::Index{0});
  std::vector<Eigen::Index> eliminated;
  LogisticRegression lr(c);
  while (active.size() > k_min) {
    lr.fit(take_cols(X, active), y);
    std::size_t worst = 0;
    for (std::size_t j = 1; j < active.size(); ++j)
      if (std::abs(lr.coef()[static_cast<Eigen::Index>(j)]) <
          std::abs(lr.coef()[static_cast<Eigen::Index>(worst)]))
        worst = j;
    eliminated.push_back(active[worst]);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  lr.fit(take_cols(X, active), y);
  std::vector<Eigen::Index> order;
  for (Eigen::Index j : order_desc(lr.coef().cwiseAbs())) order.push_back(active[static_cast<std::size_t>(j)]);
  order.insert(order.end(), eliminated.rbegin(), eliminated.rend());
  return order;
}

std::vector<Eigen::Index> rf_importance_order(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                              RngStream& rng, int trees,
                                              Eigen::VectorXd* importances) {
  check_xy(X, y, "rf_importance");
  RandomForest rf(trees, 32);
  rf.fit(X, y, rng);
  const Eigen::VectorXd imp = rf.feature_importances();
  if (importances != nullptr) *importances = imp;
  return order_desc(imp);
}

}  // namespace ldsim::ml
