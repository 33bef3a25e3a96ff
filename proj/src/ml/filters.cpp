#include "ldsim/ml/filters.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ldsim/core/error.hpp"

namespace ldsim::ml {

double icc_a1(const Eigen::MatrixXd& t) {
  const double n = static_cast<double>(t.rows()), k = static_cast<double>(t.cols());
  if (t.rows() < 2 || t.cols() < 2) throw DataError("icc: need >= 2 subjects and >= 2 raters");
  const double grand = t.mean();
  const Eigen::VectorXd row_mean = t.rowwise().mean();
  const Eigen::RowVectorXd col_mean = t.colwise().mean();
  const double ssr = k * (row_mean.array() - grand).square().sum();
  const double ssc = n * (col_mean.array() - grand).square().sum();
  const double sst = (t.array() - grand).square().sum();
  const double sse = std::max(0.0, sst - ssr - ssc);
  const double msr = ssr / (n - 1), msc = ssc / (k - 1), mse = sse / ((n - 1) * (k - 1));
  const double den = msr + (k - 1) * mse + k * (msc - mse) / n;
  if (den <= 0.0 || sst <= 1e-300) return 1.0;
  return (msr - mse) / den;
}

MannWhitney mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DataError("mann_whitney: both samples must be non-empty");
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  Eigen::VectorXd all(static_cast<Eigen::Index>(a.size() + b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) all[static_cast<Eigen::Index>(i)] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) all[static_cast<Eigen::Index>(a.size() + i)] = b[i];
  const Eigen::VectorXd r = midranks(all);
  const double r1 = r.head(static_cast<Eigen::Index>(a.size())).sum();
  MannWhitney m;
  m.u = r1 - n1 * (n1 + 1) / 2.0;
  // Tie correction: sum over tie groups of t^3 - t.
  std::map<double, double> groups;
  for (Eigen::Index i = 0; i < all.size(); ++i) groups[all[i]] += 1.0;
  double ties = 0;
  for (const auto& [v, c] : groups) ties += c * c * c - c;
  const double n = n1 + n2;
  const double var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)));
  if (var <= 0.0) return m;  // every value tied
  const double diff = m.u - n1 * n2 / 2.0;
  const double cc = diff > 0 ? -0.5 : diff < 0 ? 0.5 : 0.0;
  m.z = (diff + cc) / std::sqrt(var);
  m.p = std::min(1.0, std::erfc(std::abs(m.z) / std::sqrt(2.0)));
  return m;
}

StabilityResult stability_filter(const FeatureMatrix& original,
                                 const std::vector<FeatureMatrix>& perturbed,
                                 double icc_threshold) {
  if (perturbed.empty()) throw DataError("stability: no perturbed extractions");
  const auto n = original.rows();
  std::vector<std::vector<Eigen::Index>> match(perturbed.size());
  for (std::size_t p = 0; p < perturbed.size(); ++p) {
    if (perturbed[p].names != original.names)
      throw DataError("stability: perturbed features differ from the original set");
    std::map<std::pair<std::string, std::string>, Eigen::Index> at;
    for (Eigen::Index i = 0; i < perturbed[p].rows(); ++i)
      at[{perturbed[p].groups[i], perturbed[p].row_ids[i]}] = i;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto it = at.find({original.groups[i], original.row_ids[i]});
      if (it == at.end())
        throw DataError("stability: no perturbed row for " + original.row_ids[i]);
      match[p].push_back(it->second);
    }
  }
  StabilityResult r;
  Eigen::MatrixXd table(n, static_cast<Eigen::Index>(perturbed.size() + 1));
  for (Eigen::Index j = 0; j < original.cols(); ++j) {
    table.col(0) = original.X.col(j);
    for (std::size_t p = 0; p < perturbed.size(); ++p)
      for (Eigen::Index i = 0; i < n; ++i)
        table(i, static_cast<Eigen::Index>(p + 1)) = perturbed[p].X(match[p][i], j);
    const double v = icc_a1(table);
    r.icc.push_back(v);
    if (v >= icc_threshold) r.kept.push_back(original.names[j]);
  }
  return r;
}

DiscriminativeResult discriminative_filter(const FeatureMatrix& fm, double p_threshold) {
  if (fm.count(0) == 0 || fm.count(1) == 0)
    throw DataError("discriminative filter: both classes are required");
  DiscriminativeResult r;
  std::vector<std::size_t> passing;
  for (Eigen::Index j = 0; j < fm.cols(); ++j) {
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < fm.rows(); ++i) (fm.labels[i] ? a : b).push_back(fm.X(i, j));
    r.p.push_back(mann_whitney(a, b).p);
    if (r.p.back() < p_threshold) passing.push_back(static_cast<std::size_t>(j));
  }
  std::stable_sort(passing.begin(), passing.end(),
                   [&](std::size_t x, std::size_t y) { return r.p[x] < r.p[y]; });
  for (auto j : passing) r.kept.push_back(fm.names[j]);
  return r;
}

std::vector<std::string> redundancy_filter(const FeatureMatrix& fm,
                                           const std::vector<std::string>& ordered,
                                           double rho_threshold) {
  const auto idx = fm.column_indices(ordered);
  std::vector<std::string> kept;
  std::vector<Eigen::VectorXd> kept_cols;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::VectorXd col = fm.X.col(idx[k]);
    bool redundant = false;
    for (const auto& other : kept_cols)
      if (std::abs(spearman(col, other)) > rho_threshold) {
        redundant = true;
        break;
      }
    if (redundant) continue;
    kept.push_back(ordered[k]);
    kept_cols.push_back(col);
  }
  return kept;
}

}  // namespace ldsim::ml
