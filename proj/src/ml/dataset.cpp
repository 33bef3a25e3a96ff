#include "ldsim/ml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "ldsim/core/error.hpp"

namespace ldsim::ml {

std::size_t FeatureMatrix::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void FeatureMatrix::validate() const {
  const auto n = static_cast<std::size_t>(X.rows());
  if (labels.size() != n || groups.size() != n || row_ids.size() != n)
    throw DataError("feature matrix: row metadata size mismatch");
  if (names.size() != static_cast<std::size_t>(X.cols()))
    throw DataError("feature matrix: name count differs from column count");
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size())
    throw DataError("feature matrix: duplicate feature names");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("feature matrix: labels must be 0 or 1");
  if (!X.allFinite()) throw DataError("feature matrix: non-finite value");
}

std::vector<Eigen::Index> FeatureMatrix::column_indices(
    const std::vector<std::string>& wanted) const {
  std::unordered_map<std::string, Eigen::Index> at;
  for (std::size_t i = 0; i < names.size(); ++i) at[names[i]] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Index> out;
  for (const auto& w : wanted) {
    const auto it = at.find(w);
    if (it == at.end()) throw DataError("feature matrix: unknown feature " + w);
    out.push_back(it->second);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& wanted) const {
  const auto idx = column_indices(wanted);
  FeatureMatrix out = *this;
  out.names = wanted;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.X.col(static_cast<Eigen::Index>(j)) = X.col(idx[j]);
  return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<Eigen::Index>& rows) const {
  FeatureMatrix out;
  out.names = names;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(r);
    out.labels.push_back(labels[r]);
    out.groups.push_back(groups[r]);
    out.row_ids.push_back(row_ids[r]);
  }
  return out;
}

FeatureMatrix from_table(const radiomics::FeatureTable& t,
                         const std::string& perturbation) {
  FeatureMatrix fm;
  fm.names = t.names;
  std::vector<const radiomics::FeatureRow*> rows;
  for (const auto& r : t.rows)
    if (r.perturbation == perturbation) rows.push_back(&r);
  fm.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < t.names.size(); ++j)
      fm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i]->values[j];
    fm.labels.push_back(rows[i]->label);
    fm.groups.push_back(rows[i]->subject_id);
    fm.row_ids.push_back(rows[i]->nodule_id);
  }
  fm.validate();
  return fm;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw DataError("standardizer: no rows");
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().mean();
    s.scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw DataError("standardizer: column count mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

nlohmann::json Standardizer::to_json() const {
  return {{"mean", vector_to_json(mean)}, {"scale", vector_to_json(scale)}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = vector_from_json(j.at("mean"));
  s.scale = vector_from_json(j.at("scale"));
  if (s.mean.size() != s.scale.size()) throw DataError("standardizer: size mismatch");
  return s;
}

Eigen::VectorXd midranks(const Eigen::VectorXd& v) {
  const auto n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (i + j) / 2.0 + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) r[order[k]] = rank;
    i = j + 1;
  }
  return r;
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("spearman: need paired samples");
  const Eigen::VectorXd ra = midranks(a), rb = midranks(b);
  const Eigen::ArrayXd da = ra.array() - ra.mean(), db = rb.array() - rb.mean();
  const double den = std::sqrt((da * da).sum() * (db * db).sum());
  // Both constant counts as perfectly associated; one constant as unrelated.
  if (den == 0.0) return ((da * da).sum() == 0.0 && (db * db).sum() == 0.0) ? 1.0 : 0.0;
  return (da * db).sum() / den;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(r, c);
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r) throw DataError("matrix json: row count");
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::VectorXd row = vector_from_json(data.at(static_cast<std::size_t>(i)));
    if (row.size() != c) throw DataError("matrix json: column count");
    m.row(i) = row.transpose();
  }
  return m;
}

}  // namespace ldsim::ml
