#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ldsim/radiomics/extract.hpp"

namespace ldsim::ml {

// Samples x features with binary labels and a group id (subject) per row.
struct FeatureMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  std::vector<int> labels;
  std::vector<std::string> groups;
  std::vector<std::string> row_ids;  // nodule ids

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  std::size_t count(int label) const;
  // No NaN, unique names, labels in {0, 1}, consistent sizes.
  void validate() const;
  // Column indices of `wanted`, in that order; unknown names throw DataError.
  std::vector<Eigen::Index> column_indices(const std::vector<std::string>& wanted) const;
  FeatureMatrix select_columns(const std::vector<std::string>& wanted) const;
  FeatureMatrix select_rows(const std::vector<Eigen::Index>& rows) const;
};

// Rows of `t` whose perturbation equals `perturbation`.
FeatureMatrix from_table(const radiomics::FeatureTable& t,
                         const std::string& perturbation = "none");

// Per-column affine scaling fitted on training rows only. Zero-variance
// columns get scale 1.
struct Standardizer {
  Eigen::VectorXd mean, scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

// Midranks (1-based, ties share the mean rank).
Eigen::VectorXd midranks(const Eigen::VectorXd& v);
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}
// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace ldsim::ml
