#pragma once

#include <string>
#include <vector>

namespace ldsim::radiomics {

// Ordered (name, value) list. Names and values are parallel arrays.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  void add(std::string name, double value);
  // Appends `other` with every name prefixed by `prefix`.
  void append(const FeatureVector& other, const std::string& prefix);
  // Value by exact name; throws DataError if absent.
  double at(const std::string& name) const;
  bool all_finite() const;
};

}  // namespace ldsim::radiomics
