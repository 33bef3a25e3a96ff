#include "ldsim/radiomics/features.hpp"

#include <algorithm>
#include <cmath>

#include "ldsim/core/error.hpp"

namespace ldsim::radiomics {

void FeatureVector::add(std::string name, double value) {
  names.push_back(std::move(name));
  values.push_back(value);
}

void FeatureVector::append(const FeatureVector& other,
                           const std::string& prefix) {
  for (std::size_t i = 0; i < other.size(); ++i)
    add(prefix + other.names[i], other.values[i]);
}

double FeatureVector::at(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("feature not found: " + name);
  return values[static_cast<std::size_t>(it - names.begin())];
}

bool FeatureVector::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace ldsim::radiomics
