#pragma once

#include <string>
#include <vector>

#include "ldsim/radiomics/features.hpp"
#include "ldsim/radiomics/roi.hpp"

namespace ldsim::radiomics {

// Percentile with linear interpolation between order statistics at position
// q/100 * (n - 1). `sorted` must be ascending and non-empty.
double percentile_sorted(const std::vector<double>& sorted, double q);

// 18 features over the masked intensities; Entropy and Uniformity use the
// discretized gray-level histogram. Skewness and kurtosis are 0 for a
// zero-variance ROI.
FeatureVector firstorder_features(const RoiSample& roi);

const std::vector<std::string>& firstorder_feature_names();

}  // namespace ldsim::radiomics
