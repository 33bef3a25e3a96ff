#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "ldsim/radiomics/features.hpp"
#include "ldsim/radiomics/roi.hpp"

namespace ldsim::radiomics {

using Offset = std::array<int, 3>;

// The 13 unique unit offsets of the 26-neighbourhood (one per +/- pair).
const std::array<Offset, 13>& unique_directions();

// Co-occurrence counts for one offset, symmetrized: entry (i-1, j-1) counts
// ordered pairs (v, v + d) and (v + d, v) with levels (i, j), both in mask.
Eigen::MatrixXd glcm_matrix(const RoiSample& roi, const Offset& d);

// Run-length counts along one offset: entry (i-1, r-1) is the number of
// maximal runs of level i and length r inside the mask. Columns span the
// longest possible run for the grid.
Eigen::MatrixXd glrlm_matrix(const RoiSample& roi, const Offset& d);

// Size-zone counts: entry (i-1, s-1) is the number of 26-connected zones of
// level i with s voxels.
Eigen::MatrixXd glszm_matrix(const RoiSample& roi);

// Neighbourhood tone difference: per level, n = voxels with at least one
// in-mask 26-neighbour, s = sum |i - mean neighbour level| over them.
struct Ngtdm {
  Eigen::VectorXd n, s;
};
Ngtdm ngtdm_matrix(const RoiSample& roi);

// Dependence counts: entry (i-1, k-1) counts voxels of level i whose
// dependence size (1 + in-mask 26-neighbours with |level difference| <=
// alpha) is k. 27 columns.
Eigen::MatrixXd gldm_matrix(const RoiSample& roi, int alpha = 0);

// Feature families. GLCM and GLRLM features are computed per direction and
// averaged over the directions with a non-empty matrix. Undefined values
// follow one policy: correlation-type features of a zero-variance matrix are
// 1, any other division by zero yields 0.
FeatureVector glcm_features(const RoiSample& roi);
FeatureVector glrlm_features(const RoiSample& roi);
FeatureVector glszm_features(const RoiSample& roi);
FeatureVector ngtdm_features(const RoiSample& roi);
FeatureVector gldm_features(const RoiSample& roi);

// Features of a single (unnormalized) matrix, exposed for oracle tests.
FeatureVector glcm_features_from(const Eigen::MatrixXd& counts);
FeatureVector glrlm_features_from(const Eigen::MatrixXd& counts,
                                  double voxel_count);

const std::vector<std::string>& glcm_feature_names();
const std::vector<std::string>& glrlm_feature_names();
const std::vector<std::string>& glszm_feature_names();
const std::vector<std::string>& ngtdm_feature_names();
const std::vector<std::string>& gldm_feature_names();

}  // namespace ldsim::radiomics
