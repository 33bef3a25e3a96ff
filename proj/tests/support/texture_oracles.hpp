#pragma once

// Brute-force texture matrix oracles shared by the unit and acceptance tests.
// They enumerate voxel pairs directly and share no code with the library.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <tuple>
#include <vector>

#include "ldsim/core/rng.hpp"
#include "ldsim/radiomics/roi.hpp"
#include "ldsim/radiomics/texture.hpp"

namespace ldsim::radiomics::oracle {

// Random ROI with random levels in [1, levels] on a random mask.
inline RoiSample random_roi(Dims d, int levels, double fill, std::uint64_t seed) {
  RngStream rng(seed);
  RoiSample r;
  r.bins = levels;
  r.image = ImageGrid(d, {1, 1, 1});
  r.mask = MaskGrid(d, {1, 1, 1}, std::uint8_t{0});
  r.levels = LevelGrid(d, {1, 1, 1}, std::uint8_t{0});
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (rng.uniform() >= fill && i != 0) continue;
    r.mask.data[i] = 1;
    r.levels.data[i] = static_cast<std::uint8_t>(1 + rng.uniform_index(levels));
    r.image.data[i] = r.levels.data[i];
  }
  return r;
}

struct Vox {
  long x, y, z;
  int g;
};

inline std::vector<Vox> voxels(const RoiSample& r) {
  std::vector<Vox> v;
  for (std::size_t z = 0; z < r.mask.dims.nz; ++z)
    for (std::size_t y = 0; y < r.mask.dims.ny; ++y)
      for (std::size_t x = 0; x < r.mask.dims.nx; ++x)
        if (r.mask(x, y, z))
          v.push_back({long(x), long(y), long(z), r.levels(x, y, z)});
  return v;
}

inline long cheb(const Vox& a, const Vox& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

// Exhaustive pair enumeration over all voxel pairs.
inline Eigen::MatrixXd glcm_oracle(const RoiSample& r, const Offset& d) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(r.bins, r.bins);
  const auto v = voxels(r);
  for (const auto& a : v)
    for (const auto& b : v) {
      const long dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
      if ((dx == d[0] && dy == d[1] && dz == d[2]) ||
          (dx == -d[0] && dy == -d[1] && dz == -d[2]))
        P(a.g - 1, b.g - 1) += 1;
    }
  return P;
}

// Run length per voxel by walking both ways; each run is seen len times.
inline Eigen::MatrixXd glrlm_oracle(const RoiSample& r, const Offset& d) {
  const auto v = voxels(r);
  std::map<std::tuple<long, long, long>, int> at;
  for (const auto& x : v) at[{x.x, x.y, x.z}] = x.g;
  const long longest = std::max({r.mask.dims.nx, r.mask.dims.ny, r.mask.dims.nz});
  Eigen::MatrixXd voxel_counts = Eigen::MatrixXd::Zero(r.bins, longest);
  for (const auto& x : v) {
    long len = 1;
    for (int sgn : {-1, 1})
      for (long k = 1;; ++k) {
        const auto it = at.find({x.x + sgn * k * d[0], x.y + sgn * k * d[1], x.z + sgn * k * d[2]});
        if (it == at.end() || it->second != x.g) break;
        ++len;
      }
    voxel_counts(x.g - 1, len - 1) += 1;
  }
  for (long j = 0; j < longest; ++j) voxel_counts.col(j) /= double(j + 1);
  return voxel_counts;
}

// Union-find over all 26-adjacent equal-level pairs.
inline Eigen::MatrixXd glszm_oracle(const RoiSample& r) {
  const auto v = voxels(r);
  std::vector<std::size_t> parent(v.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (v[i].g == v[j].g && cheb(v[i], v[j]) == 1) parent[find(i)] = find(j);
  std::map<std::size_t, std::size_t> size;
  for (std::size_t i = 0; i < v.size(); ++i) ++size[find(i)];
  std::size_t largest = 0;
  for (auto [root, s] : size) largest = std::max(largest, s);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(r.bins, long(largest));
  for (auto [root, s] : size) P(v[root].g - 1, long(s) - 1) += 1;
  return P;
}

inline Eigen::MatrixXd gldm_oracle(const RoiSample& r) {
  const auto v = voxels(r);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(r.bins, 27);
  for (const auto& a : v) {
    int dep = 1;
    for (const auto& b : v)
      if (cheb(a, b) == 1 && a.g == b.g) ++dep;
    P(a.g - 1, dep - 1) += 1;
  }
  return P;
}

inline Ngtdm ngtdm_oracle(const RoiSample& r) {
  const auto v = voxels(r);
  Ngtdm m{Eigen::VectorXd::Zero(r.bins), Eigen::VectorXd::Zero(r.bins)};
  for (const auto& a : v) {
    double sum = 0;
    int n = 0;
    for (const auto& b : v)
      if (cheb(a, b) == 1) {
        sum += b.g;
        ++n;
      }
    if (!n) continue;
    m.n[a.g - 1] += 1;
    m.s[a.g - 1] += std::abs(a.g - sum / n);
  }
  return m;
}

}  // namespace ldsim::radiomics::oracle
