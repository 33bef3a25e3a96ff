#include "ldsim/radiomics/texture.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>

#include "ldsim/core/error.hpp"

namespace ldsim::radiomics {
namespace {

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

// Zero-denominator policy for non-correlation features.
double safe_div(double num, double den) { return den != 0.0 ? num / den : 0.0; }

struct Walker {
  const RoiSample& roi;
  long nx, ny, nz;
  explicit Walker(const RoiSample& r)
      : roi(r),
        nx(static_cast<long>(r.mask.dims.nx)),
        ny(static_cast<long>(r.mask.dims.ny)),
        nz(static_cast<long>(r.mask.dims.nz)) {}
  bool in(long x, long y, long z) const {
    return roi.mask.contains(x, y, z) &&
           roi.mask(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                    static_cast<std::size_t>(z)) != 0;
  }
  int level(long x, long y, long z) const {
    return roi.levels(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                      static_cast<std::size_t>(z));
  }
  void each(const std::function<void(long, long, long)>& f) const {
    for (long z = 0; z < nz; ++z)
      for (long y = 0; y < ny; ++y)
        for (long x = 0; x < nx; ++x)
          if (in(x, y, z)) f(x, y, z);
  }
};

void check(const RoiSample& roi) {
  if (roi.levels.dims != roi.mask.dims)
    throw DataError("texture: levels and mask are not congruent");
  if (roi.bins < 1) throw DataError("texture: no gray levels");
}

// Shared by run-length and size-zone matrices: rows are gray levels, columns
// are run lengths / zone sizes, Np the ROI voxel count.
FeatureVector zone_features(const Eigen::MatrixXd& P, double np,
                            const std::vector<std::string>& names) {
  const double nz = P.sum();
  const Eigen::Index ng = P.rows(), ns = P.cols();
  double small = 0, large = 0, gln = 0, szn = 0, low = 0, high = 0;
  double sl = 0, sh = 0, ll = 0, lh = 0, mu_i = 0, mu_j = 0, ent = 0;
  for (Eigen::Index i = 0; i < ng; ++i) gln += P.row(i).sum() * P.row(i).sum();
  for (Eigen::Index j = 0; j < ns; ++j) szn += P.col(j).sum() * P.col(j).sum();
  for (Eigen::Index i = 0; i < ng; ++i)
    for (Eigen::Index j = 0; j < ns; ++j) {
      const double c = P(i, j);
      if (c == 0.0) continue;
      const double gi = static_cast<double>(i + 1), sj = static_cast<double>(j + 1);
      const double i2 = gi * gi, j2 = sj * sj;
      small += c / j2;
      large += c * j2;
      low += c / i2;
      high += c * i2;
      sl += c / (i2 * j2);
      sh += c * i2 / j2;
      ll += c * j2 / i2;
      lh += c * i2 * j2;
      const double p = c / nz;
      mu_i += p * gi;
      mu_j += p * sj;
      ent -= plogp(p);
    }
  double gv = 0, zv = 0;
  for (Eigen::Index i = 0; i < ng; ++i)
    for (Eigen::Index j = 0; j < ns; ++j) {
      const double p = P(i, j) / nz;
      if (p == 0.0) continue;
      gv += p * (i + 1 - mu_i) * (i + 1 - mu_i);
      zv += p * (j + 1 - mu_j) * (j + 1 - mu_j);
    }
  const std::vector<double> values = {
      safe_div(small, nz), safe_div(large, nz), safe_div(gln, nz),
      safe_div(gln, nz * nz), safe_div(szn, nz), safe_div(szn, nz * nz),
      safe_div(nz, np), gv, zv, ent,
      safe_div(low, nz), safe_div(high, nz), safe_div(sl, nz),
      safe_div(sh, nz), safe_div(ll, nz), safe_div(lh, nz)};
  FeatureVector f;
  for (std::size_t k = 0; k < names.size(); ++k) f.add(names[k], values[k]);
  return f;
}

FeatureVector average(const std::vector<FeatureVector>& per_direction) {
  FeatureVector out = per_direction.front();
  for (std::size_t d = 1; d < per_direction.size(); ++d)
    for (std::size_t k = 0; k < out.size(); ++k)
      out.values[k] += per_direction[d].values[k];
  for (double& v : out.values) v /= static_cast<double>(per_direction.size());
  return out;
}

}  // namespace

const std::array<Offset, 13>& unique_directions() {
  static const std::array<Offset, 13> dirs = {{
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, -1, 0},
      {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1}, {1, 1, 1},
      {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
  }};
  return dirs;
}

Eigen::MatrixXd glcm_matrix(const RoiSample& roi, const Offset& d) {
  check(roi);
  const Walker w(roi);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(roi.bins, roi.bins);
  w.each([&](long x, long y, long z) {
    const long qx = x + d[0], qy = y + d[1], qz = z + d[2];
    if (!w.in(qx, qy, qz)) return;
    const int a = w.level(x, y, z) - 1, b = w.level(qx, qy, qz) - 1;
    P(a, b) += 1.0;
    P(b, a) += 1.0;
  });
  return P;
}

Eigen::MatrixXd glrlm_matrix(const RoiSample& roi, const Offset& d) {
  check(roi);
  const Walker w(roi);
  const long longest = std::max({w.nx, w.ny, w.nz});
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(roi.bins, longest);
  w.each([&](long x, long y, long z) {
    const int g = w.level(x, y, z);
    // Only the first voxel of a run starts a count.
    if (w.in(x - d[0], y - d[1], z - d[2]) &&
        w.level(x - d[0], y - d[1], z - d[2]) == g)
      return;
    long len = 1;
    while (w.in(x + len * d[0], y + len * d[1], z + len * d[2]) &&
           w.level(x + len * d[0], y + len * d[1], z + len * d[2]) == g)
      ++len;
    P(g - 1, len - 1) += 1.0;
  });
  return P;
}

Eigen::MatrixXd glszm_matrix(const RoiSample& roi) {
  check(roi);
  const Walker w(roi);
  const auto& dims = roi.mask.dims;
  std::vector<std::uint8_t> seen(dims.count(), 0);
  std::vector<std::pair<int, std::size_t>> zones;
  std::size_t largest = 1;
  std::vector<std::array<long, 3>> stack;
  w.each([&](long x, long y, long z) {
    const std::size_t idx = roi.mask.index(x, y, z);
    if (seen[idx]) return;
    const int g = w.level(x, y, z);
    std::size_t size = 0;
    seen[idx] = 1;
    stack.push_back({x, y, z});
    while (!stack.empty()) {
      const auto [cx, cy, cz] = stack.back();
      stack.pop_back();
      ++size;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const long qx = cx + dx, qy = cy + dy, qz = cz + dz;
            if (!w.in(qx, qy, qz) || w.level(qx, qy, qz) != g) continue;
            const std::size_t q = roi.mask.index(qx, qy, qz);
            if (seen[q]) continue;
            seen[q] = 1;
            stack.push_back({qx, qy, qz});
          }
    }
    zones.emplace_back(g, size);
    largest = std::max(largest, size);
  });
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(roi.bins, static_cast<Eigen::Index>(largest));
  for (const auto& [g, size] : zones) P(g - 1, static_cast<Eigen::Index>(size) - 1) += 1.0;
  return P;
}

Ngtdm ngtdm_matrix(const RoiSample& roi) {
  check(roi);
  const Walker w(roi);
  Ngtdm m{Eigen::VectorXd::Zero(roi.bins), Eigen::VectorXd::Zero(roi.bins)};
  w.each([&](long x, long y, long z) {
    double sum = 0.0;
    int count = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          if (!w.in(x + dx, y + dy, z + dz)) continue;
          sum += w.level(x + dx, y + dy, z + dz);
          ++count;
        }
    if (count == 0) return;
    const int g = w.level(x, y, z);
    m.n[g - 1] += 1.0;
    m.s[g - 1] += std::abs(g - sum / count);
  });
  return m;
}

Eigen::MatrixXd gldm_matrix(const RoiSample& roi, int alpha) {
  check(roi);
  const Walker w(roi);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(roi.bins, 27);
  w.each([&](long x, long y, long z) {
    const int g = w.level(x, y, z);
    int dep = 1;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          if (w.in(x + dx, y + dy, z + dz) &&
              std::abs(w.level(x + dx, y + dy, z + dz) - g) <= alpha)
            ++dep;
        }
    P(g - 1, dep - 1) += 1.0;
  });
  return P;
}

const std::vector<std::string>& glcm_feature_names() {
  static const std::vector<std::string> names = {
      "Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade",
      "ClusterTendency", "Contrast", "Correlation", "DifferenceAverage",
      "DifferenceEntropy", "DifferenceVariance", "JointEnergy", "JointEntropy",
      "Imc1", "Imc2", "Idm", "Idmn", "Id", "Idn", "InverseVariance",
      "MaximumProbability", "SumAverage", "SumEntropy", "SumSquares", "MCC"};
  return names;
}

FeatureVector glcm_features_from(const Eigen::MatrixXd& counts) {
  const Eigen::Index ng = counts.rows();
  const double total = counts.sum();
  if (!(total > 0.0)) throw DataError("glcm: empty co-occurrence matrix");
  const Eigen::MatrixXd p = counts / total;
  const Eigen::VectorXd px = p.rowwise().sum(), py = p.colwise().sum().transpose();
  double ux = 0, uy = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    ux += (i + 1) * px[i];
    uy += (i + 1) * py[i];
  }
  double vx = 0, vy = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    vx += (i + 1 - ux) * (i + 1 - ux) * px[i];
    vy += (i + 1 - uy) * (i + 1 - uy) * py[i];
  }
  Eigen::VectorXd psum = Eigen::VectorXd::Zero(2 * ng + 1);  // index i + j
  Eigen::VectorXd pdiff = Eigen::VectorXd::Zero(ng);         // index |i - j|
  double autoc = 0, prom = 0, shade = 0, tend = 0, contrast = 0, cross = 0;
  double energy = 0, hxy = 0, hxy1 = 0, hxy2 = 0, idm = 0, idmn = 0, id = 0,
         idn = 0, inv_var = 0;
  const double ng2 = static_cast<double>(ng) * ng;
  for (Eigen::Index i = 0; i < ng; ++i)
    for (Eigen::Index j = 0; j < ng; ++j) {
      const double gi = i + 1.0, gj = j + 1.0, v = p(i, j);
      const double pxy = px[i] * py[j];
      if (pxy > 0.0) hxy2 -= pxy * std::log2(pxy);
      if (v == 0.0) continue;
      psum[i + j + 2] += v;
      pdiff[std::abs(i - j)] += v;
      autoc += v * gi * gj;
      const double c = gi + gj - ux - uy;
      prom += c * c * c * c * v;
      shade += c * c * c * v;
      tend += c * c * v;
      const double d = gi - gj;
      contrast += d * d * v;
      cross += v * gi * gj;
      energy += v * v;
      hxy -= v * std::log2(v);
      hxy1 -= v * std::log2(pxy);
      idm += v / (1.0 + d * d);
      idmn += v / (1.0 + d * d / ng2);
      id += v / (1.0 + std::abs(d));
      idn += v / (1.0 + std::abs(d) / ng);
      if (i != j) inv_var += v / (d * d);
    }
  double hx = 0, hy = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    hx -= plogp(px[i]);
    hy -= plogp(py[i]);
  }
  double diff_avg = 0, diff_ent = 0, sum_avg = 0, sum_ent = 0;
  for (Eigen::Index k = 0; k < ng; ++k) {
    diff_avg += k * pdiff[k];
    diff_ent -= plogp(pdiff[k]);
  }
  double diff_var = 0;
  for (Eigen::Index k = 0; k < ng; ++k)
    diff_var += (k - diff_avg) * (k - diff_avg) * pdiff[k];
  for (Eigen::Index k = 2; k <= 2 * ng; ++k) {
    sum_avg += k * psum[k];
    sum_ent -= plogp(psum[k]);
  }
  const double sd = std::sqrt(vx * vy);
  const double correlation = sd > 0.0 ? (cross - ux * uy) / sd : 1.0;
  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0.0 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));

  // Maximal correlation coefficient over the levels that occur.
  std::vector<Eigen::Index> present;
  for (Eigen::Index i = 0; i < ng; ++i)
    if (px[i] > 0.0) present.push_back(i);
  double mcc = 1.0;
  if (present.size() > 1) {
    const auto m = static_cast<Eigen::Index>(present.size());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index k = 0; k < m; ++k)
          Q(a, b) += p(present[a], present[k]) * p(present[b], present[k]) /
                     (px[present[a]] * py[present[k]]);
    Eigen::EigenSolver<Eigen::MatrixXd> es(Q, false);
    std::vector<double> ev;
    for (Eigen::Index k = 0; k < m; ++k) ev.push_back(es.eigenvalues()[k].real());
    std::sort(ev.begin(), ev.end(), std::greater<>());
    mcc = std::sqrt(std::clamp(ev[1], 0.0, 1.0));
  }

  const std::vector<double> values = {
      autoc,    ux,       prom,     shade,   tend,   contrast,
      correlation, diff_avg, diff_ent, diff_var, energy, hxy,
      imc1,     imc2,     idm,      idmn,    id,     idn,
      inv_var,  p.maxCoeff(), sum_avg, sum_ent, vx,  mcc};
  FeatureVector f;
  const auto& names = glcm_feature_names();
  for (std::size_t k = 0; k < names.size(); ++k) f.add(names[k], values[k]);
  return f;
}

FeatureVector glcm_features(const RoiSample& roi) {
  std::vector<FeatureVector> per;
  for (const auto& d : unique_directions()) {
    const Eigen::MatrixXd P = glcm_matrix(roi, d);
    if (P.sum() > 0.0) per.push_back(glcm_features_from(P));
  }
  if (per.empty()) {
    // No neighbouring pair exists (isolated voxels): pair each voxel with
    // itself, which describes a locally constant texture.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(roi.bins, roi.bins);
    for (std::size_t i = 0; i < roi.mask.data.size(); ++i)
      if (roi.mask.data[i]) P(roi.levels.data[i] - 1, roi.levels.data[i] - 1) += 2.0;
    per.push_back(glcm_features_from(P));
  }
  return average(per);
}

const std::vector<std::string>& glrlm_feature_names() {
  static const std::vector<std::string> names = {
      "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
      "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
      "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
      "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis",
      "HighGrayLevelRunEmphasis", "ShortRunLowGrayLevelEmphasis",
      "ShortRunHighGrayLevelEmphasis", "LongRunLowGrayLevelEmphasis",
      "LongRunHighGrayLevelEmphasis"};
  return names;
}

FeatureVector glrlm_features_from(const Eigen::MatrixXd& counts,
                                  double voxel_count) {
  if (!(counts.sum() > 0.0)) throw DataError("glrlm: empty run-length matrix");
  return zone_features(counts, voxel_count, glrlm_feature_names());
}

FeatureVector glrlm_features(const RoiSample& roi) {
  const double np = static_cast<double>(roi.voxel_count());
  std::vector<FeatureVector> per;
  for (const auto& d : unique_directions())
    per.push_back(glrlm_features_from(glrlm_matrix(roi, d), np));
  return average(per);
}

const std::vector<std::string>& glszm_feature_names() {
  static const std::vector<std::string> names = {
      "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
      "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
      "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
      "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis",
      "HighGrayLevelZoneEmphasis", "SmallAreaLowGrayLevelEmphasis",
      "SmallAreaHighGrayLevelEmphasis", "LargeAreaLowGrayLevelEmphasis",
      "LargeAreaHighGrayLevelEmphasis"};
  return names;
}

FeatureVector glszm_features(const RoiSample& roi) {
  return zone_features(glszm_matrix(roi), static_cast<double>(roi.voxel_count()),
                       glszm_feature_names());
}

const std::vector<std::string>& ngtdm_feature_names() {
  static const std::vector<std::string> names = {"Coarseness", "Contrast",
                                                 "Busyness", "Complexity",
                                                 "Strength"};
  return names;
}

FeatureVector ngtdm_features(const RoiSample& roi) {
  const Ngtdm m = ngtdm_matrix(roi);
  const double nvp = m.n.sum();
  FeatureVector f;
  const auto& names = ngtdm_feature_names();
  if (nvp == 0.0) {
    for (const auto& n : names) f.add(n, 0.0);
    return f;
  }
  const Eigen::VectorXd p = m.n / nvp;
  const Eigen::Index ng = p.size();
  double ps = 0, ngp = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    ps += p[i] * m.s[i];
    ngp += p[i] > 0.0;
  }
  double pair_contrast = 0, busy_den = 0, complexity = 0, strength = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    if (p[i] == 0.0) continue;
    for (Eigen::Index j = 0; j < ng; ++j) {
      if (p[j] == 0.0) continue;
      const double gi = i + 1.0, gj = j + 1.0;
      pair_contrast += p[i] * p[j] * (gi - gj) * (gi - gj);
      busy_den += std::abs(gi * p[i] - gj * p[j]);
      complexity += std::abs(gi - gj) * (p[i] * m.s[i] + p[j] * m.s[j]) / (p[i] + p[j]);
      strength += (p[i] + p[j]) * (gi - gj) * (gi - gj);
    }
  }
  const double s_total = m.s.sum();
  f.add(names[0], safe_div(1.0, ps));
  f.add(names[1], ngp > 1 ? pair_contrast / (ngp * (ngp - 1)) * s_total / nvp : 0.0);
  f.add(names[2], safe_div(ps, busy_den));
  f.add(names[3], complexity / nvp);
  f.add(names[4], safe_div(strength, s_total));
  return f;
}

const std::vector<std::string>& gldm_feature_names() {
  static const std::vector<std::string> names = {
      "SmallDependenceEmphasis", "LargeDependenceEmphasis",
      "GrayLevelNonUniformity", "DependenceNonUniformity",
      "DependenceNonUniformityNormalized", "GrayLevelVariance",
      "DependenceVariance", "DependenceEntropy", "LowGrayLevelEmphasis",
      "HighGrayLevelEmphasis", "SmallDependenceLowGrayLevelEmphasis",
      "SmallDependenceHighGrayLevelEmphasis",
      "LargeDependenceLowGrayLevelEmphasis",
      "LargeDependenceHighGrayLevelEmphasis"};
  return names;
}

FeatureVector gldm_features(const RoiSample& roi) {
  const Eigen::MatrixXd P = gldm_matrix(roi);
  // The zone formulas cover every GLDM feature; GLDM drops the normalized
  // gray-level non-uniformity and the percentage.
  const std::vector<std::string> zone_names = {
      "SmallDependenceEmphasis", "LargeDependenceEmphasis",
      "GrayLevelNonUniformity", "-", "DependenceNonUniformity",
      "DependenceNonUniformityNormalized", "-", "GrayLevelVariance",
      "DependenceVariance", "DependenceEntropy", "LowGrayLevelEmphasis",
      "HighGrayLevelEmphasis", "SmallDependenceLowGrayLevelEmphasis",
      "SmallDependenceHighGrayLevelEmphasis",
      "LargeDependenceLowGrayLevelEmphasis",
      "LargeDependenceHighGrayLevelEmphasis"};
  const FeatureVector all =
      zone_features(P, static_cast<double>(roi.voxel_count()), zone_names);
  FeatureVector f;
  for (const auto& n : gldm_feature_names()) f.add(n, all.at(n));
  return f;
}

}  // namespace ldsim::radiomics
