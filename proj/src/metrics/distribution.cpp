#include "ldsim/metrics/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <spdlog/spdlog.h>

#include "ldsim/core/error.hpp"
#include "ldsim/core/fft.hpp"
#include "ldsim/core/parallel.hpp"

namespace ldsim::metrics {
namespace {

constexpr std::size_t kPoolGrid = 8;
constexpr std::size_t kHistBins = 32;
constexpr std::size_t kRadialBins = 32;

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite");
}

double poly_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y, double inv_d) {
  const double t = x.dot(y) * inv_d + 1.0;
  return t * t * t;
}

}  // namespace

void PatchSet::append(const PatchSet& other) {
  if (!patches.empty() && other.size != size)
    throw DataError("patch sets have different patch sizes");
  size = other.size;
  patches.insert(patches.end(), other.patches.begin(), other.patches.end());
  tags.insert(tags.end(), other.tags.begin(), other.tags.end());
}

PatchSet center_crop_patches(const volume::CtVolume& v, std::size_t size,
                             const std::string& subject) {
  if (size == 0) throw ConfigError("center_crop_patches: size must be > 0");
  if (v.unit() != volume::IntensityUnit::kNormalized)
    throw DataError("center_crop_patches expects a Normalized volume");
  const auto& d = v.dims();
  if (d.nx < size || d.ny < size)
    throw DataError("center_crop_patches: slice " + std::to_string(d.nx) +
                    "x" + std::to_string(d.ny) + " smaller than patch " +
                    std::to_string(size));
  const std::size_t x0 = (d.nx - size) / 2, y0 = (d.ny - size) / 2;
  PatchSet out;
  out.size = size;
  for (std::size_t z = 0; z < d.nz; ++z) {
    Image2D p(size, size);
    for (std::size_t r = 0; r < size; ++r)
      for (std::size_t c = 0; c < size; ++c) p(r, c) = v.at(x0 + c, y0 + r, z);
    out.patches.push_back(std::move(p));
    out.tags.push_back({subject, z});
  }
  return out;
}

std::vector<double> HandcraftedEmbedder::embed(const Image2D& p) const {
  if (p.rows != p.cols || p.rows < kPoolGrid)
    throw DataError("embedder: patch must be square and at least 8x8");
  const std::size_t n = p.rows;
  std::vector<double> f;
  f.reserve(dim());

  for (std::size_t bi = 0; bi < kPoolGrid; ++bi)
    for (std::size_t bj = 0; bj < kPoolGrid; ++bj) {
      const std::size_t r0 = bi * n / kPoolGrid, r1 = (bi + 1) * n / kPoolGrid;
      const std::size_t c0 = bj * n / kPoolGrid, c1 = (bj + 1) * n / kPoolGrid;
      double acc = 0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) acc += p(r, c);
      f.push_back(acc / static_cast<double>((r1 - r0) * (c1 - c0)));
    }

  std::vector<double> hist(kHistBins, 0.0);
  for (double x : p.data) {
    const double cl = std::clamp(x, 0.0, 1.0);
    const std::size_t b =
        std::min(kHistBins - 1, static_cast<std::size_t>(cl * kHistBins));
    hist[b] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(p.data.size());
  f.insert(f.end(), hist.begin(), hist.end());

  const auto spec = real_fft2d(p.data, n, n);
  const std::size_t half = n / 2 + 1;
  const double rmax = std::sqrt(0.5);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<double> power(kRadialBins, 0.0), weight(kRadialBins, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    const double fu =
        (u <= n / 2 ? static_cast<double>(u) : static_cast<double>(u) - n) / n;
    for (std::size_t v = 0; v < half; ++v) {
      const double fv = static_cast<double>(v) / n;
      // Interior half-spectrum columns stand for two conjugate bins.
      const double w = (v == 0 || (n % 2 == 0 && v == n / 2)) ? 1.0 : 2.0;
      const double r = std::sqrt(fu * fu + fv * fv);
      const std::size_t b = std::min(
          kRadialBins - 1, static_cast<std::size_t>(r / rmax * kRadialBins));
      power[b] += w * std::norm(spec[u * half + v]) * norm * norm;
      weight[b] += w;
    }
  }
  for (std::size_t b = 0; b < kRadialBins; ++b)
    f.push_back(weight[b] > 0 ? std::sqrt(power[b] / weight[b]) : 0.0);
  return f;
}

Eigen::MatrixXd embed_patches(const PatchSet& set, const PatchEmbedder& e,
                              unsigned workers) {
  if (set.patches.empty()) throw DataError("embed_patches: empty patch set");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(set.patches.size()),
                      static_cast<Eigen::Index>(e.dim()));
  parallel_for(set.patches.size(), workers, [&](std::size_t i) {
    const auto row = e.embed(set.patches[i]);
    if (row.size() != e.dim())
      throw DataError("embedder returned the wrong dimension");
    for (std::size_t j = 0; j < row.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  });
  return out;
}

EmbeddingStats gaussian_stats(const Eigen::MatrixXd& emb) {
  if (emb.rows() < 2) throw DataError("gaussian_stats: need at least 2 rows");
  require_finite(emb, "gaussian_stats");
  EmbeddingStats s;
  s.n = static_cast<std::size_t>(emb.rows());
  s.mu = emb.colwise().mean().transpose();
  const Eigen::MatrixXd centered = emb.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered /
            static_cast<double>(emb.rows() - 1);
  s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
  return s;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DataError("sqrtm: matrix not square");
  require_finite(m, "sqrtm");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError("sqrtm: eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double fid(const EmbeddingStats& s1, const EmbeddingStats& s2, double eps) {
  if (s1.d() != s2.d() || s1.d() == 0)
    throw DataError("fid: embedding dimensions differ");
  require_finite(s1.sigma, "fid");
  require_finite(s2.sigma, "fid");
  if (!s1.mu.allFinite() || !s2.mu.allFinite())
    throw NumericalError("fid: non-finite mean");
  const auto d = static_cast<Eigen::Index>(s1.d());
  const Eigen::MatrixXd reg = eps * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd a = sqrtm_psd(s1.sigma + reg);
  Eigen::MatrixXd inner = a * (s2.sigma + reg) * a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("fid: eigendecomposition failed");
  const double tr_cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (s1.mu - s2.mu).squaredNorm() + s1.sigma.trace() +
                       s2.sigma.trace() - 2.0 * tr_cross;
  if (!std::isfinite(value)) throw NumericalError("fid: non-finite result");
  if (value < -1e-6) spdlog::warn("fid: clamped negative value {}", value);
  return std::max(value, 0.0);
}

double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::Index m = x.rows(), n = y.rows();
  if (m < 2 || n < 2) throw DataError("mmd2: need at least 2 rows per set");
  if (x.cols() != y.cols()) throw DataError("mmd2: dimensions differ");
  const double inv_d = 1.0 / static_cast<double>(x.cols());
  double kxx = 0, kyy = 0, kxy = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      kxx += poly_kernel(x.row(i).transpose(), x.row(j).transpose(), inv_d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      kyy += poly_kernel(y.row(i).transpose(), y.row(j).transpose(), inv_d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      kxy += poly_kernel(x.row(i).transpose(), y.row(j).transpose(), inv_d);
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return 2.0 * kxx / (dm * (dm - 1)) + 2.0 * kyy / (dn * (dn - 1)) -
         2.0 * kxy / (dm * dn);
}

KidResult kid(const Eigen::MatrixXd& e1, const Eigen::MatrixXd& e2,
              std::size_t subset_size, std::size_t n_subsets, RngStream& rng) {
  if (e1.rows() < 2 || e2.rows() < 2)
    throw DataError("kid: need at least 2 embeddings per set");
  if (e1.cols() != e2.cols()) throw DataError("kid: dimensions differ");
  if (n_subsets < 1) throw ConfigError("kid: n_subsets must be >= 1");
  require_finite(e1, "kid");
  require_finite(e2, "kid");
  const std::size_t cap =
      static_cast<std::size_t>(std::min(e1.rows(), e2.rows()));
  if (subset_size > cap) {
    spdlog::warn("kid: subset size {} shrunk to {}", subset_size, cap);
    subset_size = cap;
  }
  if (subset_size < 2) throw ConfigError("kid: subset size must be >= 2");
  auto draw = [&](const Eigen::MatrixXd& e) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(e.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first subset_size slots are a uniform sample.
    for (std::size_t i = 0; i < subset_size; ++i) {
      const std::size_t j = i + rng.uniform_index(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(subset_size), e.cols());
    for (std::size_t i = 0; i < subset_size; ++i)
      out.row(static_cast<Eigen::Index>(i)) = e.row(idx[i]);
    return out;
  };
  std::vector<double> vals;
  for (std::size_t s = 0; s < n_subsets; ++s) {
    const Eigen::MatrixXd a = draw(e1);
    const Eigen::MatrixXd b = draw(e2);
    vals.push_back(mmd2_unbiased(a, b));
  }
  KidResult r;
  r.subset_size = subset_size;
  r.n_subsets = n_subsets;
  r.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double ss = 0;
  for (double v : vals) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / vals.size());
  return r;
}

}  // namespace ldsim::metrics
