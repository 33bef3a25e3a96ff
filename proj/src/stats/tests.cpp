#include "ldsim/stats/tests.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "ldsim/core/error.hpp"
#include "ldsim/ml/dataset.hpp"

namespace ldsim::stats {
namespace {

double tie_term(const Eigen::VectorXd& v) {
  std::map<double, double> counts;
  for (Eigen::Index i = 0; i < v.size(); ++i) counts[v[i]] += 1.0;
  double t = 0;
  for (const auto& [value, c] : counts) t += c * c * c - c;
  return t;
}

}  // namespace

FriedmanResult friedman_test(const Eigen::MatrixXd& table) {
  const Eigen::Index n = table.rows(), k = table.cols();
  if (n < 2 || k < 2) throw DataError("friedman: need >= 2 blocks and >= 2 methods");
  if (!table.allFinite()) throw DataError("friedman: non-finite value");
  Eigen::VectorXd rank_sum = Eigen::VectorXd::Zero(k);
  double ties = 0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const Eigen::VectorXd row = table.row(b).transpose();
    rank_sum += ml::midranks(row);
    ties += tie_term(row);
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  FriedmanResult r;
  r.blocks = static_cast<std::size_t>(n);
  r.methods = static_cast<std::size_t>(k);
  const double centre = nd * (kd + 1) / 2.0;
  const double ss = (rank_sum.array() - centre).square().sum();
  const double denom = 1.0 - ties / (nd * (kd * kd * kd - kd));
  if (denom <= 1e-15) return r;  // tied within every block
  r.statistic = 12.0 / (nd * kd * (kd + 1)) * ss / denom;
  boost::math::chi_squared dist(kd - 1);
  r.p = std::clamp(boost::math::cdf(boost::math::complement(dist, r.statistic)), 0.0, 1.0);
  return r;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                    Alternative alt, std::size_t exact_max_n) {
  if (x.size() != y.size()) throw DataError("wilcoxon: samples must be paired");
  if (x.empty()) throw DataError("wilcoxon: empty samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] - y[i];
    if (!std::isfinite(v)) throw DataError("wilcoxon: non-finite value");
    if (v != 0.0) d.push_back(v);
  }
  WilcoxonResult r;
  r.n = d.size();
  if (d.empty()) {
    r.degenerate = true;
    return r;
  }
  Eigen::VectorXd mag(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) mag[static_cast<Eigen::Index>(i)] = std::abs(d[i]);
  const Eigen::VectorXd ranks = ml::midranks(mag);
  for (std::size_t i = 0; i < d.size(); ++i)
    (d[i] > 0 ? r.w_plus : r.w_minus) += ranks[static_cast<Eigen::Index>(i)];
  r.statistic = std::min(r.w_plus, r.w_minus);
  const double n = static_cast<double>(d.size());

  if (d.size() <= exact_max_n) {
    // Doubled midranks are integers; count sign patterns by their W+ sum.
    std::vector<long> r2(d.size());
    long total = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      r2[i] = std::lround(2.0 * ranks[static_cast<Eigen::Index>(i)]);
      total += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total + 1), 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long v : r2) {
      for (long s = reach; s >= 0; --s)
        if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + v)] += count[static_cast<std::size_t>(s)];
      reach += v;
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(d.size()));
    auto cdf_le = [&](long w2) {
      double c = 0;
      for (long s = 0; s <= std::min(w2, total); ++s) c += count[static_cast<std::size_t>(s)];
      return c / patterns;
    };
    const long wp2 = std::lround(2.0 * r.w_plus);
    switch (alt) {
      case Alternative::kTwoSided:
        r.p = std::min(1.0, 2.0 * cdf_le(std::lround(2.0 * r.statistic)));
        break;
      case Alternative::kGreater:
        r.p = 1.0 - cdf_le(wp2 - 1);
        break;
      case Alternative::kLess:
        r.p = cdf_le(wp2);
        break;
    }
    r.exact = true;
    return r;
  }

  const double mean = n * (n + 1) / 4.0;
  const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term(mag) / 48.0;
  if (var <= 0.0) return r;
  const double sd = std::sqrt(var);
  const double diff = r.w_plus - mean;
  switch (alt) {
    case Alternative::kTwoSided: {
      const double z = std::max(0.0, std::abs(diff) - 0.5) / sd;
      r.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
      break;
    }
    case Alternative::kGreater:
      r.p = 0.5 * std::erfc((diff - 0.5) / sd / std::sqrt(2.0));
      break;
    case Alternative::kLess:
      r.p = 0.5 * std::erfc(-(diff + 0.5) / sd / std::sqrt(2.0));
      break;
  }
  return r;
}

std::vector<double> bonferroni_adjust(const std::vector<double>& p, std::size_t m) {
  if (m < 1) throw ConfigError("bonferroni: m must be >= 1");
  std::vector<double> out;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("bonferroni: p-values must be in [0, 1]");
    out.push_back(std::min(1.0, v * static_cast<double>(m)));
  }
  return out;
}

}  // namespace ldsim::stats
