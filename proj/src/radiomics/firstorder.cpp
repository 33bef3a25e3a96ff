#include "ldsim/radiomics/firstorder.hpp"

#include <algorithm>
#include <cmath>

#include "ldsim/core/error.hpp"

namespace ldsim::radiomics {

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("percentile: empty sample");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

const std::vector<std::string>& firstorder_feature_names() {
  static const std::vector<std::string> names = {
      "Energy",   "TotalEnergy",        "Entropy",
      "Minimum",  "10Percentile",       "90Percentile",
      "Maximum",  "Mean",               "Median",
      "InterquartileRange", "Range",    "MeanAbsoluteDeviation",
      "RobustMeanAbsoluteDeviation",    "RootMeanSquared",
      "Skewness", "Kurtosis",           "Variance",
      "Uniformity"};
  return names;
}

FeatureVector firstorder_features(const RoiSample& roi) {
  std::vector<double> x;
  std::vector<double> hist(static_cast<std::size_t>(roi.bins), 0.0);
  for (std::size_t i = 0; i < roi.mask.data.size(); ++i) {
    if (!roi.mask.data[i]) continue;
    x.push_back(roi.image.data[i]);
    hist[roi.levels.data[i] - 1] += 1.0;
  }
  if (x.empty()) throw DataError("firstorder: empty mask");
  const double n = static_cast<double>(x.size());

  double sum = 0.0, energy = 0.0;
  for (double v : x) {
    sum += v;
    energy += v * v;
  }
  const double mean = sum / n;
  // A constant ROI must report exactly zero spread; summation rounding would
  // otherwise leave O(eps) moments.
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  const bool constant = std::all_of(x.begin(), x.end(),
                                    [&](double v) { return v == x.front(); });
  if (!constant) {
    for (double v : x) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
      mad += std::abs(d);
    }
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  mad /= n;

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double p10 = percentile_sorted(sorted, 10.0);
  const double p90 = percentile_sorted(sorted, 90.0);
  const double p25 = percentile_sorted(sorted, 25.0);
  const double p75 = percentile_sorted(sorted, 75.0);

  double rsum = 0.0, rn = 0.0;
  for (double v : sorted)
    if (v >= p10 && v <= p90) {
      rsum += v;
      rn += 1.0;
    }
  double rmad = 0.0;
  if (rn > 0.0) {
    const double rmean = rsum / rn;
    for (double v : sorted)
      if (v >= p10 && v <= p90) rmad += std::abs(v - rmean);
    rmad /= rn;
  }

  double entropy = 0.0, uniformity = 0.0;
  for (double h : hist) {
    if (h <= 0.0) continue;
    const double p = h / n;
    entropy -= p * std::log2(p);
    uniformity += p * p;
  }

  FeatureVector f;
  f.add("Energy", energy);
  f.add("TotalEnergy", energy * roi.image.spacing.voxel_volume());
  f.add("Entropy", entropy);
  f.add("Minimum", sorted.front());
  f.add("10Percentile", p10);
  f.add("90Percentile", p90);
  f.add("Maximum", sorted.back());
  f.add("Mean", mean);
  f.add("Median", percentile_sorted(sorted, 50.0));
  f.add("InterquartileRange", p75 - p25);
  f.add("Range", sorted.back() - sorted.front());
  f.add("MeanAbsoluteDeviation", mad);
  f.add("RobustMeanAbsoluteDeviation", rmad);
  f.add("RootMeanSquared", std::sqrt(energy / n));
  f.add("Skewness", m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0);
  f.add("Kurtosis", m2 > 0.0 ? m4 / (m2 * m2) : 0.0);
  f.add("Variance", m2);
  f.add("Uniformity", uniformity);
  return f;
}

}  // namespace ldsim::radiomics
