#include "ldsim/metrics/image_quality.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "ldsim/core/error.hpp"

namespace ldsim::metrics {
namespace {

void require_same_shape(const Image2D& a, const Image2D& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw DataError(std::string(what) + ": image shapes differ");
  if (a.data.empty()) throw DataError(std::string(what) + ": empty image");
}

std::vector<double> gaussian_window(int n, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double c = 0.5 * (n - 1);
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Separable valid-mode filtering.
Image2D filter_valid(const Image2D& img, const std::vector<double>& w) {
  const std::size_t n = w.size();
  const std::size_t oc = img.cols - n + 1, orr = img.rows - n + 1;
  Image2D tmp(img.rows, oc);
  for (std::size_t r = 0; r < img.rows; ++r)
    for (std::size_t c = 0; c < oc; ++c) {
      double acc = 0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * img(r, c + k);
      tmp(r, c) = acc;
    }
  Image2D out(orr, oc);
  for (std::size_t r = 0; r < orr; ++r)
    for (std::size_t c = 0; c < oc; ++c) {
      double acc = 0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * tmp(r + k, c);
      out(r, c) = acc;
    }
  return out;
}

Image2D product(const Image2D& a, const Image2D& b) {
  Image2D out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

double mae(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "mae");
  double acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    acc += std::abs(a.data[i] - b.data[i]);
  return acc / static_cast<double>(a.data.size());
}

SsimTerms ssim_terms(const Image2D& a, const Image2D& b, const SsimParams& p) {
  require_same_shape(a, b, "ssim");
  if (p.window < 1 || p.window % 2 == 0)
    throw ConfigError("ssim: window must be odd and positive");
  if (a.rows < static_cast<std::size_t>(p.window) ||
      a.cols < static_cast<std::size_t>(p.window))
    throw DataError("ssim: image smaller than the window");
  const auto w = gaussian_window(p.window, p.sigma);
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  const Image2D mu_a = filter_valid(a, w), mu_b = filter_valid(b, w);
  const Image2D e_aa = filter_valid(product(a, a), w);
  const Image2D e_bb = filter_valid(product(b, b), w);
  const Image2D e_ab = filter_valid(product(a, b), w);
  double s_sum = 0, cs_sum = 0;
  for (std::size_t i = 0; i < mu_a.data.size(); ++i) {
    const double ma = mu_a.data[i], mb = mu_b.data[i];
    const double va = e_aa.data[i] - ma * ma;
    const double vb = e_bb.data[i] - mb * mb;
    const double cov = e_ab.data[i] - ma * mb;
    const double cs = (2 * cov + c2) / (va + vb + c2);
    const double lum = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    cs_sum += cs;
    s_sum += lum * cs;
  }
  const double n = static_cast<double>(mu_a.data.size());
  return {s_sum / n, cs_sum / n};
}

double ssim(const Image2D& a, const Image2D& b, const SsimParams& p) {
  return ssim_terms(a, b, p).ssim;
}

Image2D downsample2(const Image2D& img) {
  Image2D out(img.rows / 2, img.cols / 2);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out(r, c) = 0.25 * (img(2 * r, 2 * c) + img(2 * r, 2 * c + 1) +
                          img(2 * r + 1, 2 * c) + img(2 * r + 1, 2 * c + 1));
  return out;
}

double ms_ssim(const Image2D& a, const Image2D& b, int scales,
               const std::vector<double>& weights, const SsimParams& p,
               int* scales_used) {
  require_same_shape(a, b, "ms_ssim");
  if (scales < 1) throw ConfigError("ms_ssim: scales must be >= 1");
  if (weights.size() < static_cast<std::size_t>(scales))
    throw ConfigError("ms_ssim: fewer weights than scales");
  const std::size_t min_dim = std::min(a.rows, a.cols);
  int usable = scales;
  while (usable > 1 &&
         (min_dim >> (usable - 1)) < static_cast<std::size_t>(p.window))
    --usable;
  if (usable < scales)
    spdlog::warn("ms_ssim: {}x{} image supports only {} of {} scales", a.rows,
                 a.cols, usable, scales);
  if (scales_used) *scales_used = usable;
  double wsum = 0;
  for (int i = 0; i < usable; ++i) wsum += weights[i];
  Image2D x = a, y = b;
  double result = 1.0;
  for (int i = 0; i < usable; ++i) {
    const SsimTerms t = ssim_terms(x, y, p);
    const double w = weights[i] / wsum;
    if (i + 1 < usable) {
      result *= std::pow(std::max(t.cs, 0.0), w);
      x = downsample2(x);
      y = downsample2(y);
    } else {
      result *= std::pow(std::max(t.ssim, 0.0), w);
    }
  }
  return result;
}

}  // namespace ldsim::metrics
