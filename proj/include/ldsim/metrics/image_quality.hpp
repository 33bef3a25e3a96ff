#pragma once

#include <vector>

#include "ldsim/projection/radon.hpp"

namespace ldsim::metrics {

using projection::Image2D;

// Mean absolute difference.
double mae(const Image2D& a, const Image2D& b);

struct SsimParams {
  int window = 11;  // Gaussian taps per axis
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

struct SsimTerms {
  double ssim = 0.0;  // mean of the full SSIM map
  double cs = 0.0;    // mean of the contrast-structure map
};

// Local statistics over the "valid" region (no padding).
SsimTerms ssim_terms(const Image2D& a, const Image2D& b,
                     const SsimParams& p = {});
double ssim(const Image2D& a, const Image2D& b, const SsimParams& p = {});

inline const std::vector<double> kMsSsimWeights = {0.0448, 0.2856, 0.3001,
                                                   0.2363, 0.1333};

// prod_{i<s-1} max(cs_i, 0)^w_i * max(ssim_{s-1}, 0)^w_{s-1}, with 2x2 mean
// downsampling between scales. When the image is too small for the requested
// scale count, scales are reduced (with a warning) and the leading weights
// renormalized. `scales_used` receives the count actually applied.
double ms_ssim(const Image2D& a, const Image2D& b, int scales = 5,
               const std::vector<double>& weights = kMsSsimWeights,
               const SsimParams& p = {}, int* scales_used = nullptr);

// 2x2 block mean; a trailing odd row/column is dropped.
Image2D downsample2(const Image2D& img);

}  // namespace ldsim::metrics
