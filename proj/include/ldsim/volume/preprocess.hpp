#pragma once

#include <vector>

#include "ldsim/volume/ct_volume.hpp"

namespace ldsim::volume {

struct PreprocessConfig {
  double hu_slope = 1.0;
  double hu_intercept = -1024.0;
  double window_lo = -1200.0;
  double window_hi = 600.0;
  int gaussian_kernel = 3;  // voxels per axis, odd
  double gaussian_sigma = 0.5;
  Spacing target_spacing{1.0, 1.0, 1.0};

  void validate() const;
};

// out = slope * in + intercept. Requires a RawDicom volume.
CtVolume hu_convert(const CtVolume& v, double slope, double intercept);

// Clamp HU values into [lo, hi].
CtVolume clip_window(const CtVolume& v, double lo, double hi);

// Normalized 1-D Gaussian taps g(k) = exp(-k^2 / (2 sigma^2)), k in
// [-size/2, size/2].
std::vector<double> gaussian_taps(int size, double sigma);

// Separable Gaussian smoothing with edge replication. Refuses volumes already
// flagged as smoothed.
CtVolume gaussian_smooth_3d(const CtVolume& v, const PreprocessConfig& cfg,
                            unsigned workers = 1);
Grid3<double> gaussian_smooth_3d(const Grid3<double>& g, int kernel,
                                 double sigma);

// Fixed affine map of the clip window onto [0,1].
CtVolume normalize_unit(const CtVolume& v, double window_lo, double window_hi);

// HU conversion (RawDicom inputs only), clipping, smoothing, normalization.
CtVolume preprocess(const CtVolume& v, const PreprocessConfig& cfg,
                    unsigned workers = 1);

// Output dims per axis: round(n * spacing / target), at least 1. Output voxel
// i sits at origin + i * target; intensities use separable cubic convolution
// (Keys, a = -0.5) with clamped borders.
Grid3<double> resample_cubic(const Grid3<double>& g, Spacing target);
MaskGrid resample_nearest(const MaskGrid& m, Spacing target);

CtVolume resample_isotropic(const CtVolume& v, Spacing target);
NoduleMask resample_isotropic(const NoduleMask& m, Spacing target);

Dims resampled_dims(const Dims& dims, const Spacing& spacing,
                    const Spacing& target);

}  // namespace ldsim::volume
