#include "ldsim/volume/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ldsim/core/error.hpp"
#include "ldsim/core/parallel.hpp"

namespace ldsim::volume {
namespace {

// Convolve one strided line with clamped (edge-replicated) taps.
void convolve_line(const double* in, double* out, std::size_t n,
                   std::size_t stride, const std::vector<double>& taps) {
  const long half = static_cast<long>(taps.size() / 2);
  const long last = static_cast<long>(n) - 1;
  for (long i = 0; i <= last; ++i) {
    double acc = 0.0;
    for (long k = -half; k <= half; ++k) {
      const long j = std::clamp(i + k, 0L, last);
      acc += taps[static_cast<std::size_t>(k + half)] * in[j * stride];
    }
    out[i * stride] = acc;
  }
}

Grid3<double> separable_smooth(const Grid3<double>& g,
                               const std::vector<double>& taps,
                               unsigned workers) {
  const Dims d = g.dims;
  Grid3<double> a = g;
  Grid3<double> b(d, g.spacing, 0.0);
  // x pass
  parallel_for(d.nz, workers, [&](std::size_t z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      const std::size_t base = g.index(0, y, z);
      convolve_line(&a.data[base], &b.data[base], d.nx, 1, taps);
    }
  });
  // y pass
  parallel_for(d.nz, workers, [&](std::size_t z) {
    for (std::size_t x = 0; x < d.nx; ++x) {
      const std::size_t base = g.index(x, 0, z);
      convolve_line(&b.data[base], &a.data[base], d.ny, d.nx, taps);
    }
  });
  // z pass
  parallel_for(d.ny, workers, [&](std::size_t y) {
    for (std::size_t x = 0; x < d.nx; ++x) {
      const std::size_t base = g.index(x, y, 0);
      convolve_line(&a.data[base], &b.data[base], d.nz, d.nx * d.ny, taps);
    }
  });
  return b;
}

double keys_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

// Resample along one axis. `axis` 0/1/2 = x/y/z.
Grid3<double> resample_axis(const Grid3<double>& g, int axis, std::size_t n_out,
                            double step) {
  Dims od = g.dims;
  Spacing os = g.spacing;
  std::size_t n_in = 0;
  switch (axis) {
    case 0:
      n_in = g.dims.nx;
      od.nx = n_out;
      os.x *= step;
      break;
    case 1:
      n_in = g.dims.ny;
      od.ny = n_out;
      os.y *= step;
      break;
    default:
      n_in = g.dims.nz;
      od.nz = n_out;
      os.z *= step;
      break;
  }
  Grid3<double> out(od, os, 0.0);
  const long last = static_cast<long>(n_in) - 1;

  // Precompute taps per output coordinate.
  std::vector<std::array<long, 4>> idx(n_out);
  std::vector<std::array<double, 4>> w(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double u = static_cast<double>(i) * step;
    const long i0 = static_cast<long>(std::floor(u));
    const double f = u - static_cast<double>(i0);
    for (int k = 0; k < 4; ++k) {
      idx[i][k] = std::clamp(i0 - 1 + k, 0L, last);
      w[i][k] = keys_weight(f - (k - 1));
    }
  }

  for (std::size_t z = 0; z < od.nz; ++z)
    for (std::size_t y = 0; y < od.ny; ++y)
      for (std::size_t x = 0; x < od.nx; ++x) {
        const std::size_t i = axis == 0 ? x : (axis == 1 ? y : z);
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          const std::size_t j = static_cast<std::size_t>(idx[i][k]);
          const double v = axis == 0   ? g(j, y, z)
                           : axis == 1 ? g(x, j, z)
                                       : g(x, y, j);
          acc += w[i][k] * v;
        }
        out(x, y, z) = acc;
      }
  return out;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (!(window_lo < window_hi))
    throw ConfigError("preprocess: window_lo must be < window_hi");
  if (!(gaussian_sigma > 0)) throw ConfigError("preprocess: sigma must be > 0");
  if (gaussian_kernel < 1 || gaussian_kernel % 2 == 0)
    throw ConfigError("preprocess: Gaussian kernel size must be odd");
  if (!(target_spacing.x > 0 && target_spacing.y > 0 && target_spacing.z > 0))
    throw ConfigError("preprocess: target spacing must be > 0");
}

CtVolume hu_convert(const CtVolume& v, double slope, double intercept) {
  if (v.unit() != IntensityUnit::kRawDicom)
    throw DataError("hu_convert expects a RawDicom volume");
  std::vector<float> out(v.values().size());
  std::transform(v.values().begin(), v.values().end(), out.begin(),
                 [&](float x) {
                   return static_cast<float>(slope * x + intercept);
                 });
  return v.with_values(std::move(out), IntensityUnit::kHU, v.smoothed());
}

CtVolume clip_window(const CtVolume& v, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("clip_window: lo must be < hi");
  if (v.unit() != IntensityUnit::kHU)
    throw DataError("clip_window expects an HU volume");
  const float flo = static_cast<float>(lo), fhi = static_cast<float>(hi);
  std::vector<float> out(v.values().size());
  std::transform(v.values().begin(), v.values().end(), out.begin(),
                 [&](float x) { return std::clamp(x, flo, fhi); });
  return v.with_values(std::move(out), IntensityUnit::kHU, v.smoothed());
}

std::vector<double> gaussian_taps(int size, double sigma) {
  if (size < 1 || size % 2 == 0)
    throw ConfigError("Gaussian kernel size must be odd");
  if (!(sigma > 0)) throw ConfigError("Gaussian sigma must be > 0");
  const int half = size / 2;
  std::vector<double> taps(static_cast<std::size_t>(size));
  double sum = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double g = std::exp(-(k * k) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(k + half)] = g;
    sum += g;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Grid3<double> gaussian_smooth_3d(const Grid3<double>& g, int kernel,
                                 double sigma) {
  return separable_smooth(g, gaussian_taps(kernel, sigma), 1);
}

CtVolume gaussian_smooth_3d(const CtVolume& v, const PreprocessConfig& cfg,
                            unsigned workers) {
  cfg.validate();
  if (v.smoothed())
    throw DataError("volume is already smoothed; refusing a second pass");
  const auto taps = gaussian_taps(cfg.gaussian_kernel, cfg.gaussian_sigma);
  const Grid3<double> out = separable_smooth(v.to_grid(), taps, workers);
  return v.with_values(std::vector<float>(out.data.begin(), out.data.end()),
                       v.unit(), true);
}

CtVolume normalize_unit(const CtVolume& v, double window_lo,
                        double window_hi) {
  if (!(window_lo < window_hi))
    throw ConfigError("normalize_unit: degenerate window");
  if (v.unit() != IntensityUnit::kHU)
    throw DataError("normalize_unit expects an HU volume");
  const double scale = 1.0 / (window_hi - window_lo);
  std::vector<float> out(v.values().size());
  std::transform(v.values().begin(), v.values().end(), out.begin(),
                 [&](float x) {
                   const double t = (x - window_lo) * scale;
                   return static_cast<float>(std::clamp(t, 0.0, 1.0));
                 });
  return v.with_values(std::move(out), IntensityUnit::kNormalized,
                       v.smoothed());
}

CtVolume preprocess(const CtVolume& v, const PreprocessConfig& cfg,
                    unsigned workers) {
  cfg.validate();
  CtVolume hu = v.unit() == IntensityUnit::kRawDicom
                    ? hu_convert(v, cfg.hu_slope, cfg.hu_intercept)
                    : v;
  if (hu.unit() != IntensityUnit::kHU)
    throw DataError("preprocess expects RawDicom or HU input");
  CtVolume clipped = clip_window(hu, cfg.window_lo, cfg.window_hi);
  CtVolume smooth = clipped.smoothed()
                        ? clipped
                        : gaussian_smooth_3d(clipped, cfg, workers);
  return normalize_unit(smooth, cfg.window_lo, cfg.window_hi);
}

Dims resampled_dims(const Dims& d, const Spacing& s, const Spacing& t) {
  if (!(t.x > 0 && t.y > 0 && t.z > 0))
    throw ConfigError("resample: target spacing must be > 0");
  auto n = [](std::size_t count, double from, double to) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(count * from / to)));
  };
  return {n(d.nx, s.x, t.x), n(d.ny, s.y, t.y), n(d.nz, s.z, t.z)};
}

Grid3<double> resample_cubic(const Grid3<double>& g, Spacing target) {
  const Dims od = resampled_dims(g.dims, g.spacing, target);
  Grid3<double> cur = g;
  if (g.spacing.x != target.x || od.nx != g.dims.nx)
    cur = resample_axis(cur, 0, od.nx, target.x / g.spacing.x);
  if (g.spacing.y != target.y || od.ny != g.dims.ny)
    cur = resample_axis(cur, 1, od.ny, target.y / g.spacing.y);
  if (g.spacing.z != target.z || od.nz != g.dims.nz)
    cur = resample_axis(cur, 2, od.nz, target.z / g.spacing.z);
  cur.spacing = target;
  return cur;
}

MaskGrid resample_nearest(const MaskGrid& m, Spacing target) {
  const Dims od = resampled_dims(m.dims, m.spacing, target);
  MaskGrid out(od, target, std::uint8_t{0});
  auto src = [](std::size_t i, double from, double to, std::size_t n) {
    const double u = static_cast<double>(i) * to / from;
    return std::min<std::size_t>(n - 1,
                                 static_cast<std::size_t>(std::llround(u)));
  };
  for (std::size_t z = 0; z < od.nz; ++z)
    for (std::size_t y = 0; y < od.ny; ++y)
      for (std::size_t x = 0; x < od.nx; ++x)
        out(x, y, z) = m(src(x, m.spacing.x, target.x, m.dims.nx),
                         src(y, m.spacing.y, target.y, m.dims.ny),
                         src(z, m.spacing.z, target.z, m.dims.nz));
  return out;
}

CtVolume resample_isotropic(const CtVolume& v, Spacing target) {
  if (v.spacing() == target) return v;
  Grid3<double> out = resample_cubic(v.to_grid(), target);
  std::vector<float> values(out.data.begin(), out.data.end());
  if (v.unit() == IntensityUnit::kNormalized)
    for (float& x : values) x = std::clamp(x, 0.0f, 1.0f);
  return CtVolume(out.dims, target, v.origin(), v.unit(), std::move(values),
                  v.smoothed());
}

NoduleMask resample_isotropic(const NoduleMask& m, Spacing target) {
  if (m.spacing() == target) return m;
  MaskGrid out = resample_nearest(m.to_grid(), target);
  return NoduleMask(out.dims, target, m.origin(), std::move(out.data),
                    m.nodule_id(), m.malignancy_score());
}

}  // namespace ldsim::volume
