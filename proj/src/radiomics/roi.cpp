#include "ldsim/radiomics/roi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ldsim/core/error.hpp"

namespace ldsim::radiomics {

std::size_t RoiSample::voxel_count() const { return mask_count(mask); }

void RoiSample::validate() const {
  if (image.dims != mask.dims || levels.dims != mask.dims)
    throw DataError("roi: image, mask and levels are not congruent");
  if (voxel_count() == 0) throw DataError("roi: empty mask");
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    const int l = levels.data[i];
    if (mask.data[i] ? (l < 1 || l > bins) : l != 0)
      throw DataError("roi: gray level outside [1, bins]");
  }
}

std::size_t mask_count(const MaskGrid& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data.begin(), mask.data.end(),
                    [](std::uint8_t v) { return v != 0; }));
}

BoundingBox mask_bounds(const MaskGrid& mask) {
  BoundingBox b;
  b.lo = {mask.dims.nx, mask.dims.ny, mask.dims.nz};
  bool any = false;
  for (std::size_t z = 0; z < mask.dims.nz; ++z)
    for (std::size_t y = 0; y < mask.dims.ny; ++y)
      for (std::size_t x = 0; x < mask.dims.nx; ++x) {
        if (!mask(x, y, z)) continue;
        any = true;
        const std::array<std::size_t, 3> p{x, y, z};
        for (int a = 0; a < 3; ++a) {
          b.lo[a] = std::min(b.lo[a], p[a]);
          b.hi[a] = std::max(b.hi[a], p[a]);
        }
      }
  if (!any) throw DataError("roi: empty mask");
  return b;
}

BoundingBox expand(const BoundingBox& box, std::size_t margin,
                   const Dims& dims) {
  const std::array<std::size_t, 3> n{dims.nx, dims.ny, dims.nz};
  BoundingBox out;
  for (int a = 0; a < 3; ++a) {
    out.lo[a] = box.lo[a] >= margin ? box.lo[a] - margin : 0;
    out.hi[a] = std::min(n[a] - 1, box.hi[a] + margin);
  }
  return out;
}

template <class T>
Grid3<T> crop(const Grid3<T>& g, const BoundingBox& box, std::size_t margin) {
  const BoundingBox b = expand(box, margin, g.dims);
  Dims d{b.hi[0] - b.lo[0] + 1, b.hi[1] - b.lo[1] + 1, b.hi[2] - b.lo[2] + 1};
  Grid3<T> out(d, g.spacing);
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x)
        out(x, y, z) = g(x + b.lo[0], y + b.lo[1], z + b.lo[2]);
  return out;
}

template ImageGrid crop(const ImageGrid&, const BoundingBox&, std::size_t);
template MaskGrid crop(const MaskGrid&, const BoundingBox&, std::size_t);

ImageGrid zscore_normalize(const ImageGrid& patch) {
  const double n = static_cast<double>(patch.data.size());
  if (patch.data.empty()) throw DataError("zscore: empty patch");
  double mean = 0.0;
  for (double v : patch.data) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : patch.data) var += (v - mean) * (v - mean);
  var /= n;
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
    throw DataError("zscore: degenerate patch with zero variance");
  ImageGrid out = patch;
  for (double& v : out.data) v = (v - mean) / sd;
  return out;
}

RoiSample discretize_fixed_bins(const ImageGrid& patch, const MaskGrid& mask,
                                int bins) {
  if (bins < 1 || bins > 255) throw ConfigError("discretize: bins must be in [1, 255]");
  if (patch.dims != mask.dims)
    throw DataError("discretize: image and mask are not congruent");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    if (mask.data[i]) {
      lo = std::min(lo, patch.data[i]);
      hi = std::max(hi, patch.data[i]);
    }
  if (!(lo <= hi)) throw DataError("discretize: empty mask");
  RoiSample roi;
  roi.image = patch;
  roi.mask = mask;
  roi.bins = bins;
  roi.levels = LevelGrid(mask.dims, mask.spacing, std::uint8_t{0});
  const double range = hi - lo;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (!mask.data[i]) continue;
    int level = 1;
    if (range > 0.0) {
      level = static_cast<int>(std::floor(bins * (patch.data[i] - lo) / range)) + 1;
      level = std::clamp(level, 1, bins);
    }
    roi.levels.data[i] = static_cast<std::uint8_t>(level);
  }
  return roi;
}

}  // namespace ldsim::radiomics
