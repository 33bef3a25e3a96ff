#include "ldsim/radiomics/wavelet.hpp"

#include <cmath>
#include <numbers>

#include "ldsim/core/error.hpp"

namespace ldsim::radiomics {
namespace {

// Haar step along one axis; returns the (low, high) halves.
std::array<ImageGrid, 2> haar_axis(const ImageGrid& g, int axis) {
  const std::array<std::size_t, 3> n{g.dims.nx, g.dims.ny, g.dims.nz};
  std::array<std::size_t, 3> m = n;
  m[axis] = (n[axis] + 1) / 2;
  Spacing s = g.spacing;
  (axis == 0 ? s.x : axis == 1 ? s.y : s.z) *= 2.0;
  const Dims d{m[0], m[1], m[2]};
  std::array<ImageGrid, 2> out{ImageGrid(d, s), ImageGrid(d, s)};
  const double r = 1.0 / std::numbers::sqrt2;
  for (std::size_t z = 0; z < m[2]; ++z)
    for (std::size_t y = 0; y < m[1]; ++y)
      for (std::size_t x = 0; x < m[0]; ++x) {
        std::array<std::size_t, 3> a{x, y, z};
        a[axis] *= 2;
        std::array<std::size_t, 3> b = a;
        b[axis] = std::min(a[axis] + 1, n[axis] - 1);
        const double va = g(a[0], a[1], a[2]), vb = g(b[0], b[1], b[2]);
        out[0](x, y, z) = (va + vb) * r;
        out[1](x, y, z) = (va - vb) * r;
      }
  return out;
}

}  // namespace

std::array<SubBand, 8> wavelet_decompose(const ImageGrid& patch) {
  if (patch.dims.nx < 2 || patch.dims.ny < 2 || patch.dims.nz < 2)
    throw DataError("wavelet: every axis needs at least 2 voxels");
  std::array<SubBand, 8> bands;
  const auto xs = haar_axis(patch, 0);
  for (int bx = 0; bx < 2; ++bx) {
    const auto ys = haar_axis(xs[bx], 1);
    for (int by = 0; by < 2; ++by) {
      const auto zs = haar_axis(ys[by], 2);
      for (int bz = 0; bz < 2; ++bz) {
        SubBand& b = bands[bx * 4 + by * 2 + bz];
        b.name = std::string("wavelet-") + "LH"[bx] + "LH"[by] + "LH"[bz];
        b.image = zs[bz];
      }
    }
  }
  return bands;
}

MaskGrid downsample_mask(const MaskGrid& mask) {
  const Dims d{(mask.dims.nx + 1) / 2, (mask.dims.ny + 1) / 2,
               (mask.dims.nz + 1) / 2};
  const Spacing s{mask.spacing.x * 2, mask.spacing.y * 2, mask.spacing.z * 2};
  MaskGrid out(d, s, std::uint8_t{0});
  bool any = false;
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) {
        out(x, y, z) = mask(2 * x, 2 * y, 2 * z) ? 1 : 0;
        any = any || out(x, y, z);
      }
  if (any) return out;
  for (std::size_t z = 0; z < mask.dims.nz; ++z)
    for (std::size_t y = 0; y < mask.dims.ny; ++y)
      for (std::size_t x = 0; x < mask.dims.nx; ++x)
        if (mask(x, y, z)) out(x / 2, y / 2, z / 2) = 1;
  return out;
}

}  // namespace ldsim::radiomics
