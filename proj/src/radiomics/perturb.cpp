#include "ldsim/radiomics/perturb.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ldsim/core/error.hpp"
#include "ldsim/core/rng.hpp"

namespace ldsim::radiomics {
namespace {

constexpr std::array<std::array<int, 3>, 6> kFaces = {
    {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

bool on(const MaskGrid& m, long x, long y, long z) {
  return m.contains(x, y, z) &&
         m(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
           static_cast<std::size_t>(z)) != 0;
}

template <class F>
void for_each_voxel(const MaskGrid& m, F&& f) {
  for (long z = 0; z < static_cast<long>(m.dims.nz); ++z)
    for (long y = 0; y < static_cast<long>(m.dims.ny); ++y)
      for (long x = 0; x < static_cast<long>(m.dims.nx); ++x) f(x, y, z);
}

}  // namespace

std::string_view to_string(PerturbMode mode) {
  switch (mode) {
    case PerturbMode::kDilate:
      return "dilate";
    case PerturbMode::kErode:
      return "erode";
    case PerturbMode::kContourNoise:
      return "contour_noise";
  }
  return "?";
}

PerturbMode parse_perturb_mode(std::string_view text) {
  if (text == "dilate") return PerturbMode::kDilate;
  if (text == "erode") return PerturbMode::kErode;
  if (text == "contour_noise") return PerturbMode::kContourNoise;
  throw ConfigError("unknown perturbation mode: " + std::string(text));
}

void PerturbationSpec::validate() const {
  if (!(magnitude > 0.0 && magnitude < 0.5))
    throw ConfigError("perturbation: magnitude must be in (0, 0.5)");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw ConfigError("perturbation: flip probability must be in [0, 1]");
}

MaskGrid dilate6(const MaskGrid& mask) {
  MaskGrid out = mask;
  for_each_voxel(mask, [&](long x, long y, long z) {
    if (on(mask, x, y, z)) return;
    for (const auto& d : kFaces)
      if (on(mask, x + d[0], y + d[1], z + d[2])) {
        out(x, y, z) = 1;
        return;
      }
  });
  return out;
}

MaskGrid erode6(const MaskGrid& mask) {
  MaskGrid out = mask;
  for_each_voxel(mask, [&](long x, long y, long z) {
    if (!on(mask, x, y, z)) return;
    for (const auto& d : kFaces)
      if (!on(mask, x + d[0], y + d[1], z + d[2])) {
        out(x, y, z) = 0;
        return;
      }
  });
  return out;
}

MaskGrid largest_component(const MaskGrid& mask) {
  std::vector<int> label(mask.data.size(), 0);
  std::vector<std::size_t> sizes{0};
  std::vector<std::array<long, 3>> stack;
  for_each_voxel(mask, [&](long x, long y, long z) {
    if (!on(mask, x, y, z) || label[mask.index(x, y, z)]) return;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    label[mask.index(x, y, z)] = id;
    stack.push_back({x, y, z});
    while (!stack.empty()) {
      const auto [cx, cy, cz] = stack.back();
      stack.pop_back();
      ++size;
      for (const auto& d : kFaces) {
        const long qx = cx + d[0], qy = cy + d[1], qz = cz + d[2];
        if (!on(mask, qx, qy, qz) || label[mask.index(qx, qy, qz)]) continue;
        label[mask.index(qx, qy, qz)] = id;
        stack.push_back({qx, qy, qz});
      }
    }
    sizes.push_back(size);
  });
  int best = 0;
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] > sizes[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  MaskGrid out(mask.dims, mask.spacing, std::uint8_t{0});
  if (best == 0) return out;
  for (std::size_t i = 0; i < label.size(); ++i) out.data[i] = label[i] == best;
  return out;
}

PerturbResult perturb_roi(const MaskGrid& mask, const PerturbationSpec& spec) {
  spec.validate();
  const double v0 = static_cast<double>(mask_count(mask));
  if (v0 == 0.0) throw DataError("perturb: empty mask");
  PerturbResult r{mask, 0, false};

  if (spec.mode == PerturbMode::kContourNoise) {
    RngStream rng = RngStream(spec.seed).substream("contour_noise");
    MaskGrid noisy = mask;
    for_each_voxel(mask, [&](long x, long y, long z) {
      const bool self = on(mask, x, y, z);
      bool boundary = false;
      for (const auto& d : kFaces) {
        const long qx = x + d[0], qy = y + d[1], qz = z + d[2];
        if (mask.contains(qx, qy, qz) && on(mask, qx, qy, qz) != self) boundary = true;
      }
      if (boundary && rng.uniform() < spec.flip_probability)
        noisy(x, y, z) = self ? 0 : 1;
    });
    r.mask = largest_component(noisy);
    r.steps = 1;
    if (mask_count(r.mask) == 0) {
      r.mask = mask;
      r.flagged = true;
    }
    return r;
  }

  const bool grow = spec.mode == PerturbMode::kDilate;
  while (std::abs(static_cast<double>(mask_count(r.mask)) - v0) / v0 < spec.magnitude) {
    MaskGrid next = grow ? dilate6(r.mask) : erode6(r.mask);
    const std::size_t n = mask_count(next);
    if (n == 0 || next.data == r.mask.data) {
      r.flagged = true;
      break;
    }
    r.mask = std::move(next);
    ++r.steps;
  }
  return r;
}

}  // namespace ldsim::radiomics
