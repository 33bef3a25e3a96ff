#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldsim/core/rng.hpp"
#include "ldsim/volume/ct_volume.hpp"

namespace ldsim::volume {

// Background anatomy. Cylinders extend along z through the whole slab.
struct PhantomComponent {
  enum class Kind { kEllipsoid, kCylinder };
  Kind kind = Kind::kEllipsoid;
  Point3 center;          // mm, relative to the volume origin
  Point3 semi_axes;       // mm; z ignored for cylinders
  double rotation = 0.0;  // radians about z
  double hu = 0.0;        // replaces whatever lies underneath
};

struct NoduleSpec {
  std::string id;
  Point3 center;     // mm, relative to the volume origin
  Point3 semi_axes;  // mm
  double hu = 0.0;
  double malignancy_score = 1.0;
  // Spiculation: boundary radius scaled by 1 + amplitude * sum_k
  // exp(-(1 - u.d_k) / width) over unit directions d_k. When no directions
  // are given, `spicules` random directions are drawn from the seed.
  std::vector<Point3> spicule_directions;
  int spicules = 0;
  double spicule_amplitude = 0.0;
  double spicule_width = 0.03;
  // Amplitude (HU) of smooth internal heterogeneity.
  double heterogeneity = 0.0;
};

struct PhantomSpec {
  Dims dims{64, 64, 16};
  Spacing spacing;
  double background_hu = -1000.0;
  double noise_sigma_hu = 0.0;
  int supersample = 3;
  std::vector<PhantomComponent> components;
  std::vector<NoduleSpec> nodules;

  void validate() const;
};

PhantomSpec phantom_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PhantomSpec& spec);

struct Phantom {
  CtVolume volume;
  std::vector<NoduleMask> masks;
};

// Deterministic for a fixed (spec, seed). Masks mark voxel centres inside each
// nodule; image intensities use supersampled partial-volume coverage.
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

// Random thorax slab: body, two lungs, spine, and nodules placed inside the
// lungs without overlap. Malignant nodules are spiculated, denser and
// heterogeneous; benign nodules are smooth and homogeneous.
struct ThoraxConfig {
  Dims dims{96, 96, 32};
  Spacing spacing;
  int min_nodules = 1;
  int max_nodules = 3;
  double malignant_fraction = 0.4;
  double noise_sigma_hu = 8.0;
};

// Largest distance (mm) from the centre to the nodule surface.
double nodule_extent(const NoduleSpec& n);

PhantomSpec random_thorax_spec(const ThoraxConfig& cfg, RngStream& rng,
                               const std::string& subject_id);

// Original Shepp-Logan head phantom on an n x n grid spanning [-1, 1]^2, row 0
// at the top, averaged over supersample^2 points per pixel. Row-major.
std::vector<double> shepp_logan_2d(std::size_t n, int supersample = 4);

}  // namespace ldsim::volume
