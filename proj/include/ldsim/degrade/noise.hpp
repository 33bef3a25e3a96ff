#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ldsim/core/rng.hpp"
#include "ldsim/projection/radon.hpp"
#include "ldsim/volume/ct_volume.hpp"

namespace ldsim::degrade {

using projection::Sinogram;

// Transmission model: counts ~ Poisson(I0 exp(-p)) plus Gaussian readout
// noise, re-logged against I0.
struct SimpleNoiseParams {
  double I0_ld = 2.5e4;
  double m_e = 0.0;
  double sigma_e2 = 10.0;
  double epsilon_floor = 0.1;

  void validate() const;
};

// Dose reduction by factor a applied directly to line integrals P_A acquired
// at incident flux N0A, with electronic noise level Ne.
struct PhysicsNoiseParams {
  double a = 0.25;
  double N0A = 1e5;
  double Ne = 10.0;

  void validate() const;
  // Standard deviation of the added noise at line integral p.
  double noise_std(double p) const;
};

// Inversion below lambda = 30, PTRS transformed rejection above.
std::uint64_t sample_poisson(RngStream& rng, double lambda);

Sinogram degrade_sinogram_simple(const Sinogram& p_sd,
                                 const SimpleNoiseParams& params,
                                 RngStream& rng);
Sinogram degrade_sinogram_physics(const Sinogram& p_a,
                                  const PhysicsNoiseParams& params,
                                  RngStream& rng);

enum class Method { kSimpleSinogram, kPhysicsSinogram, kRoundTrip };

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct DegradeConfig {
  Method method = Method::kPhysicsSinogram;
  // Zero selects the geometry defaults for the padded slice side.
  std::size_t n_angles = 0;
  std::size_t n_detectors = 0;
  double detector_spacing = 0.5;
  bool cosine_window = false;
  SimpleNoiseParams simple;
  PhysicsNoiseParams physics;
  std::uint64_t seed = 0;
  // Linear attenuation of water (1/mm) used for HU <-> mu.
  double mu_water = 0.0192;
  double window_lo = -1200.0;
  double window_hi = 600.0;

  void validate() const;
  projection::ProjectionGeometry geometry_for(std::size_t side) const;
};

DegradeConfig degrade_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DegradeConfig& c);

// Slice-wise radon -> noise -> fbp of an HU volume. Each axial slice draws
// from substream (seed, subject_id, z), so the result does not depend on the
// worker count. Output values are clamped to the configured window.
volume::CtVolume degrade_volume(const volume::CtVolume& v,
                                const DegradeConfig& cfg,
                                const std::string& subject_id,
                                unsigned workers = 1);

}  // namespace ldsim::degrade
