#include "ldsim/degrade/noise.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "ldsim/core/error.hpp"
#include "ldsim/core/parallel.hpp"

namespace ldsim::degrade {
namespace {

std::uint64_t poisson_inversion(RngStream& rng, double lambda) {
  const double u = rng.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf < u) break;  // float exhaustion in the far tail
  }
  return k;
}

// Hormann (1993), "The transformed rejection method for generating Poisson
// random variables".
std::uint64_t poisson_ptrs(RngStream& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - boost::math::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

template <class T>
T read(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

void SimpleNoiseParams::validate() const {
  if (!(I0_ld > 0)) throw ConfigError("simple noise: I0_ld must be > 0");
  if (!(sigma_e2 >= 0)) throw ConfigError("simple noise: sigma_e2 must be >= 0");
  if (!(epsilon_floor > 0))
    throw ConfigError("simple noise: epsilon_floor must be > 0");
  if (!std::isfinite(m_e)) throw ConfigError("simple noise: m_e not finite");
}

void PhysicsNoiseParams::validate() const {
  if (!(a > 0 && a <= 1)) throw ConfigError("physics noise: a must be in (0, 1]");
  if (!(N0A > 0)) throw ConfigError("physics noise: N0A must be > 0");
  if (!(Ne >= 0)) throw ConfigError("physics noise: Ne must be >= 0");
}

double PhysicsNoiseParams::noise_std(double p) const {
  const double q = std::exp(p) / N0A;
  return std::sqrt((1.0 - a) / a * q * (1.0 + (1.0 + a) / a * Ne * q));
}

std::uint64_t sample_poisson(RngStream& rng, double lambda) {
  if (!(lambda >= 0) || !std::isfinite(lambda))
    throw NumericalError("poisson: invalid rate");
  if (lambda == 0.0) return 0;
  return lambda < 30.0 ? poisson_inversion(rng, lambda)
                       : poisson_ptrs(rng, lambda);
}

Sinogram degrade_sinogram_simple(const Sinogram& p_sd,
                                 const SimpleNoiseParams& params,
                                 RngStream& rng) {
  params.validate();
  p_sd.validate();
  Sinogram out = p_sd;
  const double sigma = std::sqrt(params.sigma_e2);
  for (double& p : out.values) {
    double d = static_cast<double>(sample_poisson(rng, params.I0_ld * std::exp(-p)));
    if (sigma > 0 || params.m_e != 0) d += params.m_e + sigma * rng.normal();
    p = std::log(params.I0_ld / std::max(d, params.epsilon_floor));
  }
  return out;
}

Sinogram degrade_sinogram_physics(const Sinogram& p_a,
                                  const PhysicsNoiseParams& params,
                                  RngStream& rng) {
  params.validate();
  p_a.validate();
  Sinogram out = p_a;
  if (params.a == 1.0) return out;
  for (double& p : out.values) p += params.noise_std(p) * rng.normal();
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kSimpleSinogram:
      return "simple";
    case Method::kPhysicsSinogram:
      return "physics";
    case Method::kRoundTrip:
      return "roundtrip";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "simple" || text == "SimpleSinogram") return Method::kSimpleSinogram;
  if (text == "physics" || text == "PhysicsSinogram")
    return Method::kPhysicsSinogram;
  if (text == "roundtrip" || text == "RoundTrip") return Method::kRoundTrip;
  throw ConfigError("degrade: unknown method '" + text + "'");
}

void DegradeConfig::validate() const {
  simple.validate();
  physics.validate();
  if (!(detector_spacing > 0))
    throw ConfigError("degrade: detector_spacing must be > 0");
  if (!(mu_water > 0)) throw ConfigError("degrade: mu_water must be > 0");
  if (!(window_lo < window_hi))
    throw ConfigError("degrade: window_lo must be < window_hi");
}

projection::ProjectionGeometry DegradeConfig::geometry_for(
    std::size_t side) const {
  auto g = projection::ProjectionGeometry::for_image(side, detector_spacing);
  if (n_angles) g.n_angles = n_angles;
  if (n_detectors) g.n_detectors = n_detectors;
  g.validate(side);
  return g;
}

DegradeConfig degrade_config_from_json(const nlohmann::json& j) {
  DegradeConfig c;
  try {
    if (j.contains("method")) c.method = parse_method(j.at("method"));
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      c.n_angles = read<std::size_t>(g, "n_angles", c.n_angles);
      c.n_detectors = read<std::size_t>(g, "n_detectors", c.n_detectors);
      c.detector_spacing = read(g, "detector_spacing", c.detector_spacing);
      c.cosine_window = read(g, "cosine_window", c.cosine_window);
    }
    if (j.contains("simple")) {
      const auto& s = j.at("simple");
      c.simple.I0_ld = read(s, "I0_ld", c.simple.I0_ld);
      c.simple.m_e = read(s, "m_e", c.simple.m_e);
      c.simple.sigma_e2 = read(s, "sigma_e2", c.simple.sigma_e2);
      c.simple.epsilon_floor = read(s, "epsilon_floor", c.simple.epsilon_floor);
    }
    if (j.contains("physics")) {
      const auto& p = j.at("physics");
      c.physics.a = read(p, "a", c.physics.a);
      c.physics.N0A = read(p, "N0A", c.physics.N0A);
      c.physics.Ne = read(p, "Ne", c.physics.Ne);
    }
    c.seed = read<std::uint64_t>(j, "seed", c.seed);
    c.mu_water = read(j, "mu_water", c.mu_water);
    c.window_lo = read(j, "window_lo", c.window_lo);
    c.window_hi = read(j, "window_hi", c.window_hi);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("degrade config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const DegradeConfig& c) {
  return {{"method", to_string(c.method)},
          {"geometry",
           {{"n_angles", c.n_angles},
            {"n_detectors", c.n_detectors},
            {"detector_spacing", c.detector_spacing},
            {"cosine_window", c.cosine_window}}},
          {"simple",
           {{"I0_ld", c.simple.I0_ld},
            {"m_e", c.simple.m_e},
            {"sigma_e2", c.simple.sigma_e2},
            {"epsilon_floor", c.simple.epsilon_floor}}},
          {"physics",
           {{"a", c.physics.a}, {"N0A", c.physics.N0A}, {"Ne", c.physics.Ne}}},
          {"seed", c.seed},
          {"mu_water", c.mu_water},
          {"window_lo", c.window_lo},
          {"window_hi", c.window_hi}};
}

volume::CtVolume degrade_volume(const volume::CtVolume& v,
                                const DegradeConfig& cfg,
                                const std::string& subject_id,
                                unsigned workers) {
  cfg.validate();
  if (v.unit() != volume::IntensityUnit::kHU)
    throw DataError("degrade_volume expects an HU volume");
  const auto& d = v.dims();
  const auto& sp = v.spacing();
  if (std::abs(sp.x - sp.y) > 1e-9 * sp.x)
    throw DataError("degrade_volume requires square in-plane pixels");
  const std::size_t side = std::max(d.nx, d.ny);
  const auto geom = cfg.geometry_for(side);
  const projection::RampOptions ramp{cfg.cosine_window};
  const RngStream root(cfg.seed);
  const std::string tag = "degrade/" + subject_id;
  const double mu_w = cfg.mu_water;
  std::vector<float> out(v.values().size());

  parallel_for(d.nz, workers, [&](std::size_t z) {
    projection::Image2D slice(d.ny, d.nx);
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x)
        slice(y, x) = std::max(0.0, mu_w * (1.0 + v.at(x, y, z) / 1000.0));
    const auto square = projection::pad_to_square(slice, 0.0);
    Sinogram sino = projection::radon(square, geom, sp.x);
    RngStream rng = root.substream(tag, z);
    switch (cfg.method) {
      case Method::kSimpleSinogram:
        sino = degrade_sinogram_simple(sino, cfg.simple, rng);
        break;
      case Method::kPhysicsSinogram:
        sino = degrade_sinogram_physics(sino, cfg.physics, rng);
        break;
      case Method::kRoundTrip:
        break;
    }
    const auto rec = projection::crop_center(
        projection::fbp(sino, side, ramp, sp.x), d.ny, d.nx);
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) {
        const double hu = 1000.0 * (rec(y, x) / mu_w - 1.0);
        out[v.index(x, y, z)] = static_cast<float>(
            std::clamp(hu, cfg.window_lo, cfg.window_hi));
      }
  });
  return v.with_values(std::move(out), volume::IntensityUnit::kHU,
                       v.smoothed());
}

}  // namespace ldsim::degrade
