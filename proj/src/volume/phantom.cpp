#include "ldsim/volume/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ldsim/core/error.hpp"

namespace ldsim::volume {
namespace {

constexpr double kPi = std::numbers::pi;

Point3 normalized(Point3 p) {
  const double n = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  if (n == 0.0) throw DataError("phantom: zero spicule direction");
  return {p.x / n, p.y / n, p.z / n};
}

Point3 random_direction(RngStream& rng) {
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * kPi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

bool inside_component(const PhantomComponent& c, double x, double y,
                      double z) {
  const double dx = x - c.center.x, dy = y - c.center.y;
  const double cs = std::cos(c.rotation), sn = std::sin(c.rotation);
  const double xr = (dx * cs + dy * sn) / c.semi_axes.x;
  const double yr = (-dx * sn + dy * cs) / c.semi_axes.y;
  double q = xr * xr + yr * yr;
  if (c.kind == PhantomComponent::Kind::kEllipsoid) {
    const double zr = (z - c.center.z) / c.semi_axes.z;
    q += zr * zr;
  }
  return q <= 1.0;
}

struct PlaneWave {
  Point3 k;
  double phase;
};

// Nodule geometry resolved against the seed.
struct ResolvedNodule {
  const NoduleSpec* spec;
  std::vector<Point3> directions;
  std::array<PlaneWave, 4> waves;

  double boundary(double ux, double uy, double uz) const {
    double s = 0.0;
    for (const Point3& d : directions)
      s += std::exp(-(1.0 - (ux * d.x + uy * d.y + uz * d.z)) /
                    spec->spicule_width);
    return 1.0 + spec->spicule_amplitude * s;
  }

  bool inside(double x, double y, double z) const {
    const double qx = (x - spec->center.x) / spec->semi_axes.x;
    const double qy = (y - spec->center.y) / spec->semi_axes.y;
    const double qz = (z - spec->center.z) / spec->semi_axes.z;
    const double rho = std::sqrt(qx * qx + qy * qy + qz * qz);
    if (rho <= 1.0) return true;
    if (directions.empty()) return false;
    return rho <= boundary(qx / rho, qy / rho, qz / rho);
  }

  double value(double x, double y, double z) const {
    if (spec->heterogeneity == 0.0) return spec->hu;
    double s = 0.0;
    for (const PlaneWave& w : waves)
      s += std::sin(w.k.x * x + w.k.y * y + w.k.z * z + w.phase);
    return spec->hu + spec->heterogeneity * s / 2.0;
  }
};

double max_boundary(const ResolvedNodule& r) {
  if (r.directions.empty()) return 1.0;
  double best = 1.0;
  for (const Point3& d : r.directions)
    best = std::max(best, r.boundary(d.x, d.y, d.z));
  // Fibonacci sphere sweep catches maxima between overlapping spicules.
  constexpr int kPoints = 2000;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < kPoints; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / kPoints;
    const double rr = std::sqrt(1.0 - z * z);
    best = std::max(best, r.boundary(rr * std::cos(golden * i),
                                     rr * std::sin(golden * i), z));
  }
  return best * 1.02;
}

ResolvedNodule resolve(const NoduleSpec& n, RngStream rng) {
  ResolvedNodule r{&n, {}, {}};
  if (!n.spicule_directions.empty()) {
    for (const Point3& d : n.spicule_directions)
      r.directions.push_back(normalized(d));
  } else {
    for (int k = 0; k < n.spicules; ++k)
      r.directions.push_back(random_direction(rng));
  }
  for (PlaneWave& w : r.waves) {
    const Point3 d = random_direction(rng);
    const double wavelength = 3.0 + 3.0 * rng.uniform();
    const double k = 2.0 * kPi / wavelength;
    w = {{k * d.x, k * d.y, k * d.z}, 2.0 * kPi * rng.uniform()};
  }
  return r;
}

Point3 point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("phantom: expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json point_to_json(const Point3& p) {
  return nlohmann::json::array({p.x, p.y, p.z});
}

}  // namespace

void PhantomSpec::validate() const {
  if (dims.count() == 0) throw ConfigError("phantom: empty dims");
  if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
    throw ConfigError("phantom: spacing must be > 0");
  if (components.empty() && nodules.empty())
    throw ConfigError("phantom: empty spec");
  if (supersample < 1) throw ConfigError("phantom: supersample must be >= 1");
  if (noise_sigma_hu < 0) throw ConfigError("phantom: negative noise sigma");
  for (const auto& c : components)
    if (!(c.semi_axes.x > 0 && c.semi_axes.y > 0 &&
          (c.kind == PhantomComponent::Kind::kCylinder || c.semi_axes.z > 0)))
      throw ConfigError("phantom: component semi-axes must be > 0");
  for (const auto& n : nodules) {
    if (!(n.semi_axes.x > 0 && n.semi_axes.y > 0 && n.semi_axes.z > 0))
      throw ConfigError("phantom: nodule semi-axes must be > 0");
    if (n.malignancy_score < 1 || n.malignancy_score > 5)
      throw ConfigError("phantom: malignancy score outside [1, 5]");
    if (n.spicule_width <= 0 || n.spicule_amplitude < 0 || n.spicules < 0)
      throw ConfigError("phantom: invalid spiculation parameters");
  }
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  PhantomSpec s;
  try {
    if (j.contains("dims")) {
      const auto& d = j.at("dims");
      s.dims = {d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(),
                d.at(2).get<std::size_t>()};
    }
    if (j.contains("spacing")) {
      const Point3 p = point_from_json(j.at("spacing"));
      s.spacing = {p.x, p.y, p.z};
    }
    s.background_hu = j.value("background_hu", s.background_hu);
    s.noise_sigma_hu = j.value("noise_sigma_hu", s.noise_sigma_hu);
    s.supersample = j.value("supersample", s.supersample);
    for (const auto& c : j.value("components", nlohmann::json::array())) {
      PhantomComponent pc;
      const std::string kind = c.value("kind", "ellipsoid");
      if (kind == "ellipsoid")
        pc.kind = PhantomComponent::Kind::kEllipsoid;
      else if (kind == "cylinder")
        pc.kind = PhantomComponent::Kind::kCylinder;
      else
        throw ConfigError("phantom: unknown component kind '" + kind + "'");
      pc.center = point_from_json(c.at("center"));
      pc.semi_axes = point_from_json(c.at("semi_axes"));
      pc.rotation = c.value("rotation", 0.0);
      pc.hu = c.at("hu").get<double>();
      s.components.push_back(pc);
    }
    for (const auto& n : j.value("nodules", nlohmann::json::array())) {
      NoduleSpec ns;
      ns.id = n.at("id").get<std::string>();
      ns.center = point_from_json(n.at("center"));
      ns.semi_axes = point_from_json(n.at("semi_axes"));
      ns.hu = n.at("hu").get<double>();
      ns.malignancy_score = n.at("malignancy_score").get<double>();
      for (const auto& d : n.value("spicule_directions",
                                   nlohmann::json::array()))
        ns.spicule_directions.push_back(point_from_json(d));
      ns.spicules = n.value("spicules", 0);
      ns.spicule_amplitude = n.value("spicule_amplitude", 0.0);
      ns.spicule_width = n.value("spicule_width", ns.spicule_width);
      ns.heterogeneity = n.value("heterogeneity", 0.0);
      s.nodules.push_back(std::move(ns));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const PhantomSpec& s) {
  nlohmann::json j;
  j["dims"] = {s.dims.nx, s.dims.ny, s.dims.nz};
  j["spacing"] = {s.spacing.x, s.spacing.y, s.spacing.z};
  j["background_hu"] = s.background_hu;
  j["noise_sigma_hu"] = s.noise_sigma_hu;
  j["supersample"] = s.supersample;
  j["components"] = nlohmann::json::array();
  for (const auto& c : s.components)
    j["components"].push_back(
        {{"kind", c.kind == PhantomComponent::Kind::kEllipsoid ? "ellipsoid"
                                                               : "cylinder"},
         {"center", point_to_json(c.center)},
         {"semi_axes", point_to_json(c.semi_axes)},
         {"rotation", c.rotation},
         {"hu", c.hu}});
  j["nodules"] = nlohmann::json::array();
  for (const auto& n : s.nodules) {
    nlohmann::json dirs = nlohmann::json::array();
    for (const auto& d : n.spicule_directions) dirs.push_back(point_to_json(d));
    j["nodules"].push_back({{"id", n.id},
                            {"center", point_to_json(n.center)},
                            {"semi_axes", point_to_json(n.semi_axes)},
                            {"hu", n.hu},
                            {"malignancy_score", n.malignancy_score},
                            {"spicule_directions", dirs},
                            {"spicules", n.spicules},
                            {"spicule_amplitude", n.spicule_amplitude},
                            {"spicule_width", n.spicule_width},
                            {"heterogeneity", n.heterogeneity}});
  }
  return j;
}

double nodule_extent(const NoduleSpec& n) {
  RngStream unused(0);
  const ResolvedNodule r = resolve(n, unused);
  const double axis =
      std::max({n.semi_axes.x, n.semi_axes.y, n.semi_axes.z});
  return axis * max_boundary(r);
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  const RngStream root(seed);
  const Dims d = spec.dims;
  const Spacing sp = spec.spacing;
  const int ss = spec.supersample;
  const double inv = 1.0 / (ss * ss * ss);
  auto offset = [ss](int k, double step) {
    return ((k + 0.5) / ss - 0.5) * step;
  };

  std::vector<ResolvedNodule> resolved;
  std::vector<std::array<long, 6>> boxes;  // x0 x1 y0 y1 z0 z1, inclusive
  for (std::size_t i = 0; i < spec.nodules.size(); ++i) {
    const NoduleSpec& n = spec.nodules[i];
    resolved.push_back(resolve(n, root.substream("nodule", i)));
    const double ext = std::max({n.semi_axes.x, n.semi_axes.y,
                                 n.semi_axes.z}) *
                       max_boundary(resolved.back());
    auto lo = [](double c, double e, double s) {
      return std::max(0L, static_cast<long>(std::floor((c - e) / s)) - 1);
    };
    auto hi = [](double c, double e, double s, std::size_t n) {
      return std::min(static_cast<long>(n) - 1,
                      static_cast<long>(std::ceil((c + e) / s)) + 1);
    };
    boxes.push_back({lo(n.center.x, ext, sp.x), hi(n.center.x, ext, sp.x, d.nx),
                     lo(n.center.y, ext, sp.y), hi(n.center.y, ext, sp.y, d.ny),
                     lo(n.center.z, ext, sp.z),
                     hi(n.center.z, ext, sp.z, d.nz)});
  }

  std::vector<double> img(d.count(), spec.background_hu);
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) {
        const double cx = x * sp.x, cy = y * sp.y, cz = z * sp.z;
        double v = spec.background_hu;
        for (const PhantomComponent& c : spec.components) {
          int hits = 0;
          for (int a = 0; a < ss; ++a)
            for (int b = 0; b < ss; ++b)
              for (int e = 0; e < ss; ++e)
                hits += inside_component(c, cx + offset(e, sp.x),
                                         cy + offset(b, sp.y),
                                         cz + offset(a, sp.z));
          const double f = hits * inv;
          v = v * (1.0 - f) + c.hu * f;
        }
        img[x + d.nx * (y + d.ny * z)] = v;
      }

  std::vector<std::vector<std::uint8_t>> masks(
      spec.nodules.size(), std::vector<std::uint8_t>(d.count(), 0));
  std::vector<std::uint8_t> owner(d.count(), 0);
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    const ResolvedNodule& r = resolved[i];
    const auto& bx = boxes[i];
    for (long z = bx[4]; z <= bx[5]; ++z)
      for (long y = bx[2]; y <= bx[3]; ++y)
        for (long x = bx[0]; x <= bx[1]; ++x) {
          const double cx = x * sp.x, cy = y * sp.y, cz = z * sp.z;
          int hits = 0;
          for (int a = 0; a < ss; ++a)
            for (int b = 0; b < ss; ++b)
              for (int e = 0; e < ss; ++e)
                hits += r.inside(cx + offset(e, sp.x), cy + offset(b, sp.y),
                                 cz + offset(a, sp.z));
          const std::size_t idx = x + d.nx * (y + d.ny * z);
          const double f = hits * inv;
          img[idx] = img[idx] * (1.0 - f) + r.value(cx, cy, cz) * f;
          if (r.inside(cx, cy, cz)) {
            if (owner[idx] != 0)
              throw DataError("phantom: nodules '" +
                              spec.nodules[owner[idx] - 1].id + "' and '" +
                              spec.nodules[i].id + "' overlap");
            owner[idx] = static_cast<std::uint8_t>(std::min<std::size_t>(
                i + 1, 255));
            masks[i][idx] = 1;
          }
        }
  }

  if (spec.noise_sigma_hu > 0) {
    RngStream noise = root.substream("noise");
    for (double& v : img) v += spec.noise_sigma_hu * noise.normal();
  }

  std::vector<float> values(img.begin(), img.end());
  CtVolume volume(d, sp, Point3{}, IntensityUnit::kHU, std::move(values));
  std::vector<NoduleMask> out;
  for (std::size_t i = 0; i < spec.nodules.size(); ++i) {
    if (std::none_of(masks[i].begin(), masks[i].end(),
                     [](std::uint8_t m) { return m != 0; }))
      throw DataError("phantom: nodule '" + spec.nodules[i].id +
                      "' has no voxel inside the volume");
    out.emplace_back(d, sp, Point3{}, std::move(masks[i]), spec.nodules[i].id,
                     spec.nodules[i].malignancy_score);
  }
  return {std::move(volume), std::move(out)};
}

PhantomSpec random_thorax_spec(const ThoraxConfig& cfg, RngStream& rng,
                               const std::string& subject_id) {
  if (cfg.min_nodules < 1 || cfg.max_nodules < cfg.min_nodules)
    throw ConfigError("thorax: invalid nodule count range");
  PhantomSpec s;
  s.dims = cfg.dims;
  s.spacing = cfg.spacing;
  s.noise_sigma_hu = cfg.noise_sigma_hu;
  const double w = cfg.dims.nx * cfg.spacing.x;
  const double h = cfg.dims.ny * cfg.spacing.y;
  const double depth = cfg.dims.nz * cfg.spacing.z;
  const double cx = 0.5 * (w - cfg.spacing.x), cy = 0.5 * (h - cfg.spacing.y);
  using Kind = PhantomComponent::Kind;
  const double jitter = 0.03 * (rng.uniform() - 0.5);
  s.components.push_back(
      {Kind::kCylinder, {cx, cy, 0}, {0.46 * w, (0.36 + jitter) * h, 0}, 0,
       40.0});
  PhantomComponent lung_l{Kind::kCylinder, {cx - 0.2 * w, cy - 0.02 * h, 0},
                          {0.15 * w, 0.24 * h, 0}, 0.08, -850.0};
  PhantomComponent lung_r = lung_l;
  lung_r.center.x = cx + 0.2 * w;
  lung_r.rotation = -0.08;
  s.components.push_back(lung_l);
  s.components.push_back(lung_r);
  s.components.push_back(
      {Kind::kCylinder, {cx, cy + 0.26 * h, 0}, {0.06 * w, 0.06 * w, 0}, 0,
       700.0});

  const int count = cfg.min_nodules +
                    static_cast<int>(rng.uniform_index(
                        static_cast<std::uint64_t>(cfg.max_nodules -
                                                   cfg.min_nodules + 1)));
  std::vector<std::pair<Point3, double>> placed;
  for (int k = 0; k < count; ++k) {
    NoduleSpec n;
    n.id = subject_id + "_n" + std::to_string(k);
    const bool malignant = rng.uniform() < cfg.malignant_fraction;
    const double r = malignant ? 3.0 + 2.5 * rng.uniform()
                               : 2.5 + 2.5 * rng.uniform();
    auto axis = [&] { return r * (1.0 + 0.3 * (rng.uniform() - 0.5)); };
    n.semi_axes = {axis(), axis(), axis()};
    if (malignant) {
      n.hu = 40.0 + 50.0 * rng.uniform();
      n.heterogeneity = 30.0 + 30.0 * rng.uniform();
      n.malignancy_score = 4.2 + 0.8 * rng.uniform();
      const int spikes = 6 + static_cast<int>(rng.uniform_index(5));
      for (int q = 0; q < spikes; ++q)
        n.spicule_directions.push_back(random_direction(rng));
      n.spicule_amplitude = 0.5 + 0.3 * rng.uniform();
      n.spicule_width = 0.02 + 0.02 * rng.uniform();
    } else {
      n.hu = -20.0 + 60.0 * rng.uniform();
      n.malignancy_score = 1.0 + 2.9 * rng.uniform();
    }
    const double ext = nodule_extent(n);
    const double rmax = std::max({n.semi_axes.x, n.semi_axes.y, n.semi_axes.z});
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
      const PhantomComponent& lung = rng.uniform() < 0.5 ? lung_l : lung_r;
      double u = 0, v = 0;
      do {
        u = 2.0 * rng.uniform() - 1.0;
        v = 2.0 * rng.uniform() - 1.0;
      } while (u * u + v * v > 1.0);
      const double ax = lung.semi_axes.x - rmax - 1.0;
      const double ay = lung.semi_axes.y - rmax - 1.0;
      const double zlo = ext + 1.0, zhi = depth - cfg.spacing.z - ext - 1.0;
      if (ax <= 0 || ay <= 0 || zhi <= zlo) break;
      const Point3 c{lung.center.x + u * ax, lung.center.y + v * ay,
                     zlo + (zhi - zlo) * rng.uniform()};
      if (c.x - ext < 0 || c.y - ext < 0 || c.x + ext > w - cfg.spacing.x ||
          c.y + ext > h - cfg.spacing.y)
        continue;
      ok = std::all_of(placed.begin(), placed.end(), [&](const auto& p) {
        const double dx = p.first.x - c.x, dy = p.first.y - c.y,
                     dz = p.first.z - c.z;
        return std::sqrt(dx * dx + dy * dy + dz * dz) > p.second + ext + 2.0;
      });
      if (ok) {
        n.center = c;
        placed.emplace_back(c, ext);
      }
    }
    if (!ok) {
      if (k == 0) throw DataError("thorax: volume too small to place a nodule");
      continue;
    }
    s.nodules.push_back(std::move(n));
  }
  return s;
}

std::vector<double> shepp_logan_2d(std::size_t n, int supersample) {
  if (n == 0 || supersample < 1)
    throw ConfigError("shepp_logan_2d: invalid size");
  struct Ellipse {
    double x0, y0, a, b, phi_deg, value;
  };
  static constexpr std::array<Ellipse, 10> kEllipses{{
      {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
      {0.22, 0.0, 0.11, 0.31, -18.0, -0.02},
      {-0.22, 0.0, 0.16, 0.41, 18.0, -0.02},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
      {0.0, -0.605, 0.023, 0.023, 0.0, 0.01},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
  }};
  std::vector<double> img(n * n, 0.0);
  const double step = 2.0 / static_cast<double>(n);
  const double inv = 1.0 / (supersample * supersample);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int i = 0; i < supersample; ++i)
        for (int j = 0; j < supersample; ++j) {
          const double x = -1.0 + (c + (j + 0.5) / supersample) * step;
          const double y = 1.0 - (r + (i + 0.5) / supersample) * step;
          for (const Ellipse& e : kEllipses) {
            const double phi = e.phi_deg * kPi / 180.0;
            const double dx = x - e.x0, dy = y - e.y0;
            const double xr = dx * std::cos(phi) + dy * std::sin(phi);
            const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
            if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0)
              acc += e.value;
          }
        }
      img[r * n + c] = acc * inv;
    }
  return img;
}

}  // namespace ldsim::volume
