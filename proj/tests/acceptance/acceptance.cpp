// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only when
// every selected criterion passes.
//
//   acceptance [--work <dir>] [--only <n>[,<n>...]] [--workers <n>]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "ldsim/app/commands.hpp"
#include "ldsim/app/config.hpp"
#include "ldsim/app/io.hpp"
#include "ldsim/core/rng.hpp"
#include "ldsim/degrade/noise.hpp"
#include "ldsim/metrics/distribution.hpp"
#include "ldsim/ml/dataset.hpp"
#include "ldsim/ml/roc.hpp"
#include "ldsim/projection/radon.hpp"
#include "ldsim/radiomics/extract.hpp"
#include "ldsim/radiomics/shape.hpp"
#include "ldsim/radiomics/texture.hpp"
#include "ldsim/radiomics/wavelet.hpp"
#include "ldsim/stats/bootstrap.hpp"
#include "ldsim/stats/tests.hpp"
#include "ldsim/volume/phantom.hpp"
#include "support/texture_oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ldsim;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

projection::Sinogram constant_sinogram(std::size_t n, double p) {
  projection::ProjectionGeometry g;
  g.n_angles = 1;
  g.n_detectors = n;
  projection::Sinogram s(g);
  std::fill(s.values.begin(), s.values.end(), p);
  return s;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, RngStream& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// ---------------------------------------------------------------- 1

Outcome fbp_round_trip() {
  Outcome o;
  const std::size_t n = 256;
  const projection::Image2D img(n, n, volume::shepp_logan_2d(n));
  auto g = projection::ProjectionGeometry::for_image(n);
  g.n_angles = 360;
  g.assume_in_circle = true;
  const auto t0 = Clock::now();
  const projection::Image2D rec = projection::fbp(projection::radon(img, g), n);
  const double secs = seconds(t0);
  double num = 0, den = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      if (!projection::in_inscribed_circle(n, r, c)) continue;
      num += (rec(r, c) - img(r, c)) * (rec(r, c) - img(r, c));
      den += img(r, c) * img(r, c);
    }
  const double rmse = std::sqrt(num / den);
  o.check(rmse < 0.05, "relative RMSE < 5%");
  o.check(secs < 10.0, "runtime < 10 s");
  o.note("relative RMSE " + fmt(100 * rmse, 3) + "%, " + fmt(secs, 3) + " s");
  return o;
}

// ---------------------------------------------------------------- 2

Outcome full_dose_identity() {
  Outcome o;
  const std::size_t n = 128;
  const projection::Image2D img(n, n, volume::shepp_logan_2d(n));
  auto g = projection::ProjectionGeometry::for_image(n);
  const projection::Sinogram s = projection::radon(img, g);
  degrade::PhysicsNoiseParams p;
  p.a = 1.0;
  bool identical = true;
  for (double ne : {0.0, 10.0, 100.0}) {
    p.Ne = ne;
    RngStream rng(static_cast<std::uint64_t>(ne) + 1);
    identical = identical && degrade::degrade_sinogram_physics(s, p, rng).values == s.values;
  }
  o.check(identical, "a = 1 output bit-identical to input");
  o.check(p.noise_std(1.0) == 0.0, "noise scale zero at a = 1");
  o.note(std::to_string(s.values.size()) + " line integrals compared bitwise");
  return o;
}

// ---------------------------------------------------------------- 3

Outcome physics_variance() {
  Outcome o;
  struct Point {
    double a, n0a, ne, p;
  };
  const std::vector<Point> grid = {
      {0.5, 1e5, 0, 0.0},   {0.25, 1e5, 10, 0.5}, {0.1, 1e5, 10, 1.0},
      {0.25, 1e4, 0, 2.0},  {0.75, 1e6, 50, 3.0}, {0.05, 1e5, 5, 0.2},
      {0.25, 5e4, 20, 1.5}, {0.9, 1e5, 0, 4.0},   {0.33, 2e5, 100, 2.5},
      {0.2, 1e5, 1, 0.0}};
  double worst = 0;
  std::uint64_t seed = 300;
  for (const Point& g : grid) {
    degrade::PhysicsNoiseParams p{g.a, g.n0a, g.ne};
    const double e = std::exp(g.p) / g.n0a;
    const double expected = std::sqrt((1 - g.a) / g.a * e * (1 + (1 + g.a) / g.a * g.ne * e));
    RngStream rng(seed++);
    const auto s = constant_sinogram(1000000, g.p);
    const auto out = degrade::degrade_sinogram_physics(s, p, rng);
    std::vector<double> diff(out.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = out.values[i] - s.values[i];
    const double rel = std::abs(std::sqrt(moments(diff).var) / expected - 1.0);
    worst = std::max(worst, rel);
  }
  o.check(worst < 0.03, "std within 3% on every grid point");
  o.note("10 points x 1e6 samples, worst relative error " + fmt(100 * worst, 3) + "%");
  return o;
}

// ---------------------------------------------------------------- 4

Outcome simple_noise_statistics() {
  Outcome o;
  double worst = 0;
  for (double lambda : {10.0, 1e3, 1e5}) {
    RngStream rng(static_cast<std::uint64_t>(lambda) + 7);
    std::vector<double> x(1000000);
    for (double& v : x) v = static_cast<double>(degrade::sample_poisson(rng, lambda));
    const Moments m = moments(x);
    const double em = std::abs(m.mean / lambda - 1), ev = std::abs(m.var / lambda - 1);
    o.check(em < 0.02 && ev < 0.02, "Poisson moments at lambda " + fmt(lambda));
    worst = std::max({worst, em, ev});
  }
  degrade::SimpleNoiseParams p;
  p.I0_ld = 1e4;
  p.sigma_e2 = 0;
  RngStream rng(3);
  const auto out = degrade::degrade_sinogram_simple(constant_sinogram(1000000, 0.0), p, rng);
  const double sd = std::sqrt(moments(out.values).var);
  o.check(std::abs(sd / 0.01 - 1) < 0.03, "log-domain std 0.01 within 3%");
  o.note("worst Poisson moment error " + fmt(100 * worst, 3) + "%, log std " + fmt(sd, 5));
  return o;
}

// ---------------------------------------------------------------- 5

Outcome fid_checks() {
  Outcome o;
  RngStream rng(21);
  const auto s = metrics::gaussian_stats(random_matrix(200, 16, rng));
  const double same = metrics::fid(s, s);
  o.check(std::abs(same) <= 1e-6, "identical stats give 0");
  metrics::EmbeddingStats a, b;
  a.mu = Eigen::VectorXd::Constant(1, 0.0);
  b.mu = Eigen::VectorXd::Constant(1, 1.0);
  a.sigma = b.sigma = Eigen::MatrixXd::Constant(1, 1, 1.0);
  a.n = b.n = 10;
  const double one = metrics::fid(a, b);
  o.check(std::abs(one - 1.0) <= 1e-8, "1-D analytic case equals 1");
  double worst = 0;
  for (Eigen::Index d : {1, 2, 8, 32, 64, 128}) {
    const Eigen::MatrixXd g = random_matrix(d, d + 5, rng);
    const Eigen::MatrixXd m = g * g.transpose();
    const Eigen::MatrixXd r = metrics::sqrtm_psd(m);
    worst = std::max(worst, (r * r - m).norm() / m.norm());
  }
  o.check(worst < 1e-8, "sqrtm(M)^2 = M within 1e-8");
  o.note("fid(s,s) " + fmt(same) + ", 1-D " + fmt(one, 12) + ", sqrtm residual " + fmt(worst));
  return o;
}

// ---------------------------------------------------------------- 6

double mmd_oracle(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  auto k = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    double dot = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) dot += p[i] * q[i];
    return std::pow(dot / static_cast<double>(p.size()) + 1.0, 3);
  };
  const double m = static_cast<double>(x.rows()), n = static_cast<double>(y.rows());
  double sxx = 0, syy = 0, sxy = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      if (i != j) sxx += k(x.row(i), x.row(j));
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j)
      if (i != j) syy += k(y.row(i), y.row(j));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j) sxy += k(x.row(i), y.row(j));
  return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2 * sxy / (m * n);
}

Outcome kid_checks() {
  Outcome o;
  RngStream rng(30);
  double worst = 0;
  for (Eigen::Index n : {2, 5, 17, 50}) {
    const Eigen::MatrixXd x = random_matrix(n, 8, rng);
    const Eigen::MatrixXd y = random_matrix(n, 8, rng).array() + 0.2;
    RngStream r(1);
    const metrics::KidResult k = metrics::kid(x, y, static_cast<std::size_t>(n), 1, r);
    worst = std::max(worst, std::abs(k.mean - mmd_oracle(x, y)));
  }
  o.check(worst < 1e-10, "KID equals pairwise oracle within 1e-10");
  const Eigen::MatrixXd x = random_matrix(300, 16, rng), y = random_matrix(300, 16, rng);
  RngStream r(2);
  const metrics::KidResult k = metrics::kid(x, y, 100, 10, r);
  o.check(std::abs(k.mean) < 2 * k.std, "identical distributions within 2 std of 0");
  o.note("oracle gap " + fmt(worst) + ", same-distribution " + fmt(k.mean) + " +- " + fmt(k.std));
  return o;
}

// ---------------------------------------------------------------- 7

volume::MaskGrid ellipsoid_mask(double a, double b, double c, std::size_t n) {
  volume::MaskGrid m({n, n, n}, {1, 1, 1}, std::uint8_t{0});
  const double h = (static_cast<double>(n) - 1) / 2.0;
  for (std::size_t z = 0; z < n; ++z)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = (x - h) / a, dy = (y - h) / b, dz = (z - h) / c;
        if (dx * dx + dy * dy + dz * dz <= 1.0) m(x, y, z) = 1;
      }
  return m;
}

Outcome radiomics_checks() {
  Outcome o;
  const double sph = radiomics::shape_features(ellipsoid_mask(10, 10, 10, 27)).at("Sphericity");
  o.check(sph >= 0.95 && sph <= 1.0, "ball sphericity in [0.95, 1]");
  const double major =
      radiomics::shape_features(ellipsoid_mask(20, 10, 10, 45)).at("MajorAxisLength");
  const double expected = 4.0 * 20.0 / std::sqrt(5.0);
  o.check(std::abs(major / expected - 1) < 0.03, "ellipsoid major axis within 3%");

  using namespace radiomics::oracle;
  int rois = 0;
  bool equal = true;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const radiomics::Dims d{1 + seed % 6, 1 + (seed / 2) % 6, 1 + (seed / 3) % 6};
    const radiomics::RoiSample r = random_roi(d, 2 + static_cast<int>(seed % 5), 0.75, seed);
    for (const auto& dir : radiomics::unique_directions()) {
      equal = equal && radiomics::glcm_matrix(r, dir) == glcm_oracle(r, dir);
      equal = equal && radiomics::glrlm_matrix(r, dir) == glrlm_oracle(r, dir);
    }
    equal = equal && radiomics::glszm_matrix(r) == glszm_oracle(r);
    equal = equal && radiomics::gldm_matrix(r) == gldm_oracle(r);
    const radiomics::Ngtdm a = radiomics::ngtdm_matrix(r), b = ngtdm_oracle(r);
    equal = equal && a.n == b.n && (a.s - b.s).cwiseAbs().maxCoeff() < 1e-12;
    ++rois;
  }
  o.check(equal, "texture matrices equal enumeration oracles");

  const radiomics::ExtractionConfig cfg;
  const std::size_t schema = radiomics::feature_schema(cfg).size();
  volume::ImageGrid image({24, 24, 24}, {1, 1, 1});
  RngStream rng(5);
  for (double& v : image.data) v = rng.normal();
  const volume::MaskGrid mask = [] {
    volume::MaskGrid m({24, 24, 24}, {1, 1, 1}, std::uint8_t{0});
    const volume::MaskGrid ball = ellipsoid_mask(5, 4, 3, 13);
    for (std::size_t z = 0; z < 13; ++z)
      for (std::size_t y = 0; y < 13; ++y)
        for (std::size_t x = 0; x < 13; ++x) m(x + 5, y + 5, z + 5) = ball(x, y, z);
    return m;
  }();
  const radiomics::FeatureVector f = radiomics::extract_all(image, mask, cfg);
  o.check(schema == 851 && f.size() == 851 && f.all_finite(), "851 finite features");
  o.note("sphericity " + fmt(sph) + ", major axis " + fmt(major) + " vs " + fmt(expected) + ", " +
         std::to_string(rois) + " ROIs <= 6^3 matched, " + std::to_string(f.size()) +
         " features");
  return o;
}

// ---------------------------------------------------------------- 8

Outcome wavelet_checks() {
  Outcome o;
  double worst = 0;
  RngStream rng(11);
  for (const radiomics::Dims d : {radiomics::Dims{8, 6, 10}, radiomics::Dims{2, 2, 2},
                                  radiomics::Dims{16, 12, 4}}) {
    volume::ImageGrid g(d, {1, 1, 1});
    for (double& v : g.data) v = rng.normal();
    double in = 0, out = 0;
    for (double v : g.data) in += v * v;
    for (const auto& b : radiomics::wavelet_decompose(g))
      for (double v : b.image.data) out += v * v;
    worst = std::max(worst, std::abs(out - in));
  }
  o.check(worst < 1e-9, "Haar energy conserved within 1e-9");
  const double c = 1.7;
  const auto bands = radiomics::wavelet_decompose(volume::ImageGrid({6, 4, 8}, {1, 1, 1}, c));
  bool pattern = true;
  for (double v : bands[0].image.data) pattern = pattern && std::abs(v - c * std::pow(2.0, 1.5)) < 1e-14;
  for (int b = 1; b < 8; ++b)
    for (double v : bands[static_cast<std::size_t>(b)].image.data) pattern = pattern && v == 0.0;
  o.check(pattern, "constant input: LLL = c 2^1.5, other bands exactly 0");
  o.note("energy gap " + fmt(worst));
  return o;
}

// ---------------------------------------------------------------- 9

double wilcoxon_enumeration(const std::vector<double>& d) {
  Eigen::VectorXd mag(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) mag[static_cast<Eigen::Index>(i)] = std::abs(d[i]);
  const Eigen::VectorXd r = ml::midranks(mag);
  double wp = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) wp += r[static_cast<Eigen::Index>(i)];
  const double w = std::min(wp, r.sum() - wp);
  std::uint64_t count = 0;
  for (std::uint64_t mask = 0; mask < (1ull << d.size()); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (mask >> i & 1) s += r[static_cast<Eigen::Index>(i)];
    if (s <= w + 1e-9) ++count;
  }
  return std::min(1.0, 2.0 * static_cast<double>(count) / std::ldexp(1.0, static_cast<int>(d.size())));
}

double auc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        pairs += 1;
      }
  return wins / pairs;
}

Outcome statistics_checks() {
  Outcome o;
  RngStream rng(4);
  bool exact = true;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    std::vector<double> x(n), y(n, 0.0);
    for (auto& v : x) v = trial % 2 ? std::round(rng.normal() * 2) / 2 + 0.25 : rng.normal();
    const stats::WilcoxonResult r = stats::wilcoxon_signed_rank(x, y);
    exact = exact && r.exact && r.p == wilcoxon_enumeration(x);
  }
  o.check(exact, "Wilcoxon exact p equals 2^n enumeration");

  Eigen::MatrixXd t(3, 3);
  t << 1, 2, 3, 4, 5, 6, 0.1, 0.2, 0.3;
  const stats::FriedmanResult f = stats::friedman_test(t);
  o.check(std::abs(f.statistic - 6.0) < 1e-12 && std::abs(f.p - 0.0498) < 5e-5,
          "Friedman hand case Q = 6, p = 0.0498");

  bool bonf = true;
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform();
    const std::size_t m = 1 + rng.uniform_index(12);
    bonf = bonf && stats::bonferroni_adjust({p}, m)[0] == std::min(1.0, p * static_cast<double>(m));
  }
  o.check(bonf, "Bonferroni min(1, p m) exact");

  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng.uniform_index(2));
      s[i] = trial % 2 ? std::round(4 * rng.uniform()) / 4 : rng.uniform() + 0.3 * y[i];
    }
    worst = std::max(worst, std::abs(ml::roc_auc(s, y).auc - auc_pairs(s, y)));
  }
  o.check(worst <= 1e-12, "AUC equals Mann-Whitney pair count within 1e-12");
  o.note("Friedman Q " + fmt(f.statistic) + " p " + fmt(f.p) + ", AUC gap " + fmt(worst));
  return o;
}

// ---------------------------------------------------------------- 10, 11

struct Protocol {
  app::RunConfig cfg;
  fs::path dir;
  std::map<std::string, nlohmann::json> evaluations;
};

// Phantoms, two degraded copies of the SDCT training set, features, three
// trained models, bootstrap evaluation on the LDCT test split and the
// comparison.
void run_protocol(Protocol& p) {
  const auto& cfg = p.cfg;
  const fs::path& d = p.dir;
  app::cmd_phantom(cfg, d / "phantom");
  for (const char* method : {"simple", "physics"}) {
    app::RunConfig c = cfg;
    c.degrade.method = degrade::parse_method(method);
    app::cmd_degrade(c, d / "phantom/manifest_sdct.csv", d / (std::string("degrade_") + method));
  }
  app::cmd_metrics(cfg, d / "phantom/manifest_sdct.csv", d / "degrade_physics/manifest.csv",
                   d / "metrics");
  const std::vector<std::pair<std::string, fs::path>> sets = {
      {"clean", d / "phantom/manifest_sdct.csv"},
      {"simple", d / "degrade_simple/manifest.csv"},
      {"physics", d / "degrade_physics/manifest.csv"},
      {"validation", d / "phantom/manifest_ldct_val.csv"},
      {"test", d / "phantom/manifest_ldct_test.csv"}};
  for (const auto& [name, manifest] : sets)
    app::cmd_radiomics(cfg, manifest, d / ("radiomics_" + name));
  std::vector<app::NamedPath> evals;
  for (const char* name : {"clean", "simple", "physics"}) {
    const std::string n(name);
    app::cmd_train(cfg, d / ("radiomics_" + n + "/features.csv"),
                   d / "radiomics_validation/features.csv", d / ("train_" + n));
    p.evaluations[n] = app::cmd_evaluate(cfg, d / ("train_" + n + "/model.json"),
                                         d / "radiomics_test/features.csv", d / ("evaluate_" + n));
    evals.emplace_back(n, d / ("evaluate_" + n + "/evaluation.json"));
  }
  app::cmd_compare(cfg, evals, d / "compare");
}

double metric_mean(const nlohmann::json& evaluation, const std::string& metric) {
  const stats::BootstrapResult r = stats::BootstrapResult::from_json(evaluation.at("bootstrap"));
  return r.at(metric).mean;
}

// Phantom slices are 96 x 96, below the 128 default patch.
constexpr std::size_t kPhantomPatch = 64;

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome end_to_end(const fs::path& work, unsigned workers) {
  Outcome o;
  Protocol p;
  p.cfg.seed = 2024;
  p.cfg.workers = workers;
  p.cfg.phantom.subjects = 120;
  p.cfg.metrics.patch_size = kPhantomPatch;
  p.dir = work / "protocol";
  fs::remove_all(p.dir);
  const auto t0 = Clock::now();
  run_protocol(p);
  const double secs = seconds(t0);

  const double sens_clean = metric_mean(p.evaluations["clean"], "sensitivity");
  const double sens_simple = metric_mean(p.evaluations["simple"], "sensitivity");
  const double sens_physics = metric_mean(p.evaluations["physics"], "sensitivity");
  const double auc_simple = metric_mean(p.evaluations["simple"], "auc");
  const double auc_physics = metric_mean(p.evaluations["physics"], "auc");
  const double auc_clean = metric_mean(p.evaluations["clean"], "auc");
  o.check(sens_simple >= sens_clean, "simple-degraded sensitivity >= clean");
  o.check(sens_physics >= sens_clean, "physics-degraded sensitivity >= clean");
  o.check(auc_simple > 0.8 && auc_physics > 0.8, "degraded-trained AUC > 0.8");
  o.check(secs < 1800, "full run < 30 min");

  // Rerun the last stages from the same inputs; the artifacts must not move.
  const fs::path again = work / "protocol_rerun";
  fs::remove_all(again);
  app::cmd_train(p.cfg, p.dir / "radiomics_clean/features.csv",
                 p.dir / "radiomics_validation/features.csv", again / "train");
  app::cmd_evaluate(p.cfg, again / "train/model.json", p.dir / "radiomics_test/features.csv",
                    again / "evaluate");
  o.check(app::read_text(again / "train/model.json") ==
                  app::read_text(p.dir / "train_clean/model.json") &&
              app::read_text(again / "evaluate/evaluation.json") ==
                  app::read_text(p.dir / "evaluate_clean/evaluation.json"),
          "rerun reproduces model and evaluation");

  o.note("sensitivity clean/simple/physics " + fmt(sens_clean, 3) + "/" + fmt(sens_simple, 3) +
         "/" + fmt(sens_physics, 3) + ", AUC " + fmt(auc_clean, 3) + "/" + fmt(auc_simple, 3) +
         "/" + fmt(auc_physics, 3) + ", " + fmt(secs, 4) + " s");
  return o;
}

// Relative path -> bytes for every primary output (run sidecars excluded).
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > 9 && name.ends_with(".run.json")) continue;
    files[fs::relative(e.path(), root).generic_string()] = app::read_text(e.path());
  }
  return files;
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  const fs::path base = work / "determinism";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> snaps;
  for (unsigned w : {1u, 3u}) {
    Protocol p;
    p.cfg.seed = 99;
    p.cfg.workers = w;
    p.cfg.phantom.subjects = 24;
    p.cfg.metrics.patch_size = kPhantomPatch;
    p.cfg.evaluate.iterations = 300;
    p.dir = base / "run";
    fs::remove_all(p.dir);
    run_protocol(p);
    snaps.push_back(snapshot(p.dir));
    if (w == 1) fs::rename(p.dir, base / "run_w1");
  }
  std::size_t differing = 0;
  for (const auto& [path, bytes] : snaps[0]) {
    const auto it = snaps[1].find(path);
    if (it == snaps[1].end() || it->second != bytes) {
      if (differing < 3) o.note("differs: " + path);
      ++differing;
    }
  }
  o.check(snaps[0].size() == snaps[1].size() && differing == 0,
          "byte-identical outputs for workers 1 and 3");

  // Resume: a second degrade pass does no work and leaves the outputs alone.
  app::RunConfig c;
  c.seed = 99;
  c.phantom.subjects = 24;
  c.degrade.method = degrade::Method::kPhysicsSinogram;
  const fs::path run = base / "run";
  const auto before = snapshot(run / "degrade_physics");
  app::cmd_degrade(c, run / "phantom/manifest_sdct.csv", run / "degrade_physics");
  const nlohmann::json side = app::read_json(run / "degrade_physics/degrade.run.json");
  o.check(side.at("processed").empty() && snapshot(run / "degrade_physics") == before,
          "degrade resume skips completed subjects");
  o.note(std::to_string(snaps[0].size()) + " files compared across 7 commands");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "ldsim_acceptance";
  std::set<int> only;
  unsigned workers = default_workers();
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else if (a == "--workers" && i + 1 < argc) {
      workers = static_cast<unsigned>(std::stoul(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--work dir] [--only n,...] [--workers n]\n");
      return 2;
    }
  }
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"FBP round trip on Shepp-Logan 256, 360 angles", fbp_round_trip},
      {"physics noise model identity at a = 1", full_dose_identity},
      {"physics noise model variance bracket", physics_variance},
      {"transmission noise model statistics", simple_noise_statistics},
      {"FID analytic cases and matrix square root", fid_checks},
      {"KID oracle and null distribution", kid_checks},
      {"radiomics shape, texture oracles and feature count", radiomics_checks},
      {"Haar wavelet energy and constant pattern", wavelet_checks},
      {"Wilcoxon, Friedman, Bonferroni and AUC", statistics_checks},
      {"end-to-end protocol on phantoms", [&] { return end_to_end(work, workers); }},
      {"determinism across reruns and worker counts", [&] { return determinism(work); }},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::printf("criterion %2d: %s  %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str(), seconds(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
