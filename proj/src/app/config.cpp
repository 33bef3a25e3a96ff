#include "ldsim/app/config.hpp"

#include <set>

#include "ldsim/app/io.hpp"
#include "ldsim/core/error.hpp"

namespace ldsim::app {
namespace {

using nlohmann::json;

template <class T>
T read(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> keys = {
      "schema_version", "seed",     "phantom",  "preprocess", "degrade",
      "metrics",        "radiomics", "train",   "evaluate",   "compare"};
  return keys;
}

}  // namespace

PhantomDatasetConfig::PhantomDatasetConfig() {
  // LDCT acquisition at ldct_mA / sdct_mA of the reference flux.
  acquisition.method = degrade::Method::kPhysicsSinogram;
  acquisition.physics.a = 0.25;
}

void PhantomDatasetConfig::validate() const {
  if (subjects < 4) throw ConfigError("phantom: subjects must be >= 4");
  if (!(ldct_fraction > 0.0 && ldct_fraction < 1.0))
    throw ConfigError("phantom: ldct_fraction must lie in (0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("phantom: validation_fraction must lie in (0, 1)");
  if (!(sdct_mA > volume::kLowDoseMaxMilliamp))
    throw ConfigError("phantom: sdct_mA must exceed the low-dose limit");
  if (!(ldct_mA > 0.0 && ldct_mA <= volume::kLowDoseMaxMilliamp))
    throw ConfigError("phantom: ldct_mA must lie in (0, low-dose limit]");
  const auto& t = thorax;
  if (t.dims.nx < 32 || t.dims.ny < 32 || t.dims.nz < 4)
    throw ConfigError("phantom: thorax dims must be at least 32 x 32 x 4");
  if (!(t.spacing.x > 0 && t.spacing.y > 0 && t.spacing.z > 0))
    throw ConfigError("phantom: spacing must be positive");
  if (t.min_nodules < 1 || t.max_nodules < t.min_nodules)
    throw ConfigError("phantom: need 1 <= min_nodules <= max_nodules");
  if (!(t.malignant_fraction >= 0.0 && t.malignant_fraction <= 1.0))
    throw ConfigError("phantom: malignant_fraction must lie in [0, 1]");
  if (!(t.noise_sigma_hu >= 0.0)) throw ConfigError("phantom: noise_sigma_hu must be >= 0");
  acquisition.validate();
  if (acquisition.method == degrade::Method::kRoundTrip)
    throw ConfigError("phantom: acquisition needs a noise model");
}

void MetricsConfig::validate() const {
  if (patch_size < 8) throw ConfigError("metrics: patch_size must be >= 8");
  if (ms_ssim_scales < 1 || ms_ssim_scales > 5)
    throw ConfigError("metrics: ms_ssim_scales must lie in [1, 5]");
  if (kid_subset_size < 2) throw ConfigError("metrics: kid_subset_size must be >= 2");
  if (kid_subsets < 1) throw ConfigError("metrics: kid_subsets must be >= 1");
}

void RadiomicsRunConfig::validate() const {
  extraction.validate();
  radiomics::PerturbationSpec p;
  p.magnitude = perturb_magnitude;
  p.flip_probability = flip_probability;
  p.validate();
}

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  phantom.validate();
  preprocess.validate();
  degrade.validate();
  metrics.validate();
  radiomics.validate();
  train.validate();
  evaluate.validate();
  if (!(compare_alpha > 0.0 && compare_alpha < 1.0))
    throw ConfigError("compare: alpha must lie in (0, 1)");
}

json to_json(const volume::ThoraxConfig& c) {
  return {{"dims", {c.dims.nx, c.dims.ny, c.dims.nz}},
          {"spacing", {c.spacing.x, c.spacing.y, c.spacing.z}},
          {"min_nodules", c.min_nodules},
          {"max_nodules", c.max_nodules},
          {"malignant_fraction", c.malignant_fraction},
          {"noise_sigma_hu", c.noise_sigma_hu}};
}

volume::ThoraxConfig thorax_config_from_json(const json& j) {
  volume::ThoraxConfig c;
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    c.dims = {d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(),
              d.at(2).get<std::size_t>()};
  }
  if (j.contains("spacing")) {
    const auto& s = j.at("spacing");
    c.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
  }
  c.min_nodules = read(j, "min_nodules", c.min_nodules);
  c.max_nodules = read(j, "max_nodules", c.max_nodules);
  c.malignant_fraction = read(j, "malignant_fraction", c.malignant_fraction);
  c.noise_sigma_hu = read(j, "noise_sigma_hu", c.noise_sigma_hu);
  return c;
}

json to_json(const volume::PreprocessConfig& c) {
  return {{"hu_slope", c.hu_slope},
          {"hu_intercept", c.hu_intercept},
          {"window_lo", c.window_lo},
          {"window_hi", c.window_hi},
          {"gaussian_kernel", c.gaussian_kernel},
          {"gaussian_sigma", c.gaussian_sigma},
          {"target_spacing",
           {c.target_spacing.x, c.target_spacing.y, c.target_spacing.z}}};
}

volume::PreprocessConfig preprocess_config_from_json(const json& j) {
  volume::PreprocessConfig c;
  c.hu_slope = read(j, "hu_slope", c.hu_slope);
  c.hu_intercept = read(j, "hu_intercept", c.hu_intercept);
  c.window_lo = read(j, "window_lo", c.window_lo);
  c.window_hi = read(j, "window_hi", c.window_hi);
  c.gaussian_kernel = read(j, "gaussian_kernel", c.gaussian_kernel);
  c.gaussian_sigma = read(j, "gaussian_sigma", c.gaussian_sigma);
  if (j.contains("target_spacing")) {
    const auto& t = j.at("target_spacing");
    c.target_spacing = {t.at(0).get<double>(), t.at(1).get<double>(),
                        t.at(2).get<double>()};
  }
  return c;
}

json to_json(const RunConfig& c) {
  const auto& p = c.phantom;
  const auto& m = c.metrics;
  const auto& r = c.radiomics;
  return {{"schema_version", 1},
          {"seed", c.seed},
          {"phantom",
           {{"subjects", p.subjects},
            {"ldct_fraction", p.ldct_fraction},
            {"validation_fraction", p.validation_fraction},
            {"sdct_mA", p.sdct_mA},
            {"ldct_mA", p.ldct_mA},
            {"thorax", to_json(p.thorax)},
            {"acquisition", degrade::to_json(p.acquisition)}}},
          {"preprocess", to_json(c.preprocess)},
          {"degrade", degrade::to_json(c.degrade)},
          {"metrics",
           {{"patch_size", m.patch_size},
            {"ms_ssim_scales", m.ms_ssim_scales},
            {"kid_subset_size", m.kid_subset_size},
            {"kid_subsets", m.kid_subsets}}},
          {"radiomics",
           {{"extraction", radiomics::to_json(r.extraction)},
            {"perturbations", r.perturbations},
            {"perturb_magnitude", r.perturb_magnitude},
            {"flip_probability", r.flip_probability}}},
          {"train", ml::to_json(c.train)},
          {"evaluate",
           {{"iterations", c.evaluate.iterations},
            {"resample_fraction", c.evaluate.resample_fraction}}},
          {"compare", {{"alpha", c.compare_alpha}}}};
}

RunConfig run_config_from_json(const json& user) {
  if (!user.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : user.items()) {
    if (!known_sections().count(key)) throw ConfigError("config: unknown key '" + key + "'");
    if (key != "seed" && key != "schema_version" && !value.is_object())
      throw ConfigError("config: section '" + key + "' must be an object");
  }
  // Overlay the user document on the defaults so nested sections may be
  // partial.
  json j = to_json(RunConfig{});
  j.merge_patch(user);
  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("phantom");
    c.phantom.subjects = p.at("subjects").get<int>();
    c.phantom.ldct_fraction = p.at("ldct_fraction").get<double>();
    c.phantom.validation_fraction = p.at("validation_fraction").get<double>();
    c.phantom.sdct_mA = p.at("sdct_mA").get<double>();
    c.phantom.ldct_mA = p.at("ldct_mA").get<double>();
    c.phantom.thorax = thorax_config_from_json(p.at("thorax"));
    c.phantom.acquisition = degrade::degrade_config_from_json(p.at("acquisition"));
    c.preprocess = preprocess_config_from_json(j.at("preprocess"));
    c.degrade = degrade::degrade_config_from_json(j.at("degrade"));
    const auto& m = j.at("metrics");
    c.metrics.patch_size = m.at("patch_size").get<std::size_t>();
    c.metrics.ms_ssim_scales = m.at("ms_ssim_scales").get<int>();
    c.metrics.kid_subset_size = m.at("kid_subset_size").get<std::size_t>();
    c.metrics.kid_subsets = m.at("kid_subsets").get<std::size_t>();
    const auto& r = j.at("radiomics");
    c.radiomics.extraction = radiomics::extraction_config_from_json(r.at("extraction"));
    c.radiomics.perturbations = r.at("perturbations").get<bool>();
    c.radiomics.perturb_magnitude = r.at("perturb_magnitude").get<double>();
    c.radiomics.flip_probability = r.at("flip_probability").get<double>();
    c.train = ml::train_config_from_json(j.at("train"));
    c.evaluate.iterations = j.at("evaluate").at("iterations").get<int>();
    c.evaluate.resample_fraction = j.at("evaluate").at("resample_fraction").get<double>();
    c.compare_alpha = j.at("compare").at("alpha").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace ldsim::app
