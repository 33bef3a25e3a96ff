// ldsim command-line front end. Exit codes: 0 success, 2 configuration
// error, 3 data error, 4 numerical failure, 1 anything unexpected.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ldsim/app/commands.hpp"
#include "ldsim/app/config.hpp"
#include "ldsim/core/error.hpp"

namespace {

namespace fs = std::filesystem;
using ldsim::app::NamedPath;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> workers;
  std::string log = "info";
};

ldsim::app::RunConfig resolve_config(const Globals& g) {
  ldsim::app::RunConfig cfg =
      g.config.empty() ? ldsim::app::RunConfig{} : ldsim::app::load_run_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  cfg.log_level = g.log;
  cfg.validate();
  return cfg;
}

std::vector<NamedPath> parse_evals(const std::vector<std::string>& items) {
  std::vector<NamedPath> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw ldsim::ConfigError("compare: --eval expects name=path, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), fs::path(item.substr(eq + 1)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-dose CT simulation and radiomics pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--out", g.out, "Output directory")->required();
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log", g.log, "Log level")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic thorax cohort");

  auto* degrade = app.add_subcommand("degrade", "Simulate low-dose acquisitions");
  std::string degrade_manifest, method;
  degrade->add_option("--manifest", degrade_manifest, "Input manifest")->required()
      ->check(CLI::ExistingFile);
  degrade->add_option("--method", method, "simple, physics or roundtrip (overrides config)")
      ->check(CLI::IsMember({"simple", "physics", "roundtrip"}));

  auto* metrics = app.add_subcommand("metrics", "Image-quality and distribution metrics");
  std::string real_manifest, gen_manifest;
  metrics->add_option("--real", real_manifest, "Reference manifest")->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("--generated", gen_manifest, "Generated manifest")->required()
      ->check(CLI::ExistingFile);

  auto* radiomics = app.add_subcommand("radiomics", "Extract nodule features");
  std::string radiomics_manifest;
  radiomics->add_option("--manifest", radiomics_manifest, "Input manifest")->required()
      ->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Select features and train classifiers");
  std::string train_csv, val_csv;
  train->add_option("--features", train_csv, "Training features CSV")->required()
      ->check(CLI::ExistingFile);
  train->add_option("--validation", val_csv, "Validation features CSV")->required()
      ->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "Bootstrap evaluation of a trained model");
  std::string model_json, test_csv;
  evaluate->add_option("--model", model_json, "Model artifact")->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--features", test_csv, "Test features CSV")->required()
      ->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare", "Compare bootstrap evaluations");
  std::vector<std::string> evals;
  compare->add_option("--eval", evals, "name=evaluation.json, repeated")->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ldsim::exit_code(ldsim::ErrorKind::kConfig);
  }

  try {
    spdlog::set_level(spdlog::level::from_str(g.log));
    ldsim::app::RunConfig cfg = resolve_config(g);
    const fs::path out = g.out;
    fs::create_directories(out);
    if (*phantom) {
      ldsim::app::cmd_phantom(cfg, out);
    } else if (*degrade) {
      if (!method.empty()) cfg.degrade.method = ldsim::degrade::parse_method(method);
      ldsim::app::cmd_degrade(cfg, degrade_manifest, out);
    } else if (*metrics) {
      ldsim::app::cmd_metrics(cfg, real_manifest, gen_manifest, out);
    } else if (*radiomics) {
      ldsim::app::cmd_radiomics(cfg, radiomics_manifest, out);
    } else if (*train) {
      ldsim::app::cmd_train(cfg, train_csv, val_csv, out);
    } else if (*evaluate) {
      ldsim::app::cmd_evaluate(cfg, model_json, test_csv, out);
    } else if (*compare) {
      ldsim::app::cmd_compare(cfg, parse_evals(evals), out);
    }
  } catch (const ldsim::Error& e) {
    spdlog::error("{}", e.what());
    return ldsim::exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return ldsim::exit_code(ldsim::ErrorKind::kData);
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 0;
}
