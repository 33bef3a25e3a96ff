#include <iomanip>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ldsim/app/commands.hpp"
#include "ldsim/app/io.hpp"
#include "ldsim/core/error.hpp"
#include "ldsim/core/rng.hpp"
#include "ldsim/ml/pipeline.hpp"
#include "ldsim/radiomics/extract.hpp"
#include "ldsim/stats/bootstrap.hpp"
#include "ldsim/stats/compare.hpp"

namespace ldsim::app {
namespace {

using nlohmann::json;

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

json cmd_train(const RunConfig& cfg, const fs::path& train_path, const fs::path& val_path,
               const fs::path& out) {
  cfg.validate();
  const radiomics::FeatureTable train = radiomics::read_feature_csv(train_path);
  const radiomics::FeatureTable val = radiomics::read_feature_csv(val_path);
  if (train.names != val.names)
    throw DataError("train: training and validation feature columns differ");
  RunSidecar side("train", out, cfg.workers);

  ml::TrainingData data;
  data.train = ml::from_table(train, "none");
  for (const char* kind : {"dilate", "erode", "contour_noise"}) {
    ml::FeatureMatrix p = ml::from_table(train, kind);
    if (p.rows() > 0) data.train_perturbed.push_back(std::move(p));
  }
  if (data.train_perturbed.empty())
    throw DataError("train: " + train_path.string() +
                    " has no perturbation rows; the stability stage needs them");
  data.validation = ml::from_table(val, "none");

  ml::TrainConfig tc = cfg.train;
  tc.workers = cfg.workers;
  const ml::TrainResult res = ml::train_pipeline(data, tc, RngStream(cfg.seed).substream("train"));

  const json config = to_json(cfg);
  const std::string run_id =
      make_run_id("train", {{"seed", cfg.seed}, {"train", config.at("train")}},
                  {file_hash(train_path), file_hash(val_path)});
  write_json(out / "model.json", res.model.to_json());
  json report = res.report.to_json();
  report["run_id"] = run_id;
  write_json(out / "selection_report.json", report);

  const auto& w = res.report.combos.at(res.report.winner);
  spdlog::info("train: winner {} + {} (k={}) validation AUC {:.3f}",
               ml::to_string(w.selector), ml::to_string(w.classifier), w.k, w.auc);
  side.info()["run_id"] = run_id;
  side.write();
  return report;
}

json cmd_evaluate(const RunConfig& cfg, const fs::path& model_path, const fs::path& features_path,
                  const fs::path& out) {
  cfg.validate();
  const ml::TrainedModel model = ml::TrainedModel::from_json(read_json(model_path));
  const ml::FeatureMatrix fm = ml::from_table(radiomics::read_feature_csv(features_path), "none");
  if (fm.rows() == 0) throw DataError("evaluate: no unperturbed rows in " + features_path.string());
  RunSidecar side("evaluate", out, cfg.workers);

  const Eigen::VectorXd proba = model.predict_proba(fm);
  const std::vector<double> scores(proba.data(), proba.data() + proba.size());
  stats::BootstrapConfig bc = cfg.evaluate;
  bc.workers = cfg.workers;
  const stats::BootstrapResult br = stats::bootstrap_metrics(
      scores, fm.labels, model.threshold, bc, RngStream(cfg.seed).substream("evaluate"));

  const json config = to_json(cfg);
  json report = {
      {"schema_version", 1},
      {"run_id", make_run_id("evaluate", {{"seed", cfg.seed}, {"evaluate", config.at("evaluate")}},
                             {file_hash(model_path), file_hash(features_path)})},
      {"model",
       {{"selector", std::string(ml::to_string(model.selector))},
        {"classifier", std::string(ml::to_string(model.classifier_kind()))},
        {"k", model.k},
        {"threshold", model.threshold}}},
      {"rows", fm.rows()},
      {"bootstrap", br.to_json()}};
  write_json(out / "evaluation.json", report);

  std::ostringstream csv;
  csv << "subject_id,nodule_id,label,score,predicted\n";
  for (Eigen::Index i = 0; i < fm.rows(); ++i)
    csv << fm.groups[i] << ',' << fm.row_ids[i] << ',' << fm.labels[i] << ','
        << number(scores[i]) << ',' << (scores[i] >= model.threshold ? 1 : 0) << '\n';
  write_text_atomic(out / "predictions.csv", csv.str());

  for (const auto& m : br.metrics)
    spdlog::info("evaluate: {} {:.3f} [{:.3f}, {:.3f}]", m.metric, m.mean, m.ci_lo, m.ci_hi);
  side.info()["run_id"] = report["run_id"];
  side.write();
  return report;
}

json cmd_compare(const RunConfig& cfg, const std::vector<NamedPath>& evaluations,
                 const fs::path& out) {
  cfg.validate();
  if (evaluations.size() < 2) throw ConfigError("compare: need at least two evaluations");
  std::vector<stats::NamedBootstrap> named;
  std::vector<std::string> hashes;
  for (const auto& [name, path] : evaluations) {
    if (name.empty()) throw ConfigError("compare: empty method name for " + path.string());
    const json j = read_json(path);
    if (!j.contains("bootstrap"))
      throw DataError("compare: " + path.string() + " is not an evaluation report");
    named.emplace_back(name, stats::BootstrapResult::from_json(j.at("bootstrap")));
    hashes.push_back(name + "=" + file_hash(path));
  }
  const stats::ComparisonResult cr = stats::compare_methods(named, cfg.compare_alpha);
  RunSidecar side("compare", out, cfg.workers);

  json report = stats::comparison_json(named, cr);
  report["run_id"] =
      make_run_id("compare", {{"alpha", cfg.compare_alpha}}, hashes);
  write_json(out / "comparison.json", report);

  // Violin series: one value per bootstrap iteration and method. AUC is
  // threshold-free; the other metrics use the frozen validation threshold.
  std::vector<std::string> methods;
  for (const auto& [name, r] : named) methods.push_back(name);
  const auto& metric_list = stats::metric_names();
  std::vector<std::vector<std::vector<double>>> values;
  json data = {{"schema_version", 1}, {"methods", methods}, {"metrics", json::object()}};
  for (const auto& metric : metric_list) {
    std::vector<std::vector<double>> per_method;
    std::ostringstream csv;
    csv << "iteration";
    for (const auto& name : methods) csv << ',' << name;
    csv << '\n';
    json series = json::object();
    for (const auto& [name, r] : named) {
      const auto& s = r.at(metric);
      per_method.push_back(s.values);
      series[name] = {{"values", s.values}, {"mean", s.mean}, {"ci_lo", s.ci_lo},
                      {"ci_hi", s.ci_hi}};
    }
    const std::size_t n = per_method.front().size();
    for (std::size_t i = 0; i < n; ++i) {
      csv << i;
      for (const auto& v : per_method) csv << ',' << number(v[i]);
      csv << '\n';
    }
    write_text_atomic(out / ("violin_" + metric + ".csv"), csv.str());
    data["metrics"][metric] = {{"threshold_free", metric == "auc"}, {"series", series}};
    values.push_back(std::move(per_method));
  }
  write_json(out / "violin_data.json", data);
  write_text_atomic(out / "violin.svg", violin_svg(methods, metric_list, values));

  side.info()["run_id"] = report["run_id"];
  side.write();
  return report;
}

}  // namespace ldsim::app
