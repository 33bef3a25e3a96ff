#include "ldsim/ml/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ldsim/core/error.hpp"
#include "ldsim/core/parallel.hpp"
#include "ldsim/ml/filters.hpp"
#include "ldsim/ml/roc.hpp"

namespace ldsim::ml {
namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Standardizer restrict(const Standardizer& s, const std::vector<Eigen::Index>& cols) {
  Standardizer out;
  out.mean.resize(static_cast<Eigen::Index>(cols.size()));
  out.scale.resize(out.mean.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.mean[static_cast<Eigen::Index>(i)] = s.mean[cols[i]];
    out.scale[static_cast<Eigen::Index>(i)] = s.scale[cols[i]];
  }
  return out;
}

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
  return out;
}

// One grid cell before fitting: either a column subset or a PCA projection.
struct Cell {
  SelectorKind selector;
  ClassifierKind classifier;
  int k = 0;
  std::vector<Eigen::Index> cols;
  std::optional<PcaModel> pca;
  std::string skip;
};

RngStream cell_stream(const RngStream& root, SelectorKind s, ClassifierKind c, int k) {
  return root.substream("fit:" + std::string(to_string(s)) + ":" + std::string(to_string(c)),
                        static_cast<std::uint64_t>(k));
}

nlohmann::json combo_json(const ComboResult& r) {
  nlohmann::json j = {{"selector", to_string(r.selector)},
                      {"classifier", to_string(r.classifier)},
                      {"k", r.k},
                      {"skipped", r.skipped}};
  if (r.skipped) {
    j["reason"] = r.skip_reason;
    return j;
  }
  j["features"] = r.features;
  j["auc"] = r.auc;
  j["sensitivity"] = r.sensitivity;
  j["specificity"] = r.specificity;
  j["balanced_accuracy"] = r.balanced_accuracy;
  j["mean"] = r.mean_score();
  j["threshold"] = r.threshold;
  return j;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(icc_threshold >= -1.0 && icc_threshold <= 1.0)) throw ConfigError("train: icc_threshold must be in [-1, 1]");
  if (!(p_threshold > 0.0 && p_threshold <= 1.0)) throw ConfigError("train: p_threshold must be in (0, 1]");
  if (!(rho_threshold > 0.0 && rho_threshold <= 1.0)) throw ConfigError("train: rho_threshold must be in (0, 1]");
  if (selectors.empty() || classifiers.empty()) throw ConfigError("train: empty selector or classifier grid");
  if (subset_sizes.empty()) throw ConfigError("train: empty subset size grid");
  for (int k : subset_sizes)
    if (k < 1) throw ConfigError("train: subset sizes must be >= 1");
  if (selector_forest_trees < 1) throw ConfigError("train: selector_forest_trees must be >= 1");
  if (workers < 1) throw ConfigError("train: workers must be >= 1");
  lasso.validate();
  params.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json sel = nlohmann::json::array(), clf = nlohmann::json::array();
  for (auto s : c.selectors) sel.push_back(to_string(s));
  for (auto k : c.classifiers) clf.push_back(to_string(k));
  return {{"icc_threshold", c.icc_threshold},
          {"p_threshold", c.p_threshold},
          {"rho_threshold", c.rho_threshold},
          {"selectors", sel},
          {"classifiers", clf},
          {"subset_sizes", c.subset_sizes},
          {"lasso", {{"n_lambdas", c.lasso.n_lambdas}, {"min_ratio", c.lasso.min_ratio}, {"folds", c.lasso.folds}}},
          {"classifier_params", to_json(c.params)},
          {"selector_forest_trees", c.selector_forest_trees},
          {"balance", c.balance},
          {"balance_target", c.balance_target}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.icc_threshold = j.value("icc_threshold", c.icc_threshold);
    c.p_threshold = j.value("p_threshold", c.p_threshold);
    c.rho_threshold = j.value("rho_threshold", c.rho_threshold);
    if (j.contains("selectors")) {
      c.selectors.clear();
      for (const auto& s : j.at("selectors")) c.selectors.push_back(parse_selector_kind(s.get<std::string>()));
    }
    if (j.contains("classifiers")) {
      c.classifiers.clear();
      for (const auto& s : j.at("classifiers"))
        c.classifiers.push_back(parse_classifier_kind(s.get<std::string>()));
    }
    c.subset_sizes = j.value("subset_sizes", c.subset_sizes);
    if (j.contains("lasso")) {
      const auto& l = j.at("lasso");
      c.lasso.n_lambdas = l.value("n_lambdas", c.lasso.n_lambdas);
      c.lasso.min_ratio = l.value("min_ratio", c.lasso.min_ratio);
      c.lasso.folds = l.value("folds", c.lasso.folds);
    }
    if (j.contains("classifier_params")) c.params = classifier_params_from_json(j.at("classifier_params"));
    c.selector_forest_trees = j.value("selector_forest_trees", c.selector_forest_trees);
    c.balance = j.value("balance", c.balance);
    c.balance_target = j.value("balance_target", c.balance_target);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t model_selection(const std::vector<ComboResult>& results) {
  std::size_t best = results.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.skipped) continue;
    if (best == results.size()) {
      best = i;
      continue;
    }
    const auto& b = results[best];
    const double dm = r.mean_score() - b.mean_score();
    if (dm > 1e-12) {
      best = i;
    } else if (dm >= -1e-12) {
      const double da = r.auc - b.auc;
      if (da > 1e-12 || (da >= -1e-12 && r.k < b.k)) best = i;
    }
  }
  if (best == results.size()) throw DataError("model selection: no evaluated combination");
  return best;
}

Eigen::VectorXd TrainedModel::predict_matrix(const Eigen::MatrixXd& X) const {
  if (!classifier) throw DataError("model: no classifier");
  if (X.cols() != static_cast<Eigen::Index>(input_features.size()))
    throw DataError("model: feature count mismatch");
  const Eigen::MatrixXd Z = standardizer.apply(X);
  const Eigen::VectorXd p = pca ? classifier->predict_proba(pca->transform(Z)) : classifier->predict_proba(Z);
  if (!p.allFinite()) throw NumericalError("model: non-finite probability");
  return p;
}

Eigen::VectorXd TrainedModel::predict_proba(const FeatureMatrix& fm) const {
  return predict_matrix(take_cols(fm.X, fm.column_indices(input_features)));
}

std::vector<int> TrainedModel::predict(const FeatureMatrix& fm) const {
  const Eigen::VectorXd p = predict_proba(fm);
  std::vector<int> out;
  for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(p[i] >= threshold ? 1 : 0);
  return out;
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json transform = pca ? nlohmann::json{{"type", "pca"}, {"pca", pca->to_json()}}
                                 : nlohmann::json{{"type", "columns"}};
  return {{"schema_version", kSchemaVersion},
          {"selector", to_string(selector)},
          {"classifier_kind", to_string(classifier_kind())},
          {"k", k},
          {"input_features", input_features},
          {"standardizer", standardizer.to_json()},
          {"transform", transform},
          {"threshold", threshold},
          {"classifier", classifier->to_json()}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  TrainedModel m;
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw DataError("model: unsupported schema_version");
    m.selector = parse_selector_kind(j.at("selector").get<std::string>());
    m.k = j.at("k").get<int>();
    m.input_features = j.at("input_features").get<std::vector<std::string>>();
    m.standardizer = Standardizer::from_json(j.at("standardizer"));
    const auto& t = j.at("transform");
    if (t.at("type") == "pca") m.pca = PcaModel::from_json(t.at("pca"));
    m.threshold = j.at("threshold").get<double>();
    m.classifier = classifier_from_json(j.at("classifier"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  if (!(m.threshold > 0.0 && m.threshold < 1.0)) throw DataError("model: threshold outside (0, 1)");
  if (m.standardizer.mean.size() != static_cast<Eigen::Index>(m.input_features.size()))
    throw DataError("model: standardizer does not match the input features");
  return m;
}

nlohmann::json SelectionReport::to_json() const {
  nlohmann::json icc_j = nlohmann::json::object(), p_j = nlohmann::json::object();
  for (std::size_t i = 0; i < input.size() && i < icc.size(); ++i) icc_j[input[i]] = icc[i];
  for (std::size_t i = 0; i < stable.size() && i < p_values.size(); ++i) p_j[stable[i]] = p_values[i];
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& c : combos) grid.push_back(combo_json(c));
  nlohmann::json j = {
      {"schema_version", 1},
      {"stages",
       {{"input_count", input.size()},
        {"stable", stable},
        {"discriminative", discriminative},
        {"non_redundant", non_redundant}}},
      {"icc", icc_j},
      {"mann_whitney_p", p_j},
      {"balance",
       {{"target", balance.target},
        {"minority_label", balance.minority_label},
        {"minority_original", balance.minority_original},
        {"minority_augmented", balance.minority_augmented},
        {"majority_original", balance.majority_original},
        {"majority_kept", balance.majority_kept}}},
      {"lasso", {{"lambda", lasso_lambda}, {"lambdas", lasso_lambdas}, {"cv_auc", lasso_cv_auc}}},
      {"selector_outputs", selector_outputs},
      {"grid", grid}};
  if (winner < combos.size()) {
    nlohmann::json w = combo_json(combos[winner]);
    w["index"] = winner;
    j["winner"] = w;
  }
  return j;
}

TrainResult train_pipeline(const TrainingData& data, const TrainConfig& cfg, const RngStream& rng) {
  cfg.validate();
  data.train.validate();
  data.validation.validate();
  if (data.validation.names != data.train.names)
    throw DataError("train: validation columns differ from training columns");
  if (data.validation.count(0) == 0 || data.validation.count(1) == 0)
    throw DataError("train: validation split needs both classes");
  TrainResult res;
  SelectionReport& rep = res.report;

  // Filters see only the original training ROIs.
  rep.input = data.train.names;
  const StabilityResult stab = stability_filter(data.train, data.train_perturbed, cfg.icc_threshold);
  rep.stable = stab.kept;
  rep.icc = stab.icc;
  if (rep.stable.empty()) throw DataError("train: no feature passed the stability filter");
  const DiscriminativeResult disc = discriminative_filter(data.train.select_columns(rep.stable), cfg.p_threshold);
  rep.discriminative = disc.kept;
  rep.p_values = disc.p;
  if (rep.discriminative.empty()) throw DataError("train: no feature passed the discriminative filter");
  rep.non_redundant =
      redundancy_filter(data.train.select_columns(rep.discriminative), rep.discriminative, cfg.rho_threshold);
  const auto& feats = rep.non_redundant;
  const auto d = static_cast<int>(feats.size());

  FeatureMatrix train = data.train.select_columns(feats);
  if (cfg.balance) {
    std::vector<FeatureMatrix> aug;
    for (const auto& p : data.train_perturbed) aug.push_back(p.select_columns(feats));
    RngStream brng = rng.substream("balance");
    train = balance_dataset(train, aug, cfg.balance_target, brng, &rep.balance);
  }
  const Standardizer stdz = Standardizer::fit(train.X);
  const Eigen::MatrixXd Z = stdz.apply(train.X);
  const Eigen::MatrixXd Zv = stdz.apply(data.validation.select_columns(feats).X);
  const std::vector<int>& y = train.labels;

  // Selector rankings, one task per selector kind.
  const int k_max = *std::max_element(cfg.subset_sizes.begin(), cfg.subset_sizes.end());
  std::vector<int> feasible;
  for (int k : cfg.subset_sizes)
    if (k <= d) feasible.push_back(k);
  std::sort(feasible.begin(), feasible.end());
  feasible.erase(std::unique(feasible.begin(), feasible.end()), feasible.end());
  const auto n_sel = cfg.selectors.size();
  std::vector<std::vector<Eigen::Index>> ranking(n_sel);
  std::vector<LassoSelection> lasso(n_sel);
  parallel_for(n_sel, effective_workers(cfg.workers, n_sel), [&](std::size_t s) {
    RngStream srng = rng.substream("selector:" + std::string(to_string(cfg.selectors[s])));
    switch (cfg.selectors[s]) {
      case SelectorKind::kLasso:
        lasso[s] = lasso_select(Z, y, train.groups, cfg.lasso, srng);
        ranking[s] = lasso[s].selected;
        break;
      case SelectorKind::kMrmr:
        ranking[s] = mrmr_order(Z, y, static_cast<std::size_t>(std::min(k_max, d)));
        break;
      case SelectorKind::kRfe:
        if (!feasible.empty()) ranking[s] = rfe_order(Z, y, static_cast<std::size_t>(feasible.front()), cfg.params.logistic_c);
        break;
      case SelectorKind::kRfImportance:
        ranking[s] = rf_importance_order(Z, y, srng, cfg.selector_forest_trees);
        break;
      case SelectorKind::kPca:
        break;
    }
  });

  // Grid cells in selector, k, classifier order.
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < n_sel; ++s) {
    const SelectorKind sk = cfg.selectors[s];
    std::vector<int> ks = cfg.subset_sizes;
    if (sk == SelectorKind::kLasso) {
      rep.lasso_lambda = lasso[s].lambda;
      rep.lasso_lambdas = lasso[s].lambdas;
      rep.lasso_cv_auc = lasso[s].cv_auc;
      ks = {static_cast<int>(ranking[s].size())};
    }
    for (int k : ks) {
      Cell proto{sk, ClassifierKind::kLogistic, k, {}, std::nullopt, ""};
      nlohmann::json out;
      if (sk == SelectorKind::kLasso && k == 0) {
        proto.skip = "LASSO selected no feature";
      } else if (k > d) {
        proto.skip = "k exceeds the " + std::to_string(d) + " filtered features";
      } else if (sk == SelectorKind::kPca) {
        try {
          proto.pca = pca_fit(Z, k);
          for (int c = 1; c <= k; ++c) out.push_back("PC" + std::to_string(c));
        } catch (const DataError& e) {
          proto.skip = e.what();
        }
      } else {
        proto.cols.assign(ranking[s].begin(), ranking[s].begin() + k);
        for (auto c : proto.cols) out.push_back(feats[static_cast<std::size_t>(c)]);
      }
      rep.selector_outputs[std::string(to_string(sk))][std::to_string(k)] =
          proto.skip.empty() ? out : nlohmann::json(nullptr);
      for (ClassifierKind ck : cfg.classifiers) {
        Cell c = proto;
        c.classifier = ck;
        cells.push_back(std::move(c));
      }
    }
  }

  auto build = [&](const Cell& c) {
    TrainedModel m;
    m.selector = c.selector;
    m.k = c.k;
    Eigen::MatrixXd Xfit;
    if (c.pca) {
      m.input_features = feats;
      m.standardizer = stdz;
      m.pca = c.pca;
      Xfit = c.pca->transform(Z);
    } else {
      for (auto j : c.cols) m.input_features.push_back(feats[static_cast<std::size_t>(j)]);
      m.standardizer = restrict(stdz, c.cols);
      Xfit = take_cols(Z, c.cols);
    }
    auto clf = make_classifier(c.classifier, cfg.params);
    RngStream crng = cell_stream(rng, c.selector, c.classifier, c.k);
    clf->fit(Xfit, y, crng);
    m.classifier = std::move(clf);
    return m;
  };
  auto val_input = [&](const Cell& c) {
    return c.pca ? Eigen::MatrixXd(Zv) : take_cols(Zv, c.cols);
  };

  rep.combos.resize(cells.size());
  parallel_for(cells.size(), effective_workers(cfg.workers, cells.size()), [&](std::size_t i) {
    const Cell& c = cells[i];
    ComboResult& r = rep.combos[i];
    r.selector = c.selector;
    r.classifier = c.classifier;
    r.k = c.k;
    if (!c.skip.empty()) {
      r.skipped = true;
      r.skip_reason = c.skip;
      return;
    }
    const TrainedModel m = build(c);
    r.features = c.pca ? std::vector<std::string>{} : m.input_features;
    // Validation rows are already standardized with the training fit.
    const Eigen::MatrixXd V = val_input(c);
    const Eigen::VectorXd p = c.pca ? m.classifier->predict_proba(c.pca->transform(V))
                                    : m.classifier->predict_proba(V);
    const std::vector<double> scores = to_std(p);
    const RocResult roc = roc_auc(scores, data.validation.labels);
    const ThresholdChoice tc = optimal_threshold(roc.curve);
    const BinaryMetrics bm = metrics_at(scores, data.validation.labels, tc.threshold);
    r.auc = roc.auc;
    r.sensitivity = bm.sensitivity;
    r.specificity = bm.specificity;
    r.balanced_accuracy = bm.balanced_accuracy;
    r.threshold = tc.threshold;
  });

  rep.winner = model_selection(rep.combos);
  res.model = build(cells[rep.winner]);
  res.model.threshold = rep.combos[rep.winner].threshold;
  return res;
}

}  // namespace ldsim::ml
