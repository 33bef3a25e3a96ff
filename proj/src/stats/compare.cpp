#include "ldsim/stats/compare.hpp"

#include <set>

#include "ldsim/core/error.hpp"

namespace ldsim::stats {

ComparisonResult compare_methods(const std::vector<NamedBootstrap>& methods, double alpha) {
  if (methods.size() < 2) throw DataError("compare: need >= 2 methods");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("compare: alpha must be in (0, 1)");
  const BootstrapResult& ref = methods.front().second;
  for (const auto& [name, b] : methods) {
    if (b.iterations != ref.iterations || b.alignment_key != ref.alignment_key)
      throw DataError("compare: '" + name + "' was not resampled with the same plan as '" +
                      methods.front().first + "' (seed, labels or iterations differ)");
  }
  std::set<std::string> names;
  for (const auto& m : methods)
    if (!names.insert(m.first).second) throw DataError("compare: duplicate method name '" + m.first + "'");
  ComparisonResult res;
  res.alpha = alpha;
  for (const auto& m : methods) res.methods.push_back(m.first);
  const std::size_t k = methods.size();
  const std::size_t m_pairs = k * (k - 1) / 2;
  const auto n = static_cast<Eigen::Index>(ref.iterations);
  for (const auto& metric : metric_names()) {
    MetricComparison mc;
    mc.metric = metric;
    Eigen::MatrixXd table(n, static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < k; ++c) {
      const auto& v = methods[c].second.at(metric).values;
      for (Eigen::Index i = 0; i < n; ++i) table(i, static_cast<Eigen::Index>(c)) = v[static_cast<std::size_t>(i)];
    }
    mc.friedman = n >= 2 ? friedman_test(table) : FriedmanResult{};
    if (mc.friedman.p < alpha) {
      mc.pairwise_run = true;
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
          PairwiseResult pr;
          pr.a = methods[a].first;
          pr.b = methods[b].first;
          pr.test = wilcoxon_signed_rank(methods[a].second.at(metric).values,
                                         methods[b].second.at(metric).values);
          pr.p_adjusted = bonferroni_adjust({pr.test.p}, m_pairs)[0];
          mc.pairwise.push_back(pr);
        }
    }
    res.metrics.push_back(std::move(mc));
  }
  return res;
}

nlohmann::json comparison_json(const std::vector<NamedBootstrap>& methods,
                               const ComparisonResult& result) {
  nlohmann::json per_method = nlohmann::json::object();
  for (const auto& [name, b] : methods) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& s : b.metrics) m[s.metric] = {{"mean", s.mean}, {"ci_lo", s.ci_lo}, {"ci_hi", s.ci_hi}};
    per_method[name] = m;
  }
  nlohmann::json tests = nlohmann::json::object();
  for (const auto& mc : result.metrics) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : mc.pairwise)
      pairs.push_back({{"a", p.a},
                       {"b", p.b},
                       {"statistic", p.test.statistic},
                       {"p", p.test.p},
                       {"p_adjusted", p.p_adjusted},
                       {"exact", p.test.exact},
                       {"degenerate", p.test.degenerate}});
    tests[mc.metric] = {{"friedman", {{"stat", mc.friedman.statistic}, {"p", mc.friedman.p}}},
                        {"pairwise_run", mc.pairwise_run},
                        {"pairwise", pairs}};
  }
  return {{"schema_version", 1},
          {"alpha", result.alpha},
          {"methods", result.methods},
          {"summary", per_method},
          {"tests", tests}};
}

}  // namespace ldsim::stats
