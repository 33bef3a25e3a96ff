#include "ldsim/ml/balance.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ldsim/core/error.hpp"

namespace ldsim::ml {
namespace {

// First m entries of a seeded shuffle, returned in ascending order.
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t m, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

FeatureMatrix balance_dataset(const FeatureMatrix& original,
                              const std::vector<FeatureMatrix>& augment, std::size_t target,
                              RngStream& rng, BalanceReport* report) {
  original.validate();
  const std::size_t n1 = original.count(1), n0 = original.count(0);
  if (n0 == 0 || n1 == 0) throw DataError("balance: both classes required");
  const int minority = n1 <= n0 ? 1 : 0;
  const std::size_t n_min = std::min(n0, n1), n_maj = std::max(n0, n1);
  const std::size_t capacity = n_min * (1 + augment.size());
  if (target == 0) target = std::min(n_maj, capacity);
  if (target > n_maj) throw ConfigError("balance: target exceeds the majority count");
  if (target < n_min) throw ConfigError("balance: target below the minority count");

  std::vector<std::pair<std::size_t, Eigen::Index>> pool;  // (augment index, row)
  for (std::size_t a = 0; a < augment.size(); ++a) {
    if (augment[a].names != original.names)
      throw DataError("balance: augmented columns differ from the original");
    for (Eigen::Index r = 0; r < augment[a].rows(); ++r)
      if (augment[a].labels[static_cast<std::size_t>(r)] == minority) pool.emplace_back(a, r);
  }
  const std::size_t extra = target - n_min;
  if (pool.size() < extra)
    throw DataError("balance: " + std::to_string(pool.size()) + " augmentable minority rows, need " +
                    std::to_string(extra));

  std::vector<Eigen::Index> maj_rows, min_rows;
  for (Eigen::Index r = 0; r < original.rows(); ++r)
    (original.labels[static_cast<std::size_t>(r)] == minority ? min_rows : maj_rows).push_back(r);
  RngStream maj_rng = rng.substream("undersample");
  RngStream aug_rng = rng.substream("augment");
  std::vector<Eigen::Index> keep;
  for (std::size_t i : draw_without_replacement(maj_rows.size(), target, maj_rng)) keep.push_back(maj_rows[i]);
  keep.insert(keep.end(), min_rows.begin(), min_rows.end());
  std::sort(keep.begin(), keep.end());

  FeatureMatrix out = original.select_rows(keep);
  const auto picks = draw_without_replacement(pool.size(), extra, aug_rng);
  const Eigen::Index base = out.rows();
  out.X.conservativeResize(base + static_cast<Eigen::Index>(picks.size()), Eigen::NoChange);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto [a, r] = pool[picks[i]];
    out.X.row(base + static_cast<Eigen::Index>(i)) = augment[a].X.row(r);
    out.labels.push_back(minority);
    out.groups.push_back(augment[a].groups[static_cast<std::size_t>(r)]);
    out.row_ids.push_back(augment[a].row_ids[static_cast<std::size_t>(r)] + "@" + std::to_string(a));
  }
  if (report != nullptr) {
    report->target = target;
    report->minority_label = minority;
    report->minority_original = n_min;
    report->minority_augmented = extra;
    report->majority_original = n_maj;
    report->majority_kept = target;
  }
  return out;
}

}  // namespace ldsim::ml
