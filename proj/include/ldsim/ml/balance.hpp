#pragma once

#include <cstddef>
#include <vector>

#include "ldsim/core/rng.hpp"
#include "ldsim/ml/dataset.hpp"

namespace ldsim::ml {

struct BalanceReport {
  std::size_t target = 0;
  int minority_label = 1;
  std::size_t minority_original = 0;
  std::size_t minority_augmented = 0;
  std::size_t majority_original = 0;
  std::size_t majority_kept = 0;
};

// Equalizes the classes at `target` rows each. The minority keeps every
// original row and is topped up with rows drawn without replacement from its
// perturbed re-extractions (`augment`, one matrix per perturbation, same
// columns); the majority is undersampled without replacement. target = 0
// means min(majority, minority * (1 + augment.size())). Augmented row ids get
// the suffix "@<k>" with k the index into `augment`.
FeatureMatrix balance_dataset(const FeatureMatrix& original,
                              const std::vector<FeatureMatrix>& augment, std::size_t target,
                              RngStream& rng, BalanceReport* report = nullptr);

}  // namespace ldsim::ml
