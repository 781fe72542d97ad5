/* Copyright 2026 The dusq Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DUSQ_TRAIN_FOLDS_HPP_
#define DUSQ_TRAIN_FOLDS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dusq/quality_class.hpp"

namespace dusq::train {

struct RecordingSummary {
  std::string id;
  ClassCounts window_counts{};
};

/// Most frequent window class; ties go to the lowest class index.
QualityClass modal_class(const ClassCounts& counts);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::vector<std::string>> folds;  // recording ids per fold

  /// Fold holding `id`; throws std::out_of_range when absent.
  std::size_t fold_of(const std::string& id) const;
  /// Every recording outside fold `i`.
  std::vector<std::string> training_ids(std::size_t i) const;
};

/// Groups recordings by modal class, shuffles each group with `seed` and deals
/// them round-robin, the fold cursor carrying over between groups. Throws
/// std::invalid_argument when there are fewer recordings than folds.
FoldPlan stratified_folds(std::span<const RecordingSummary> recordings, std::size_t k,
                          std::uint64_t seed);

/// Carves max(1, round(fraction * n)) recordings (none when n < 2) from
/// `recordings` for validation, interleaving modal-class groups so the split
/// covers as many modes as possible. Returns {train ids, validation ids}.
std::pair<std::vector<std::string>, std::vector<std::string>> split_validation(
    std::span<const RecordingSummary> recordings, double fraction, std::uint64_t seed);

}  // namespace dusq::train

#endif  // DUSQ_TRAIN_FOLDS_HPP_
