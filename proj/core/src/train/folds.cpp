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

#include "dusq/train/folds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "dusq/rng.hpp"

namespace dusq::train {
namespace {

// Recordings grouped by modal class, each group shuffled.
std::array<std::vector<std::string>, kNumClasses> shuffled_groups(
    std::span<const RecordingSummary> recordings, Rng& rng) {
  std::array<std::vector<std::string>, kNumClasses> groups;
  std::unordered_set<std::string> seen;
  for (const auto& r : recordings) {
    if (!seen.insert(r.id).second) {
      throw std::invalid_argument("folds: duplicate recording id " + r.id);
    }
    groups[index_of(modal_class(r.window_counts))].push_back(r.id);
  }
  for (auto& g : groups) rng.shuffle(g.begin(), g.end());
  return groups;
}

}  // namespace

QualityClass modal_class(const ClassCounts& counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return class_from_index(best);
}

std::size_t FoldPlan::fold_of(const std::string& id) const {
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (std::find(folds[i].begin(), folds[i].end(), id) != folds[i].end()) return i;
  }
  throw std::out_of_range("fold plan: unknown recording " + id);
}

std::vector<std::string> FoldPlan::training_ids(std::size_t i) const {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != i) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  return out;
}

FoldPlan stratified_folds(std::span<const RecordingSummary> recordings, std::size_t k,
                          std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("stratified_folds: k must be positive");
  if (recordings.size() < k) {
    throw std::invalid_argument("stratified_folds: " + std::to_string(recordings.size()) +
                                " recordings cannot fill " + std::to_string(k) + " folds");
  }
  Rng rng(seed);
  const auto groups = shuffled_groups(recordings, rng);
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(k);
  std::size_t cursor = 0;
  for (const auto& g : groups) {
    for (const auto& id : g) {
      plan.folds[cursor].push_back(id);
      cursor = (cursor + 1) % k;
    }
  }
  return plan;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_validation(
    std::span<const RecordingSummary> recordings, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_validation: fraction must be in [0, 1)");
  }
  Rng rng(seed);
  const auto groups = shuffled_groups(recordings, rng);
  const std::size_t n = recordings.size();
  std::size_t n_val = 0;
  if (n >= 2 && fraction > 0.0) {
    n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);
  }
  // Interleave the groups: one recording per mode in turn.
  std::vector<std::string> order;
  order.reserve(n);
  for (std::size_t depth = 0; order.size() < n; ++depth) {
    for (const auto& g : groups) {
      if (depth < g.size()) order.push_back(g[depth]);
    }
  }
  std::vector<std::string> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::unordered_set<std::string> val_set(val.begin(), val.end());
  std::vector<std::string> train;
  for (const auto& r : recordings) {
    if (!val_set.count(r.id)) train.push_back(r.id);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace dusq::train
