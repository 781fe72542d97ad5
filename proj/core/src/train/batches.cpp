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

#include "dusq/train/batches.hpp"

#include <stdexcept>
#include <string>

#include "dusq/error.hpp"

namespace dusq::train {

BalancedBatcher::BalancedBatcher(std::span<const QualityClass> labels, std::size_t batch_size,
                                 std::uint64_t seed, bool drop_last)
    : batch_size_(batch_size), drop_last_(drop_last), rng_(seed) {
  if (batch_size == 0) throw std::invalid_argument("BalancedBatcher: batch size must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) by_class_[index_of(labels[i])].push_back(i);
  for (QualityClass c : kAllClasses) {
    const auto& items = by_class_[index_of(c)];
    if (items.empty()) {
      throw DataError(std::string("balanced batches: no training windows of class ") +
                      std::string(to_token(c)));
    }
    majority_ = std::max(majority_, items.size());
  }
}

std::vector<std::size_t> BalancedBatcher::epoch_pool() {
  std::vector<std::size_t> pool;
  pool.reserve(pool_size());
  for (const auto& items : by_class_) {
    pool.insert(pool.end(), items.begin(), items.end());
    for (std::size_t extra = items.size(); extra < majority_; ++extra) {
      pool.push_back(items[rng_.below(items.size())]);
    }
  }
  rng_.shuffle(pool.begin(), pool.end());
  return pool;
}

std::vector<std::vector<std::size_t>> BalancedBatcher::epoch_batches() {
  const auto pool = epoch_pool();
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < pool.size(); start += batch_size_) {
    const std::size_t end = std::min(pool.size(), start + batch_size_);
    if (end - start < batch_size_ && drop_last_ && !batches.empty()) break;
    batches.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(start),
                         pool.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace dusq::train
