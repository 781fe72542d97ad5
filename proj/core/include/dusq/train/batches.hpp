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

#ifndef DUSQ_TRAIN_BATCHES_HPP_
#define DUSQ_TRAIN_BATCHES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dusq/quality_class.hpp"
#include "dusq/rng.hpp"

namespace dusq::train {

/// Epoch-wise random oversampling. Every class keeps each of its items once
/// and tops up with draws (with replacement) to the majority count; the pool
/// is shuffled and cut into batches. Items are positions in `labels`.
class BalancedBatcher {
 public:
  /// Throws DataError naming the first class without items.
  BalancedBatcher(std::span<const QualityClass> labels, std::size_t batch_size,
                  std::uint64_t seed, bool drop_last = true);

  std::vector<std::size_t> epoch_pool();
  std::vector<std::vector<std::size_t>> epoch_batches();

  std::size_t pool_size() const { return majority_ * kNumClasses; }
  std::size_t batch_size() const { return batch_size_; }

 private:
  std::array<std::vector<std::size_t>, kNumClasses> by_class_;
  std::size_t majority_ = 0;
  std::size_t batch_size_;
  bool drop_last_;
  Rng rng_;
};

}  // namespace dusq::train

#endif  // DUSQ_TRAIN_BATCHES_HPP_
