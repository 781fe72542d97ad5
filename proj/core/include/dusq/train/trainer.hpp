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

#ifndef DUSQ_TRAIN_TRAINER_HPP_
#define DUSQ_TRAIN_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dusq/nn/config.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/train/dataset.hpp"
#include "dusq/train/folds.hpp"
#include "dusq/train/metrics.hpp"

namespace dusq::train {

enum class Precision { kFloat64, kFloat32 };

struct TrainConfig {
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  std::size_t epochs = 30;
  std::size_t patience = 5;  // epochs without validation-loss improvement
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  std::size_t max_steps_per_epoch = 0;  // 0: the whole balanced pool
  std::size_t max_validation_windows = 0;  // 0: all; otherwise an even stride
  double bn_momentum = 0.99;
  Precision precision = Precision::kFloat64;

  /// Throws std::invalid_argument on a zero batch size or a negative rate.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t steps = 0;
  double train_loss = 0.0;  // mean over the epoch's batches
  std::optional<double> val_loss;
  std::optional<double> val_macro_f1;
};

struct TrainResult {
  nn::ModelWeights<double> weights;  // best validation-loss epoch (last when no validation)
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Plain mini-batch SGD on balanced batches. Batch-norm running statistics are
/// zero-initialized EMAs divided by (1 - momentum^steps). Throws NumericError
/// with the epoch and step on a non-finite loss.
TrainResult train_fold(const WindowDataset& data, std::span<const std::size_t> train_rows,
                       std::span<const std::size_t> val_rows, const nn::ModelConfig& model,
                       const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Probabilities for each row, computed in inference mode in batches.
std::vector<std::array<double, kNumClasses>> predict(const WindowDataset& data,
                                                     std::span<const std::size_t> rows,
                                                     const nn::ModelConfig& model,
                                                     const nn::ModelWeights<double>& weights,
                                                     std::size_t batch_size = 64);

/// Throws DataError when `rows` is empty.
MetricsReport evaluate(const WindowDataset& data, std::span<const std::size_t> rows,
                       const nn::ModelConfig& model, const nn::ModelWeights<double>& weights,
                       std::string provenance = {});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
};

struct FoldOutcome {
  std::size_t fold = 0;
  std::vector<std::string> train_recordings;
  std::vector<std::string> validation_recordings;
  std::vector<std::string> test_recordings;
  TrainResult training;
  MetricsReport report;
};

struct CrossValidationResult {
  FoldPlan plan;
  std::vector<FoldOutcome> folds;
  MetricsReport cumulative;  // from the summed confusion matrix
  MeanStd micro_f1;
  MeanStd macro_f1;
  std::array<MeanStd, kNumClasses> precision{};
  std::array<MeanStd, kNumClasses> recall{};
  std::array<MeanStd, kNumClasses> f1{};
};

struct CrossValidationCallbacks {
  std::function<void(std::size_t fold, const EpochRecord&)> on_epoch;
  std::function<void(const FoldOutcome&)> on_fold;
};

/// Recording-stratified k-fold CV. Fold i trains with seed derive_seed(seed, i)
/// on its training recordings minus a validation split, then scores the
/// held-out recordings.
CrossValidationResult cross_validate(const WindowDataset& data, const nn::ModelConfig& model,
                                     const TrainConfig& config, std::size_t k = 5,
                                     const CrossValidationCallbacks& callbacks = {});

std::vector<RecordingSummary> summarize_recordings(const WindowDataset& data);

}  // namespace dusq::train

#endif  // DUSQ_TRAIN_TRAINER_HPP_
