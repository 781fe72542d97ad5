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

#include <algorithm>
#include "dusq/train/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dusq/error.hpp"
#include "dusq/nn/model.hpp"
#include "dusq/rng.hpp"
#include "dusq/train/batches.hpp"

namespace dusq::train {
namespace {

enum SeedStream : std::uint64_t { kInitStream = 1, kBatchStream = 2, kDropoutStream = 3 };

template <typename T>
std::vector<std::array<double, kNumClasses>> predict_impl(const WindowDataset& data,
                                                          std::span<const std::size_t> rows,
                                                          const nn::ModelConfig& model,
                                                          const nn::ModelWeights<T>& weights,
                                                          std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("predict: batch size must be positive");
  std::vector<std::array<double, kNumClasses>> out;
  out.reserve(rows.size());
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const auto chunk = rows.subspan(start, std::min(batch_size, rows.size() - start));
    const auto probs = nn::model_forward(data.batch<T>(chunk), model, weights, nn::ForwardOptions{});
    for (std::size_t r = 0; r < chunk.size(); ++r) {
      std::array<double, kNumClasses> p{};
      for (std::size_t c = 0; c < kNumClasses; ++c) p[c] = static_cast<double>(probs[r * kNumClasses + c]);
      out.push_back(p);
    }
  }
  return out;
}

QualityClass argmax(const std::array<double, kNumClasses>& p) {
  return nn::predict_class(std::span<const double>(p));
}

std::vector<std::size_t> strided(std::span<const std::size_t> rows, std::size_t limit) {
  if (limit == 0 || rows.size() <= limit) return {rows.begin(), rows.end()};
  std::vector<std::size_t> out;
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) out.push_back(rows[i * rows.size() / limit]);
  return out;
}

void check_disjoint(const WindowDataset& data, std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> val_rows) {
  std::unordered_set<std::size_t> train_recordings;
  for (std::size_t r : train_rows) train_recordings.insert(data.row(r).recording);
  for (std::size_t r : val_rows) {
    if (train_recordings.count(data.row(r).recording)) {
      throw std::invalid_argument("train_fold: recording " + data.recording_of(r) +
                                  " is in both the training and validation sets");
    }
  }
}

template <typename T>
TrainResult train_impl(const WindowDataset& data, std::span<const std::size_t> train_rows,
                       std::span<const std::size_t> val_rows, const nn::ModelConfig& model_in,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  nn::ModelConfig model = model_in;
  model.seed = derive_seed(config.seed, kInitStream);
  model.validate();
  check_disjoint(data, train_rows, val_rows);

  const auto train_labels = data.labels(train_rows);
  BalancedBatcher batcher(train_labels, config.batch_size, derive_seed(config.seed, kBatchStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));
  nn::ModelWeights<T> w = nn::init_weights<T>(model);

  const std::size_t blocks = model.uses_conv() ? model.conv_filters.size() : 0;
  std::vector<std::vector<double>> ema_mean(blocks), ema_var(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    ema_mean[i].assign(model.conv_filters[i], 0.0);
    ema_var[i].assign(model.conv_filters[i], 0.0);
  }
  const double momentum = config.bn_momentum;
  std::size_t bn_updates = 0;

  const auto val_subset = strided(val_rows, config.max_validation_windows);
  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t global_step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto batches = batcher.epoch_batches();
    if (config.max_steps_per_epoch > 0 && batches.size() > config.max_steps_per_epoch) {
      batches.resize(config.max_steps_per_epoch);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (const auto& positions : batches) {
      std::vector<std::size_t> rows;
      rows.reserve(positions.size());
      for (std::size_t p : positions) rows.push_back(train_rows[p]);
      const auto x = data.batch<T>(rows);
      const auto y = data.labels(rows);

      nn::ForwardCache<T> cache;
      nn::ForwardOptions opts;
      opts.mode = nn::ForwardMode::kTrain;
      opts.rng = &dropout_rng;
      nn::model_forward(x, model, w, opts, &cache);
      auto back = nn::model_backward(cache, y, model, w);
      ++global_step;
      if (!std::isfinite(back.loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", step " << global_step
            << " (learning rate " << config.learning_rate << ", previous mean loss "
            << (rec.steps ? loss_sum / static_cast<double>(rec.steps) : 0.0) << ")";
        throw NumericError(msg.str());
      }
      const T lr = static_cast<T>(config.learning_rate);
      for (auto& [name, g] : back.gradients.tensors()) {
        if (!nn::is_trainable(name)) continue;
        auto& param = w.at(name);
        for (std::size_t j = 0; j < param.size(); ++j) param[j] -= lr * g[j];
        if (!std::all_of(param.data(), param.data() + param.size(), [](T v) { return std::isfinite(v); })) {
          std::ostringstream msg;
          msg << "training diverged: non-finite " << name << " after epoch " << epoch << ", step "
              << global_step << " (learning rate " << config.learning_rate << ")";
          throw NumericError(msg.str());
        }
      }

      ++bn_updates;
      const double correction = 1.0 - std::pow(momentum, static_cast<double>(bn_updates));
      for (std::size_t i = 0; i < blocks; ++i) {
        auto& mean = w.at(nn::conv_name(i, "bn_mean"));
        auto& var = w.at(nn::conv_name(i, "bn_var"));
        for (std::size_t c = 0; c < ema_mean[i].size(); ++c) {
          ema_mean[i][c] = momentum * ema_mean[i][c] +
                           (1.0 - momentum) * static_cast<double>(cache.conv[i].mean[c]);
          ema_var[i][c] = momentum * ema_var[i][c] +
                          (1.0 - momentum) * static_cast<double>(cache.conv[i].batch_var[c]);
          mean[c] = static_cast<T>(ema_mean[i][c] / correction);
          var[c] = static_cast<T>(ema_var[i][c] / correction);
        }
      }
      loss_sum += back.loss;
      ++rec.steps;
    }
    rec.train_loss = rec.steps ? loss_sum / static_cast<double>(rec.steps) : 0.0;

    bool improved = true;
    if (!val_subset.empty()) {
      const auto probs = predict_impl(data, val_subset, model, w, 64);
      ConfusionMatrix cm;
      double vloss = 0.0;
      for (std::size_t r = 0; r < val_subset.size(); ++r) {
        const QualityClass truth = data.row(val_subset[r]).label;
        vloss -= std::log(std::max(probs[r][index_of(truth)], 1e-300));
        cm.add(truth, argmax(probs[r]));
      }
      rec.val_loss = vloss / static_cast<double>(val_subset.size());
      rec.val_macro_f1 = compute_metrics(cm).macro_f1;
      improved = *rec.val_loss < best_val;
    }
    result.history.push_back(rec);
    if (improved) {
      if (rec.val_loss) best_val = *rec.val_loss;
      result.weights = w.template cast<double>();
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch) on_epoch(rec);
    if (!val_subset.empty() && config.patience > 0 && since_best >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  if (result.history.empty()) result.weights = w.template cast<double>();
  return result;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.mean = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m.mean) * (x - m.mean);
  m.std = v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
  return m;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning rate must be finite and non-negative");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("TrainConfig: validation_fraction must be in [0, 1)");
  }
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) {
    throw std::invalid_argument("TrainConfig: bn_momentum must be in [0, 1)");
  }
}

TrainResult train_fold(const WindowDataset& data, std::span<const std::size_t> train_rows,
                       std::span<const std::size_t> val_rows, const nn::ModelConfig& model,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.precision == Precision::kFloat32) {
    return train_impl<float>(data, train_rows, val_rows, model, config, on_epoch);
  }
  return train_impl<double>(data, train_rows, val_rows, model, config, on_epoch);
}

std::vector<std::array<double, kNumClasses>> predict(const WindowDataset& data,
                                                     std::span<const std::size_t> rows,
                                                     const nn::ModelConfig& model,
                                                     const nn::ModelWeights<double>& weights,
                                                     std::size_t batch_size) {
  nn::check_weights(model, weights);
  return predict_impl(data, rows, model, weights, batch_size);
}

MetricsReport evaluate(const WindowDataset& data, std::span<const std::size_t> rows,
                       const nn::ModelConfig& model, const nn::ModelWeights<double>& weights,
                       std::string provenance) {
  if (rows.empty()) throw DataError("evaluate: no labeled windows to score");
  const auto probs = predict(data, rows, model, weights);
  ConfusionMatrix cm;
  for (std::size_t r = 0; r < rows.size(); ++r) cm.add(data.row(rows[r]).label, argmax(probs[r]));
  return compute_metrics(cm, std::move(provenance));
}

std::vector<RecordingSummary> summarize_recordings(const WindowDataset& data) {
  std::vector<RecordingSummary> out(data.recording_ids().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = data.recording_ids()[i];
  for (std::size_t r = 0; r < data.size(); ++r) {
    ++out[data.row(r).recording].window_counts[index_of(data.row(r).label)];
  }
  return out;
}

CrossValidationResult cross_validate(const WindowDataset& data, const nn::ModelConfig& model,
                                     const TrainConfig& config, std::size_t k,
                                     const CrossValidationCallbacks& callbacks) {
  config.validate();
  const auto summaries = summarize_recordings(data);
  CrossValidationResult cv;
  cv.plan = stratified_folds(summaries, k, config.seed);

  ConfusionMatrix total;
  std::vector<double> micro, macro;
  std::array<std::vector<double>, kNumClasses> prec, rec, f1;
  for (std::size_t i = 0; i < k; ++i) {
    FoldOutcome fold;
    fold.fold = i;
    fold.test_recordings = cv.plan.folds[i];
    const auto train_ids = cv.plan.training_ids(i);
    std::unordered_set<std::string> train_set(train_ids.begin(), train_ids.end());
    std::vector<RecordingSummary> train_summaries;
    for (const auto& s : summaries) {
      if (train_set.count(s.id)) train_summaries.push_back(s);
    }
    auto [fit_ids, val_ids] =
        split_validation(train_summaries, config.validation_fraction, derive_seed(config.seed, 100 + i));
    fold.train_recordings = std::move(fit_ids);
    fold.validation_recordings = std::move(val_ids);

    TrainConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, i);
    const auto train_rows = data.rows_of(fold.train_recordings);
    const auto val_rows = data.rows_of(fold.validation_recordings);
    const auto test_rows = data.rows_of(fold.test_recordings);
    EpochCallback epoch_cb;
    if (callbacks.on_epoch) epoch_cb = [&](const EpochRecord& r) { callbacks.on_epoch(i, r); };
    fold.training = train_fold(data, train_rows, val_rows, model, fold_config, epoch_cb);
    fold.report = evaluate(data, test_rows, model, fold.training.weights,
                           "fold " + std::to_string(i + 1) + " of " + std::to_string(k));

    total += fold.report.confusion;
    micro.push_back(fold.report.micro_f1);
    macro.push_back(fold.report.macro_f1);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      prec[c].push_back(fold.report.per_class[c].precision);
      rec[c].push_back(fold.report.per_class[c].recall);
      f1[c].push_back(fold.report.per_class[c].f1);
    }
    if (callbacks.on_fold) callbacks.on_fold(fold);
    cv.folds.push_back(std::move(fold));
  }
  cv.cumulative = compute_metrics(total, "cumulative over " + std::to_string(k) + " folds");
  cv.micro_f1 = mean_std(micro);
  cv.macro_f1 = mean_std(macro);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    cv.precision[c] = mean_std(prec[c]);
    cv.recall[c] = mean_std(rec[c]);
    cv.f1[c] = mean_std(f1[c]);
  }
  return cv;
}

}  // namespace dusq::train
