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

#ifndef DUSQ_TRAIN_METRICS_HPP_
#define DUSQ_TRAIN_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "dusq/quality_class.hpp"

namespace dusq::train {

/// 5x5 window counts; rows are the actual class, columns the estimated one.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(const Counts& counts) : counts_(counts) {}

  void add(QualityClass actual, QualityClass estimated, std::uint64_t n = 1) {
    counts_[index_of(actual)][index_of(estimated)] += n;
  }
  std::uint64_t at(QualityClass actual, QualityClass estimated) const {
    return counts_[index_of(actual)][index_of(estimated)];
  }
  const Counts& counts() const { return counts_; }

  std::uint64_t row_sum(QualityClass actual) const;
  std::uint64_t column_sum(QualityClass estimated) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_{};
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // actual windows of the class
  // Set when the denominator was zero and the metric was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
  std::string provenance;  // e.g. "fold 2 of 5" or "cumulative"

  const ClassMetrics& operator[](QualityClass c) const { return per_class[index_of(c)]; }
  bool has_undefined() const;
};

/// Harmonic mean; 0 when both inputs are 0.
double f1_score(double precision, double recall);

/// Unweighted mean of per-class F1 values.
double macro_average(std::span<const double> per_class_f1);

MetricsReport compute_metrics(const ConfusionMatrix& cm, std::string provenance = {});

}  // namespace dusq::train

#endif  // DUSQ_TRAIN_METRICS_HPP_
