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

#include "dusq/train/metrics.hpp"

#include <numeric>
#include <stdexcept>

namespace dusq::train {

std::uint64_t ConfusionMatrix::row_sum(QualityClass actual) const {
  const auto& row = counts_[index_of(actual)];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::column_sum(QualityClass estimated) const {
  std::uint64_t s = 0;
  for (const auto& row : counts_) s += row[index_of(estimated)];
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) s += counts_[i][i];
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (const auto& row : counts_) s += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = 0; j < kNumClasses; ++j) counts_[i][j] += other.counts_[i][j];
  }
  return *this;
}

bool MetricsReport::has_undefined() const {
  for (const auto& m : per_class) {
    if (m.precision_undefined || m.recall_undefined || m.f1_undefined) return true;
  }
  return false;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double macro_average(std::span<const double> per_class_f1) {
  if (per_class_f1.empty()) throw std::invalid_argument("macro_average: no classes");
  double s = 0.0;
  for (double v : per_class_f1) s += v;
  return s / static_cast<double>(per_class_f1.size());
}

MetricsReport compute_metrics(const ConfusionMatrix& cm, std::string provenance) {
  MetricsReport r;
  r.confusion = cm;
  r.provenance = std::move(provenance);
  std::array<double, kNumClasses> f1s{};
  for (QualityClass c : kAllClasses) {
    ClassMetrics& m = r.per_class[index_of(c)];
    const double tp = static_cast<double>(cm.at(c, c));
    const std::uint64_t predicted = cm.column_sum(c);
    const std::uint64_t actual = cm.row_sum(c);
    m.support = actual;
    if (predicted == 0) {
      m.precision_undefined = true;
    } else {
      m.precision = tp / static_cast<double>(predicted);
    }
    if (actual == 0) {
      m.recall_undefined = true;
    } else {
      m.recall = tp / static_cast<double>(actual);
    }
    m.f1_undefined = m.precision + m.recall == 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    f1s[index_of(c)] = m.f1;
  }
  // Single-label data: summed TP+FP and TP+FN both equal the window total.
  const std::uint64_t total = cm.total();
  if (total > 0) {
    r.micro_precision = static_cast<double>(cm.trace()) / static_cast<double>(total);
    r.micro_recall = r.micro_precision;
  }
  r.micro_f1 = f1_score(r.micro_precision, r.micro_recall);
  r.macro_f1 = macro_average(f1s);
  return r;
}

}  // namespace dusq::train
