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

#ifndef DUSQ_TRAIN_DATASET_HPP_
#define DUSQ_TRAIN_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dusq/annotations.hpp"
#include "dusq/audio_io.hpp"
#include "dusq/dsp.hpp"
#include "dusq/nn/tensor.hpp"
#include "dusq/quality_class.hpp"

namespace dusq::train {

inline constexpr std::size_t kFeatureSize = dsp::kScalogramFrames * dsp::kScalogramBins;

/// One row of `manifest.csv`. Paths are relative to the corpus directory.
struct CorpusEntry {
  std::string recording_id;
  std::filesystem::path wav;
  std::filesystem::path annotations;
};

/// Reads the `recording_id`, `wav` and `annotations` columns (by header name;
/// other columns are ignored). Paths stay relative to `corpus_dir`. Throws
/// DataError on missing columns or ids.
std::vector<CorpusEntry> read_corpus_manifest(const std::filesystem::path& corpus_dir);

/// Normalized scalograms rounded to f32, for every window of a recording in
/// start-segment order.
std::vector<std::vector<float>> recording_features(const audio::Recording& recording_44k);

/// As above, reusing `<corpus>/cache/<id>.scal` when it matches the WAV bytes.
std::vector<std::vector<float>> cached_recording_features(const std::filesystem::path& corpus_dir,
                                                          const CorpusEntry& entry);

/// Labeled windows with their features held in one contiguous f32 store.
class WindowDataset {
 public:
  struct Row {
    std::size_t recording = 0;  // index into recording_ids()
    std::size_t start_segment = 0;
    QualityClass label = QualityClass::kGood;
  };

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const Row& row(std::size_t i) const { return rows_.at(i); }
  std::span<const float> features(std::size_t i) const {
    return {features_.data() + i * kFeatureSize, kFeatureSize};
  }

  const std::vector<std::string>& recording_ids() const { return recording_ids_; }
  const std::string& recording_of(std::size_t i) const { return recording_ids_[rows_.at(i).recording]; }

  /// Registers a recording and returns its index (existing ids are reused).
  std::size_t add_recording(const std::string& id);
  void add(std::size_t recording, std::size_t start_segment, QualityClass label,
           std::span<const float> features);

  /// Row indices of the given recordings, in dataset order.
  std::vector<std::size_t> rows_of(std::span<const std::string> recording_ids) const;
  std::vector<std::size_t> all_rows() const;

  ClassCounts histogram(std::span<const std::size_t> rows) const;
  ClassCounts recording_histogram(std::size_t recording) const;

  /// Gathers rows into a [n, 250, 40] tensor.
  template <typename T>
  nn::Tensor<T> batch(std::span<const std::size_t> rows) const;
  std::vector<QualityClass> labels(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> recording_ids_;
  std::vector<Row> rows_;
  std::vector<float> features_;
};

using LoadProgress = std::function<void(std::size_t done, std::size_t total, const std::string& id)>;

/// Loads every manifest recording: WAV -> 4 kHz -> windows, annotations ->
/// consensus -> labeled windows, features from the cache when valid.
WindowDataset load_corpus(const std::filesystem::path& corpus_dir,
                          const LoadProgress& progress = {});

/// Restricts loading to the windows listed in a window manifest.
WindowDataset load_windows(const std::filesystem::path& corpus_dir,
                           std::span<const annotations::LabeledWindow> windows,
                           const LoadProgress& progress = {});

}  // namespace dusq::train

#endif  // DUSQ_TRAIN_DATASET_HPP_
