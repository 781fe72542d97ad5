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

#ifndef DUSQ_ANNOTATIONS_HPP_
#define DUSQ_ANNOTATIONS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dusq/quality_class.hpp"

namespace dusq::annotations {

/// Annotator vocabulary: the five model classes plus Unsure.
enum class Label : std::uint8_t {
  kGood = 0,
  kPoor = 1,
  kInterference = 2,
  kTalking = 3,
  kSilent = 4,
  kUnsure = 5,
};

inline constexpr std::size_t kNumLabels = 6;
inline constexpr std::size_t kNumAnnotators = 3;

std::string_view to_token(Label l);
std::optional<Label> parse_label(std::string_view token);
Label to_label(QualityClass c);

using Triple = std::array<Label, kNumAnnotators>;

struct AnnotationSet {
  std::string recording_id;
  std::vector<Triple> segments;  // indexed by segment ordinal
};

struct LabeledSegment {
  std::string recording_id;
  std::size_t index = 0;
  std::optional<QualityClass> consensus;
};

/// Window reference into a recording: segments start..start+4, all of `label`.
struct LabeledWindow {
  std::string recording_id;
  std::size_t start_segment = 0;
  QualityClass label = QualityClass::kGood;

  friend bool operator==(const LabeledWindow&, const LabeledWindow&) = default;
};

/// Good/Poor/Silent need all three annotators; Interference/Talking need two.
/// Anything else (including Unsure majorities) yields no label.
std::optional<QualityClass> consensus_label(Label a, Label b, Label c);

std::vector<LabeledSegment> apply_consensus(const AnnotationSet& set);

/// Every run of n >= 5 consecutive segments sharing one consensus class yields
/// n - 4 windows; gaps and class changes break runs.
std::vector<LabeledWindow> build_labeled_windows(std::span<const LabeledSegment> segments);

ClassCounts class_histogram(std::span<const LabeledWindow> windows);

// `segment_index,annotA,annotB,annotC` with lowercase label tokens.
AnnotationSet read_annotations_csv(const std::filesystem::path& path, std::string recording_id);
void write_annotations_csv(const std::filesystem::path& path, const AnnotationSet& set);

// `recording_id,start_segment,class`.
std::vector<LabeledWindow> read_window_manifest(const std::filesystem::path& path);
void write_window_manifest(const std::filesystem::path& path,
                           std::span<const LabeledWindow> windows);

}  // namespace dusq::annotations

#endif  // DUSQ_ANNOTATIONS_HPP_
