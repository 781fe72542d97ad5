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

#ifndef DUSQ_SYNTH_HPP_
#define DUSQ_SYNTH_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dusq/annotations.hpp"
#include "dusq/quality_class.hpp"

namespace dusq::synth {

inline constexpr double kSynthRateHz = 4000.0;

struct SpanParams {
  double fhr_bpm = 140.0;   // Good spans (and faint beats under Talking)
  double amplitude = 0.3;   // peak scale of the foreground component
};

/// 4 kHz samples of one homogeneous class span:
///   Good          periodic double clicks (60-200 Hz chirps) at fhr_bpm over a low floor
///   Interference  50 or 60 Hz harmonic stack up to 600 Hz, steady
///   Talking       voiced 100-500 Hz harmonics and noise, 2-6 Hz syllables,
///                 sometimes a faint heartbeat underneath
///   Poor          broadband noise with sporadic low-frequency motion thumps
///   Silent        Gaussian noise (sigma 3e-5) clipped to +-1e-4
std::vector<double> gen_span(QualityClass cls, double duration_s, std::uint64_t seed,
                             const SpanParams& params = {});

struct ScriptSpan {
  QualityClass cls = QualityClass::kGood;
  std::size_t segments = 0;  // 0.75 s each
  friend bool operator==(const ScriptSpan&, const ScriptSpan&) = default;
};

struct ClassScript {
  std::vector<ScriptSpan> spans;
  std::uint64_t seed = 0;
  double fhr_bpm = 140.0;
  double amplitude = 0.3;

  std::size_t total_segments() const;
  double duration_s() const;
  /// Per-segment ground truth.
  std::vector<QualityClass> segment_labels() const;
  /// Windows the annotations pipeline derives: sum of max(0, L - 4) per span.
  ClassCounts window_counts() const;

  friend bool operator==(const ClassScript&, const ClassScript&) = default;
};

struct CorpusOptions {
  double min_duration_s = 60.0;
  double max_duration_s = 180.0;
  // Target share of audio per class, in class order (good, poor, interference,
  // talking, silent); each recording perturbs them by up to +-40%.
  std::array<double, kNumClasses> class_shares = {0.36, 0.18, 0.08, 0.12, 0.26};
  std::size_t min_span_segments = 6;
  std::size_t max_span_segments = 32;
};

/// Spans are drawn one at a time with probability proportional to each
/// class's remaining budget, never repeating the previous class. Every span
/// holds at least min_span_segments; a span runs past max_span_segments only
/// when it absorbs a budget remainder that no other span can take.
ClassScript plan_recording(std::uint64_t seed, const CorpusOptions& options = {});

/// Renders a script at 4 kHz; span i uses seed derive_seed(script.seed, i).
std::vector<double> render_script(const ClassScript& script);

/// Three unanimous virtual annotators.
annotations::AnnotationSet script_annotations(const std::string& recording_id,
                                              const ClassScript& script);

struct SynthRecording {
  std::string id;
  ClassScript script;
  friend bool operator==(const SynthRecording&, const SynthRecording&) = default;
};

struct SynthCorpusManifest {
  std::uint64_t seed = 0;
  std::vector<SynthRecording> recordings;

  ClassCounts window_counts() const;
};

/// Recording i is "rec<iii>" with seed derive_seed(seed, i). Throws
/// std::invalid_argument for fewer than five recordings.
SynthCorpusManifest plan_corpus(std::size_t n_recordings, std::uint64_t seed,
                                const CorpusOptions& options = {});

using GenProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Writes `<dir>/<id>.wav` (44.1 kHz, 16-bit), `<dir>/<id>.annotations.csv`
/// and `<dir>/manifest.csv`.
SynthCorpusManifest gen_corpus(std::size_t n_recordings, std::uint64_t seed,
                               const std::filesystem::path& dir,
                               const CorpusOptions& options = {},
                               const GenProgress& progress = {});

// manifest.csv columns: recording_id, wav, annotations, seed, fhr_bpm,
// amplitude, duration_s, script (";"-separated "<class>:<segments>").
void write_manifest(const std::filesystem::path& dir, const SynthCorpusManifest& manifest);
SynthCorpusManifest read_manifest(const std::filesystem::path& dir);

std::string format_script(const ClassScript& script);
std::vector<ScriptSpan> parse_script(const std::string& text);

}  // namespace dusq::synth

#endif  // DUSQ_SYNTH_HPP_
