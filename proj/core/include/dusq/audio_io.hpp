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

#ifndef DUSQ_AUDIO_IO_HPP_
#define DUSQ_AUDIO_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dusq/quality_class.hpp"

namespace dusq::audio {

inline constexpr int kAcquisitionRateHz = 44100;
inline constexpr int kAnalysisRateHz = 4000;
inline constexpr std::size_t kSegmentSamples = 3000;  // 0.75 s at 4 kHz
inline constexpr std::size_t kSegmentsPerWindow = 5;
inline constexpr std::size_t kWindowSamples = kSegmentSamples * kSegmentsPerWindow;
inline constexpr double kSegmentSeconds = 0.75;

struct Recording {
  std::string id;
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate_hz = 0;
};

struct Segment {
  std::string recording_id;
  std::size_t index = 0;
  std::vector<double> samples;  // exactly kSegmentSamples
};

struct Window {
  std::string recording_id;
  std::size_t start_segment_index = 0;
  std::vector<double> samples;  // exactly kWindowSamples
  std::optional<QualityClass> label;

  double start_seconds() const {
    return static_cast<double>(start_segment_index) * kSegmentSeconds;
  }
};

// --- WAV ---------------------------------------------------------------------

/// Decodes a RIFF/WAVE PCM 16-bit mono file. Samples are int16 / 32768.
/// Throws DataError naming the offending header field.
Recording decode_wav(std::span<const std::byte> bytes, std::string id = {});
Recording read_wav(const std::filesystem::path& path);

/// Encodes samples as PCM 16-bit mono. Values are scaled by 32768, rounded to
/// nearest and clamped to the int16 range.
std::vector<std::byte> encode_wav(std::span<const double> samples, int sample_rate_hz);
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz);

std::int16_t quantize_sample(double x);

// --- Resampling --------------------------------------------------------------

/// Streaming rational resampler (output rate = input rate * up / down) built on
/// a Kaiser-windowed sinc polyphase table. The kernel is zero-phase: output
/// sample m sits at input position m * down / up. Samples outside the stream
/// are treated as zeros, so chunked processing followed by flush() is
/// bit-identical to a single call on the whole signal.
class RationalResampler {
 public:
  struct Design {
    double input_rate_hz = kAcquisitionRateHz;
    double passband_edge_hz = 1800.0;
    double stopband_edge_hz = 2000.0;
    double stopband_attenuation_db = 75.0;
  };

  RationalResampler(int up, int down, const Design& design);

  /// Consumes input and returns every output sample that no longer depends on
  /// unseen input.
  std::vector<double> process(std::span<const double> input);

  /// Ends the stream; the total output count is floor(n_in * up / down).
  std::vector<double> flush();

  int up() const { return up_; }
  int down() const { return down_; }
  std::size_t half_width() const { return half_width_; }
  std::size_t taps_per_phase() const { return 2 * half_width_; }

  /// Kernel tap for output phase p, tap j (input index q - half_width + 1 + j).
  double tap(std::size_t phase, std::size_t j) const {
    return table_[phase * taps_per_phase() + j];
  }

 private:
  double output_sample(std::uint64_t m) const;
  void emit_ready(std::vector<double>& out, std::uint64_t input_available);
  void trim();

  int up_;
  int down_;
  std::size_t half_width_ = 0;
  std::vector<double> table_;  // up_ phases x (2 * half_width_) taps
  std::vector<double> buffer_;
  std::uint64_t buffer_start_ = 0;  // absolute input index of buffer_[0]
  std::uint64_t consumed_ = 0;      // absolute input samples received
  std::uint64_t next_output_ = 0;
  bool flushed_ = false;
};

/// 44100 -> 4000 Hz (40/441) anti-aliased resampling; 4000 Hz passes through.
/// Throws DataError for any other rate.
Recording resample_to_4khz(const Recording& r);

/// Factory for the acquisition -> analysis rate converter used everywhere.
RationalResampler make_acquisition_resampler();

/// 4000 -> 44100 Hz interpolation (used to emit synthetic recordings).
std::vector<double> upsample_4khz_to_44k(std::span<const double> samples);

// --- Segments and windows ----------------------------------------------------

/// floor(n / 3000) consecutive segments; the tail remainder is dropped.
std::vector<Segment> segment_stream(const Recording& r);

/// max(0, N - 4) windows; window k = segments k..k+4, unlabeled.
std::vector<Window> window_assembler(std::span<const Segment> segments);

/// Live counterpart of segment_stream + window_assembler: buffers 4 kHz samples
/// until each segment completes and emits every window that becomes whole.
class StreamingWindowAssembler {
 public:
  explicit StreamingWindowAssembler(std::string recording_id = {});

  std::vector<Window> push(std::span<const double> samples_4khz);

  std::size_t segments_completed() const { return segments_completed_; }

 private:
  std::string recording_id_;
  std::vector<double> pending_;             // partial segment
  std::deque<std::vector<double>> recent_;  // last <= 5 segments
  std::size_t segments_completed_ = 0;
};

/// Offline whole-recording helper: resample (if needed), segment, window.
std::vector<Window> windows_from_recording(const Recording& r);

// --- Live frame transport ----------------------------------------------------
// Frame = u32 little-endian sample count N, then N int16 little-endian samples.
// A zero-length frame marks end of stream.

/// Reads one frame. Returns std::nullopt on clean EOF or a zero-length frame;
/// throws DataError on a truncated frame.
std::optional<std::vector<std::int16_t>> read_frame(std::istream& in);
void write_frame(std::ostream& out, std::span<const std::int16_t> samples);

}  // namespace dusq::audio

#endif  // DUSQ_AUDIO_IO_HPP_
