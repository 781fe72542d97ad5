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

#include <stdexcept>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"

namespace dusq::audio {

std::vector<Segment> segment_stream(const Recording& r) {
  if (r.sample_rate_hz != kAnalysisRateHz) {
    throw std::invalid_argument("segment_stream: recording must be at 4000 Hz");
  }
  const std::size_t count = r.samples.size() / kSegmentSamples;
  std::vector<Segment> segments;
  segments.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto first = r.samples.begin() + static_cast<std::ptrdiff_t>(i * kSegmentSamples);
    segments.push_back(Segment{r.id, i, std::vector<double>(first, first + kSegmentSamples)});
  }
  return segments;
}

std::vector<Window> window_assembler(std::span<const Segment> segments) {
  std::vector<Window> windows;
  if (segments.size() < kSegmentsPerWindow) return windows;
  for (std::size_t k = 1; k < segments.size(); ++k) {
    if (segments[k].index != segments[k - 1].index + 1) {
      throw std::invalid_argument("window_assembler: segment indices are not consecutive");
    }
  }
  windows.reserve(segments.size() - (kSegmentsPerWindow - 1));
  for (std::size_t k = 0; k + kSegmentsPerWindow <= segments.size(); ++k) {
    Window w;
    w.recording_id = segments[k].recording_id;
    w.start_segment_index = segments[k].index;
    w.samples.reserve(kWindowSamples);
    for (std::size_t j = 0; j < kSegmentsPerWindow; ++j) {
      const auto& s = segments[k + j].samples;
      w.samples.insert(w.samples.end(), s.begin(), s.end());
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

StreamingWindowAssembler::StreamingWindowAssembler(std::string recording_id)
    : recording_id_(std::move(recording_id)) {
  pending_.reserve(kSegmentSamples);
}

std::vector<Window> StreamingWindowAssembler::push(std::span<const double> samples) {
  std::vector<Window> out;
  std::size_t pos = 0;
  while (pos < samples.size()) {
    const std::size_t take = std::min(kSegmentSamples - pending_.size(), samples.size() - pos);
    pending_.insert(pending_.end(), samples.begin() + static_cast<std::ptrdiff_t>(pos),
                    samples.begin() + static_cast<std::ptrdiff_t>(pos + take));
    pos += take;
    if (pending_.size() < kSegmentSamples) break;

    recent_.push_back(std::move(pending_));
    pending_ = {};
    pending_.reserve(kSegmentSamples);
    ++segments_completed_;
    if (recent_.size() > kSegmentsPerWindow) recent_.pop_front();
    if (recent_.size() == kSegmentsPerWindow) {
      Window w;
      w.recording_id = recording_id_;
      w.start_segment_index = segments_completed_ - kSegmentsPerWindow;
      w.samples.reserve(kWindowSamples);
      for (const auto& s : recent_) w.samples.insert(w.samples.end(), s.begin(), s.end());
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::vector<Window> windows_from_recording(const Recording& r) {
  const Recording analysis = resample_to_4khz(r);
  const auto segments = segment_stream(analysis);
  return window_assembler(segments);
}

}  // namespace dusq::audio
