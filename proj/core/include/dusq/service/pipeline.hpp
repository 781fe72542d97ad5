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

#ifndef DUSQ_SERVICE_PIPELINE_HPP_
#define DUSQ_SERVICE_PIPELINE_HPP_

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <vector>

#include "dusq/service/classifier.hpp"
#include "dusq/service/events.hpp"

namespace dusq::service {

/// Blocking multi-producer/multi-consumer FIFO with a fixed capacity.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Blocks while full; returns false once the queue is closed.
  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  /// Blocks while empty; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

class AudioSource {
 public:
  virtual ~AudioSource() = default;
  virtual int sample_rate_hz() const = 0;
  /// Next block of samples in [-1, 1]; nullopt at end of stream.
  virtual std::optional<std::vector<double>> next() = 0;
};

/// Replays a WAV file in fixed chunks. When paced, chunk k is released no
/// earlier than (k + 1) * chunk_seconds after the first call.
class WavFileSource : public AudioSource {
 public:
  WavFileSource(const std::filesystem::path& path, bool paced, double chunk_seconds = 0.1);
  int sample_rate_hz() const override { return recording_.sample_rate_hz; }
  std::optional<std::vector<double>> next() override;

 private:
  audio::Recording recording_;
  bool paced_;
  std::size_t chunk_;
  std::size_t pos_ = 0;
  std::size_t chunks_sent_ = 0;
  std::optional<std::chrono::steady_clock::time_point> start_;
};

/// Live 16-bit frames (see audio::read_frame) at a declared rate.
class FrameSource : public AudioSource {
 public:
  FrameSource(std::istream& in, int sample_rate_hz) : in_(in), rate_(sample_rate_hz) {}
  int sample_rate_hz() const override { return rate_; }
  std::optional<std::vector<double>> next() override;

 private:
  std::istream& in_;
  int rate_;
};

struct PipelineOptions {
  std::size_t queue_capacity = 16;
};

struct PipelineStats {
  std::size_t windows = 0;
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;
};

using EventSink = std::function<void(const StreamEvent&)>;

/// Ingest -> DSP -> inference -> emit, one thread per stage joined by bounded
/// queues; `sink` runs on the calling thread. Latency is measured from the
/// arrival of the chunk that completed a window to its emission. A failure in
/// any stage stops the others and is rethrown here.
PipelineStats run_pipeline(AudioSource& source, const WindowClassifier& classifier,
                           const EventSink& sink, const PipelineOptions& options = {});

struct StreamServiceOptions {
  std::uint16_t port = 8765;  // 0 picks a free port
  std::filesystem::path feedback_log = "feedback.jsonl";
  std::size_t wait_for_clients = 0;
  std::chrono::milliseconds wait_timeout{10000};
  std::chrono::milliseconds linger{0};  // keep accepting feedback after the audio ends
  PipelineOptions pipeline;
  std::function<void(std::uint16_t port)> on_listening;
  EventSink on_event;
};

/// Runs the pipeline, broadcasting each event over a WebSocket on localhost
/// and appending accepted feedback messages to the log.
PipelineStats run_stream_service(AudioSource& source, const WindowClassifier& classifier,
                                 const StreamServiceOptions& options);

}  // namespace dusq::service

#endif  // DUSQ_SERVICE_PIPELINE_HPP_
