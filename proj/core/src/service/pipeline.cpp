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

#include "dusq/service/pipeline.hpp"

#include <atomic>
#include <istream>
#include <thread>
#include <unordered_map>

#include "dusq/error.hpp"
#include "dusq/nn/model.hpp"
#include "dusq/service/feedback_log.hpp"
#include "dusq/service/ws_server.hpp"

namespace dusq::service {
namespace {

using Clock = std::chrono::steady_clock;

struct Chunk {
  std::vector<double> samples;
  Clock::time_point arrival;
};

struct FeatureJob {
  std::size_t index = 0;
  double t0 = 0.0;
  std::vector<float> features;
  Clock::time_point ready;
};

struct Scored {
  StreamEvent event;
  Clock::time_point ready;
};

double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

}  // namespace

WavFileSource::WavFileSource(const std::filesystem::path& path, bool paced, double chunk_seconds)
    : recording_(audio::read_wav(path)), paced_(paced) {
  if (!(chunk_seconds > 0.0)) throw std::invalid_argument("WavFileSource: chunk length must be positive");
  chunk_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(chunk_seconds * static_cast<double>(recording_.sample_rate_hz)));
}

std::optional<std::vector<double>> WavFileSource::next() {
  if (pos_ >= recording_.samples.size()) return std::nullopt;
  if (paced_) {
    if (!start_) start_ = Clock::now();
    const double due_s = static_cast<double>((chunks_sent_ + 1) * chunk_) /
                         static_cast<double>(recording_.sample_rate_hz);
    std::this_thread::sleep_until(*start_ + std::chrono::duration_cast<Clock::duration>(
                                                std::chrono::duration<double>(due_s)));
  }
  const std::size_t end = std::min(recording_.samples.size(), pos_ + chunk_);
  std::vector<double> out(recording_.samples.begin() + static_cast<std::ptrdiff_t>(pos_),
                          recording_.samples.begin() + static_cast<std::ptrdiff_t>(end));
  pos_ = end;
  ++chunks_sent_;
  return out;
}

std::optional<std::vector<double>> FrameSource::next() {
  const auto frame = audio::read_frame(in_);
  if (!frame) return std::nullopt;
  std::vector<double> out(frame->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>((*frame)[i]) / 32768.0;
  return out;
}

PipelineStats run_pipeline(AudioSource& source, const WindowClassifier& classifier,
                           const EventSink& sink, const PipelineOptions& options) {
  const int rate = source.sample_rate_hz();
  if (rate != audio::kAcquisitionRateHz && rate != audio::kAnalysisRateHz) {
    throw DataError("stream: unsupported sample rate " + std::to_string(rate) +
                    " Hz (expected 44100 or 4000)");
  }
  BoundedQueue<Chunk> audio_q(options.queue_capacity);
  BoundedQueue<FeatureJob> feature_q(options.queue_capacity);
  BoundedQueue<Scored> scored_q(options.queue_capacity);

  std::mutex err_mu;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard lock(err_mu);
      if (!error) error = e;
    }
    failed = true;
    audio_q.close();
    feature_q.close();
    scored_q.close();
  };

  std::atomic<std::size_t> samples_in{0};
  const auto wall_start = Clock::now();

  std::thread ingest([&] {
    try {
      while (auto block = source.next()) {
        samples_in += block->size();
        if (!audio_q.push({std::move(*block), Clock::now()})) return;
      }
      audio_q.close();
    } catch (...) {
      fail(std::current_exception());
    }
  });

  std::thread dsp([&] {
    try {
      std::optional<audio::RationalResampler> resampler;
      if (rate == audio::kAcquisitionRateHz) resampler.emplace(audio::make_acquisition_resampler());
      audio::StreamingWindowAssembler assembler;
      auto emit = [&](std::span<const double> at_4k, Clock::time_point ready) {
        for (auto& w : assembler.push(at_4k)) {
          FeatureJob job{w.start_segment_index, w.start_seconds(), classifier.features(w.samples), ready};
          if (!feature_q.push(std::move(job))) return false;
        }
        return true;
      };
      while (auto chunk = audio_q.pop()) {
        const bool ok = resampler ? emit(resampler->process(chunk->samples), chunk->arrival)
                                  : emit(chunk->samples, chunk->arrival);
        if (!ok) return;
      }
      if (failed) return;
      if (resampler) emit(resampler->flush(), Clock::now());
      feature_q.close();
    } catch (...) {
      fail(std::current_exception());
    }
  });

  std::thread infer([&] {
    try {
      while (auto job = feature_q.pop()) {
        Scored s;
        s.event.window_index = job->index;
        s.event.t_start_s = job->t0;
        s.event.probs = classifier.infer(job->features);
        s.event.label = nn::predict_class(std::span<const double>(s.event.probs));
        s.ready = job->ready;
        if (!scored_q.push(std::move(s))) return;
      }
      if (!failed) scored_q.close();
    } catch (...) {
      fail(std::current_exception());
    }
  });

  PipelineStats stats;
  double latency_sum = 0.0;
  try {
    while (auto s = scored_q.pop()) {
      s->event.latency_ms = std::max(0.0, elapsed_ms(s->ready, Clock::now()));
      if (sink) sink(s->event);
      ++stats.windows;
      latency_sum += s->event.latency_ms;
      stats.max_latency_ms = std::max(stats.max_latency_ms, s->event.latency_ms);
    }
  } catch (...) {
    fail(std::current_exception());
  }
  ingest.join();
  dsp.join();
  infer.join();
  if (error) std::rethrow_exception(error);

  stats.audio_seconds = static_cast<double>(samples_in.load()) / static_cast<double>(rate);
  stats.wall_seconds = std::chrono::duration<double>(Clock::now() - wall_start).count();
  stats.mean_latency_ms = stats.windows ? latency_sum / static_cast<double>(stats.windows) : 0.0;
  return stats;
}

PipelineStats run_stream_service(AudioSource& source, const WindowClassifier& classifier,
                                 const StreamServiceOptions& options) {
  FeedbackLog log(options.feedback_log);
  std::mutex labels_mu;
  std::unordered_map<std::size_t, QualityClass> emitted;

  WsServer server(options.port, [&](const std::string& text) -> std::string {
    try {
      const auto msg = parse_feedback_message(text);
      QualityClass model_label;
      {
        std::lock_guard lock(labels_mu);
        const auto it = emitted.find(msg.window_index);
        if (it == emitted.end()) {
          return encode_error("unknown window " + std::to_string(msg.window_index));
        }
        model_label = it->second;
      }
      log.append({msg.window_index, model_label, msg.user_label,
                  format_timestamp(std::chrono::system_clock::now())});
      return encode_ack(msg.window_index);
    } catch (const DataError& e) {
      return encode_error(e.what());
    }
  });
  if (options.on_listening) options.on_listening(server.port());
  if (options.wait_for_clients > 0) server.wait_for_clients(options.wait_for_clients, options.wait_timeout);

  const auto stats = run_pipeline(
      source, classifier,
      [&](const StreamEvent& e) {
        {
          std::lock_guard lock(labels_mu);
          emitted[e.window_index] = e.label;
        }
        server.broadcast(encode_event(e));
        if (options.on_event) options.on_event(e);
      },
      options.pipeline);
  server.drain(std::chrono::seconds(5));
  if (options.linger.count() > 0) std::this_thread::sleep_for(options.linger);
  server.stop();
  return stats;
}

}  // namespace dusq::service
