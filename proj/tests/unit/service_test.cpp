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

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/nn/weights_io.hpp"
#include "dusq/rng.hpp"
#include "dusq/service/classifier.hpp"
#include "dusq/service/events.hpp"
#include "dusq/service/feedback_log.hpp"
#include "dusq/service/pipeline.hpp"
#include "dusq/synth.hpp"
#include "oracles.hpp"
#include "toy.hpp"
#include "ws_client.hpp"

namespace dusq::service {
namespace {

using nlohmann::json;

StreamEvent sample_event() {
  return {12, 9.0, {0.7, 0.1, 0.05, 0.05, 0.1}, QualityClass::kGood, 3.25};
}

// --- Wire schema ---------------------------------------------------------------

TEST(Events, EncodeUsesCompactSchema) {
  const auto text = encode_event(sample_event());
  EXPECT_EQ(text.find('\n'), std::string::npos);
  const auto j = json::parse(text);
  EXPECT_EQ(j.size(), 5u);
  EXPECT_EQ(j.at("w"), 12);
  EXPECT_EQ(j.at("t0"), 9.0);
  EXPECT_EQ(j.at("p").size(), 5u);
  EXPECT_EQ(j.at("y"), "good");
  EXPECT_EQ(j.at("ms"), 3.25);
}

TEST(Events, DecodeRoundTripAndValidation) {
  EXPECT_EQ(decode_event(encode_event(sample_event())), sample_event());
  auto j = json::parse(encode_event(sample_event()));
  auto bad = j;
  bad["p"][0] = 0.9;
  EXPECT_THROW(decode_event(bad.dump()), DataError);
  bad = j;
  bad["ms"] = -1.0;
  EXPECT_THROW(decode_event(bad.dump()), DataError);
  bad = j;
  bad["y"] = "loud";
  EXPECT_THROW(decode_event(bad.dump()), DataError);
  bad = j;
  bad.erase("t0");
  EXPECT_THROW(decode_event(bad.dump()), DataError);
  bad = j;
  bad["p"].erase(0);
  EXPECT_THROW(decode_event(bad.dump()), DataError);
  EXPECT_THROW(decode_event("{not json"), DataError);
}

TEST(Feedback, MessageParsing) {
  const auto m = parse_feedback_message(R"({"w":12,"user":"poor"})");
  EXPECT_EQ(m.window_index, 12u);
  EXPECT_EQ(m.user_label, QualityClass::kPoor);
  for (const char* bad : {R"({"w":12})", R"({"user":"poor"})", R"({"w":-1,"user":"poor"})",
                          R"({"w":1.5,"user":"poor"})", R"({"w":1,"user":"unsure"})", R"([1,2])", "garbage"}) {
    EXPECT_THROW(parse_feedback_message(bad), DataError) << bad;
  }
  EXPECT_EQ(json::parse(encode_ack(12)).at("ack"), 12);
  EXPECT_TRUE(json::parse(encode_error("x")).contains("error"));
}

TEST(Feedback, TimestampFormat) {
  const auto t = std::chrono::system_clock::time_point(std::chrono::milliseconds(1772366400250));
  EXPECT_EQ(format_timestamp(t), "2026-03-01T12:00:00.250Z");
}

TEST(Feedback, LogIsAppendOnlyAndReplays) {
  testing::TempDir dir;
  const auto path = dir / "fb.jsonl";
  const FeedbackRecord a{12, QualityClass::kGood, QualityClass::kPoor, "2026-03-01T12:00:00.250Z"};
  const FeedbackRecord b{13, QualityClass::kSilent, QualityClass::kTalking, "2026-03-01T12:00:01.000Z"};
  {
    FeedbackLog log(path);
    log.append(a);
    EXPECT_EQ(log.appended(), 1u);
  }
  {
    FeedbackLog log(path);
    log.append(b);
  }
  const auto records = FeedbackLog::replay(path);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0], a);
  EXPECT_EQ(records[1], b);
  EXPECT_EQ(decode_feedback_record(encode_feedback_record(a)), a);
  std::ofstream(path, std::ios::app) << "{broken\n";
  EXPECT_THROW(FeedbackLog::replay(path), DataError);
}

TEST(Feedback, ConcurrentAppendsStayWholeLines) {
  testing::TempDir dir;
  FeedbackLog log(dir / "fb.jsonl");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) log.append({static_cast<std::size_t>(t * 100 + i), QualityClass::kGood, QualityClass::kPoor, "2026-01-01T00:00:00.000Z"});
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(FeedbackLog::replay(dir / "fb.jsonl").size(), 200u);
}

// --- Queue -------------------------------------------------------------------------

TEST(Queue, FifoAndClose) {
  BoundedQueue<int> q(2);
  EXPECT_TRUE(q.push(1));
  EXPECT_TRUE(q.push(2));
  std::thread producer([&] { EXPECT_TRUE(q.push(3)); });
  EXPECT_EQ(q.pop(), 1);
  producer.join();
  EXPECT_EQ(q.pop(), 2);
  EXPECT_EQ(q.pop(), 3);
  std::thread consumer([&] { EXPECT_EQ(q.pop(), std::nullopt); });
  q.close();
  consumer.join();
  EXPECT_FALSE(q.push(4));
}

// --- Pipeline ----------------------------------------------------------------------

class VectorSource : public AudioSource {
 public:
  VectorSource(std::vector<double> x, int rate, std::size_t chunk) : x_(std::move(x)), rate_(rate), chunk_(chunk) {}
  int sample_rate_hz() const override { return rate_; }
  std::optional<std::vector<double>> next() override {
    if (pos_ >= x_.size()) return std::nullopt;
    const auto end = std::min(x_.size(), pos_ + chunk_);
    std::vector<double> out(x_.begin() + static_cast<std::ptrdiff_t>(pos_), x_.begin() + static_cast<std::ptrdiff_t>(end));
    pos_ = end;
    return out;
  }

 private:
  std::vector<double> x_;
  int rate_;
  std::size_t chunk_;
  std::size_t pos_ = 0;
};

class ThrowingSource : public AudioSource {
 public:
  int sample_rate_hz() const override { return audio::kAnalysisRateHz; }
  std::optional<std::vector<double>> next() override {
    if (++calls_ > 3) throw DataError("source broke");
    return std::vector<double>(5000, 0.0);
  }

 private:
  int calls_ = 0;
};

WindowClassifier small_classifier(std::uint64_t seed = 1) {
  auto cfg = testing::small_config();
  cfg.seed = seed;
  return WindowClassifier(cfg, nn::init_weights<double>(cfg));
}

std::vector<double> sixty_seconds_44k() {
  // Mixed content so labels vary.
  std::vector<double> x4;
  const QualityClass order[] = {QualityClass::kGood, QualityClass::kTalking, QualityClass::kSilent, QualityClass::kPoor};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto span = synth::gen_span(order[i], 15.0, i);
    x4.insert(x4.end(), span.begin(), span.end());
  }
  return audio::upsample_4khz_to_44k(x4);
}

TEST(Pipeline, SixtySecondsGiveSeventySixEventsInOrder) {
  const auto classifier = small_classifier();
  VectorSource src(sixty_seconds_44k(), audio::kAcquisitionRateHz, 4410);
  std::vector<StreamEvent> events;
  const auto stats = run_pipeline(src, classifier, [&](const StreamEvent& e) { events.push_back(e); });
  ASSERT_EQ(events.size(), 76u);
  EXPECT_EQ(stats.windows, 76u);
  EXPECT_NEAR(stats.audio_seconds, 60.0, 1e-9);
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].window_index, i);
    EXPECT_DOUBLE_EQ(events[i].t_start_s, 0.75 * i);
    EXPECT_GE(events[i].latency_ms, 0.0);
    double s = 0.0;
    for (double p : events[i].probs) s += p;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Pipeline, StreamingMatchesOfflineBitForBit) {
  const auto classifier = small_classifier(2);
  const auto x = sixty_seconds_44k();
  const auto offline = classify_recording(classifier, {"x", x, audio::kAcquisitionRateHz});
  for (std::size_t chunk : {441u, 4410u, 17000u}) {
    VectorSource src(x, audio::kAcquisitionRateHz, chunk);
    std::vector<StreamEvent> events;
    run_pipeline(src, classifier, [&](const StreamEvent& e) { events.push_back(e); }, {3});
    ASSERT_EQ(events.size(), offline.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      EXPECT_EQ(events[i].probs, offline[i].probs) << i;
      EXPECT_EQ(events[i].label, offline[i].label);
    }
  }
}

TEST(Pipeline, FrameSourceAtBothRates) {
  const auto classifier = small_classifier();
  for (int rate : {audio::kAcquisitionRateHz, audio::kAnalysisRateHz}) {
    const std::size_t n = static_cast<std::size_t>(rate) * 8;
    std::stringstream frames;
    Rng rng(3);
    std::vector<std::int16_t> chunk;
    for (std::size_t i = 0; i < n; ++i) {
      chunk.push_back(static_cast<std::int16_t>(rng.below(2000)) - 1000);
      if (chunk.size() == 1000) {
        audio::write_frame(frames, chunk);
        chunk.clear();
      }
    }
    audio::write_frame(frames, {});
    FrameSource src(frames, rate);
    std::size_t count = 0;
    run_pipeline(src, classifier, [&](const StreamEvent&) { ++count; });
    EXPECT_EQ(count, 10u - 4u) << rate;
  }
}

TEST(Pipeline, FailuresPropagate) {
  const auto classifier = small_classifier();
  ThrowingSource src;
  EXPECT_THROW(run_pipeline(src, classifier, {}), DataError);
  VectorSource wrong(std::vector<double>(100), 48000, 10);
  EXPECT_THROW(run_pipeline(wrong, classifier, {}), DataError);
  VectorSource ok(std::vector<double>(40000), audio::kAnalysisRateHz, 1000);
  EXPECT_THROW(run_pipeline(ok, classifier, [](const StreamEvent&) { throw std::runtime_error("sink"); }),
               std::runtime_error);
}

// --- Classification -------------------------------------------------------------------

TEST(Classify, RowCountFollowsDuration) {
  const auto classifier = small_classifier();
  for (double seconds : {2.0, 3.75, 4.4, 7.9}) {
    const auto n = static_cast<std::size_t>(seconds * 44100.0);
    const auto rows = classify_recording(classifier, {"x", std::vector<double>(n, 0.0), audio::kAcquisitionRateHz});
    const auto segs = static_cast<std::size_t>(std::floor(static_cast<double>(n) / 44100.0 / 0.75));
    EXPECT_EQ(rows.size(), segs >= 5 ? segs - 4 : 0u) << seconds;
  }
}

TEST(Classify, CsvLayout) {
  const std::vector<ClassifiedWindow> rows = {{0, 0.0, {0.5, 0.2, 0.1, 0.1, 0.1}, QualityClass::kGood},
                                              {1, 0.75, {0.1, 0.2, 0.1, 0.1, 0.5}, QualityClass::kSilent}};
  std::ostringstream out;
  write_classification_csv(out, rows);
  EXPECT_EQ(out.str(),
            "window,t0,good,poor,interference,talking,silent,label\n"
            "0,0.00,0.500000,0.200000,0.100000,0.100000,0.100000,good\n"
            "1,0.75,0.100000,0.200000,0.100000,0.100000,0.500000,silent\n");
}

TEST(Classify, FromFileMatchesInMemoryWeights) {
  testing::TempDir dir;
  auto cfg = testing::small_config();
  const auto w = nn::init_weights<double>(cfg);
  nn::write_weights_file(dir / "w.dqcw", cfg, w);
  const auto from_file = WindowClassifier::from_file(dir / "w.dqcw");
  EXPECT_EQ(from_file.config().arch, cfg.arch);
  const auto x = synth::gen_span(QualityClass::kGood, 3.75, 1);
  const auto a = from_file.classify(x);
  const auto b = WindowClassifier(cfg, w).classify(x);
  for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(a[c], b[c], 1e-5);
}

// --- WebSocket service ------------------------------------------------------------------

TEST(StreamService, BroadcastsEventsAndLogsFeedback) {
  testing::TempDir dir;
  const auto classifier = small_classifier(4);
  VectorSource src(sixty_seconds_44k(), audio::kAcquisitionRateHz, 4410);

  std::atomic<std::uint16_t> port{0};
  StreamServiceOptions opt;
  opt.port = 0;
  opt.feedback_log = dir / "feedback.jsonl";
  opt.wait_for_clients = 1;
  opt.wait_timeout = std::chrono::seconds(20);
  opt.linger = std::chrono::milliseconds(1500);
  opt.on_listening = [&](std::uint16_t p) { port = p; };

  std::vector<StreamEvent> server_events;
  opt.on_event = [&](const StreamEvent& e) { server_events.push_back(e); };
  std::thread server([&] { run_stream_service(src, classifier, opt); });
  while (port == 0) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  std::vector<StreamEvent> received;
  std::vector<json> replies;
  {
    testing::WsClient client(port);
    bool sent = false;
    while (auto frame = client.receive()) {
      const auto j = json::parse(*frame);
      if (j.contains("w") && j.contains("p")) {
        received.push_back(decode_event(*frame));
        if (received.back().window_index == 12 && !sent) {
          client.send(R"({"w":12,"user":"poor"})");
          client.send(R"({"w":"x"})");
          client.send(R"({"w":9999,"user":"good"})");
          sent = true;
        }
      } else {
        replies.push_back(j);
      }
      if (received.size() == 76 && replies.size() == 3) break;
    }
  }
  server.join();

  ASSERT_EQ(received.size(), 76u);
  for (std::size_t i = 0; i < received.size(); ++i) {
    EXPECT_EQ(received[i].window_index, i);
    EXPECT_EQ(received[i].label, server_events[i].label);
  }
  ASSERT_EQ(replies.size(), 3u);
  EXPECT_EQ(replies[0].at("ack"), 12);
  EXPECT_TRUE(replies[1].contains("error"));
  EXPECT_TRUE(replies[2].contains("error"));

  const auto log = FeedbackLog::replay(dir / "feedback.jsonl");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].window_index, 12u);
  EXPECT_EQ(log[0].model_label, received[12].label);
  EXPECT_EQ(log[0].user_label, QualityClass::kPoor);
}

TEST(StreamService, ClientDisconnectIsTolerated) {
  testing::TempDir dir;
  const auto classifier = small_classifier(5);
  VectorSource src(sixty_seconds_44k(), audio::kAcquisitionRateHz, 4410);
  std::atomic<std::uint16_t> port{0};
  StreamServiceOptions opt;
  opt.port = 0;
  opt.feedback_log = dir / "feedback.jsonl";
  opt.wait_for_clients = 1;
  opt.on_listening = [&](std::uint16_t p) { port = p; };
  PipelineStats stats;
  std::thread server([&] { stats = run_stream_service(src, classifier, opt); });
  while (port == 0) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  {
    testing::WsClient client(port);
    ASSERT_TRUE(client.receive().has_value());
  }
  server.join();
  EXPECT_EQ(stats.windows, 76u);
}

}  // namespace
}  // namespace dusq::service
