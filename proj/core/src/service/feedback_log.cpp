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

#include "dusq/service/feedback_log.hpp"

#include <ctime>

#include <nlohmann/json.hpp>

#include "dusq/error.hpp"

namespace dusq::service {

std::string encode_feedback_record(const FeedbackRecord& r) {
  return nlohmann::json{{"w", r.window_index},
                        {"model", to_token(r.model_label)},
                        {"user", to_token(r.user_label)},
                        {"ts", r.timestamp}}
      .dump();
}

FeedbackRecord decode_feedback_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw DataError("feedback record: malformed JSON");
  }
  auto cls = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw DataError(std::string("feedback record: missing '") + key + "'");
    }
    const auto c = parse_quality_class(j[key].get<std::string>());
    if (!c) throw DataError(std::string("feedback record: unknown class in '") + key + "'");
    return *c;
  };
  if (!j.is_object() || !j.contains("w") || !j["w"].is_number_unsigned()) {
    throw DataError("feedback record: missing 'w'");
  }
  if (!j.contains("ts") || !j["ts"].is_string()) throw DataError("feedback record: missing 'ts'");
  return {j["w"].get<std::size_t>(), cls("model"), cls("user"), j["ts"].get<std::string>()};
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  const auto n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms % 1000));
  return buf;
}

FeedbackLog::FeedbackLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw DataError("cannot open feedback log " + path_.string());
}

void FeedbackLog::append(const FeedbackRecord& record) {
  const std::string line = encode_feedback_record(record) + "\n";
  std::lock_guard lock(mu_);
  out_ << line;
  out_.flush();
  if (!out_) throw DataError("write failed for feedback log " + path_.string());
  ++appended_;
}

std::size_t FeedbackLog::appended() const {
  std::lock_guard lock(mu_);
  return appended_;
}

std::vector<FeedbackRecord> FeedbackLog::replay(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feedback log " + path.string());
  std::vector<FeedbackRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(decode_feedback_record(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dusq::service
