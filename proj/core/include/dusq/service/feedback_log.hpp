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

#ifndef DUSQ_SERVICE_FEEDBACK_LOG_HPP_
#define DUSQ_SERVICE_FEEDBACK_LOG_HPP_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "dusq/quality_class.hpp"

namespace dusq::service {

// One JSON object per line: {"w":int,"model":"<class>","user":"<class>","ts":"<UTC ISO-8601>"}.
struct FeedbackRecord {
  std::size_t window_index = 0;
  QualityClass model_label = QualityClass::kGood;
  QualityClass user_label = QualityClass::kGood;
  std::string timestamp;

  friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

std::string encode_feedback_record(const FeedbackRecord& r);
FeedbackRecord decode_feedback_record(const std::string& line);

/// UTC with millisecond precision, e.g. 2026-03-01T12:00:00.250Z.
std::string format_timestamp(std::chrono::system_clock::time_point t);

/// Append-only JSON-lines sink. Appends from any thread are serialized and
/// flushed before returning.
class FeedbackLog {
 public:
  explicit FeedbackLog(std::filesystem::path path);

  void append(const FeedbackRecord& record);
  std::size_t appended() const;
  const std::filesystem::path& path() const { return path_; }

  /// Every record in file order. Throws DataError naming the bad line.
  static std::vector<FeedbackRecord> replay(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::size_t appended_ = 0;
};

}  // namespace dusq::service

#endif  // DUSQ_SERVICE_FEEDBACK_LOG_HPP_
