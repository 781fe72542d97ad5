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

#ifndef DUSQ_SERVICE_EVENTS_HPP_
#define DUSQ_SERVICE_EVENTS_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dusq/quality_class.hpp"

namespace dusq::service {

/// One classified window as pushed to monitor clients.
/// Wire form: {"w":int,"t0":float,"p":[5 floats],"y":"<class>","ms":float}.
struct StreamEvent {
  std::size_t window_index = 0;
  double t_start_s = 0.0;
  std::array<double, kNumClasses> probs{};
  QualityClass label = QualityClass::kGood;
  double latency_ms = 0.0;

  friend bool operator==(const StreamEvent&, const StreamEvent&) = default;
};

nlohmann::json to_json(const StreamEvent& e);
/// Single-line JSON text.
std::string encode_event(const StreamEvent& e);
/// Throws DataError when a field is missing, mistyped or out of range
/// (probabilities must sum to 1 +- 1e-6, latency must be >= 0).
StreamEvent decode_event(std::string_view text);

/// Operator objection: {"w":int,"user":"<class>"}.
struct FeedbackMessage {
  std::size_t window_index = 0;
  QualityClass user_label = QualityClass::kGood;
};

/// Throws DataError describing the first problem.
FeedbackMessage parse_feedback_message(std::string_view text);

std::string encode_ack(std::size_t window_index);
std::string encode_error(std::string_view message);

}  // namespace dusq::service

#endif  // DUSQ_SERVICE_EVENTS_HPP_
