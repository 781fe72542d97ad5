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

#include "dusq/service/events.hpp"

#include <cmath>

#include "dusq/error.hpp"

namespace dusq::service {
namespace {

using nlohmann::json;

json parse_object(std::string_view text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw DataError(std::string(what) + ": malformed JSON");
  }
  if (!j.is_object()) throw DataError(std::string(what) + ": expected a JSON object");
  return j;
}

std::size_t window_field(const json& j, const char* what) {
  const auto it = j.find("w");
  if (it == j.end()) throw DataError(std::string(what) + ": missing field 'w'");
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw DataError(std::string(what) + ": 'w' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

QualityClass class_field(const json& j, const char* key, const char* what) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string(what) + ": missing field '" + key + "'");
  if (!it->is_string()) throw DataError(std::string(what) + ": '" + key + "' must be a string");
  const auto c = parse_quality_class(it->get<std::string>());
  if (!c) {
    throw DataError(std::string(what) + ": unknown class '" + it->get<std::string>() + "'");
  }
  return *c;
}

double number_field(const json& j, const char* key, const char* what) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw DataError(std::string(what) + ": '" + key + "' must be a number");
  }
  return it->get<double>();
}

}  // namespace

nlohmann::json to_json(const StreamEvent& e) {
  return {{"w", e.window_index},
          {"t0", e.t_start_s},
          {"p", e.probs},
          {"y", to_token(e.label)},
          {"ms", e.latency_ms}};
}

std::string encode_event(const StreamEvent& e) { return to_json(e).dump(); }

StreamEvent decode_event(std::string_view text) {
  const char* what = "event";
  const json j = parse_object(text, what);
  StreamEvent e;
  e.window_index = window_field(j, what);
  e.t_start_s = number_field(j, "t0", what);
  e.latency_ms = number_field(j, "ms", what);
  if (!(e.latency_ms >= 0.0)) throw DataError("event: 'ms' must be non-negative");
  e.label = class_field(j, "y", what);
  const auto p = j.find("p");
  if (p == j.end() || !p->is_array() || p->size() != kNumClasses) {
    throw DataError("event: 'p' must be an array of 5 numbers");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (!(*p)[i].is_number()) throw DataError("event: 'p' must be an array of 5 numbers");
    e.probs[i] = (*p)[i].get<double>();
    if (!(e.probs[i] >= 0.0)) throw DataError("event: negative probability");
    sum += e.probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) throw DataError("event: probabilities do not sum to 1");
  return e;
}

FeedbackMessage parse_feedback_message(std::string_view text) {
  const char* what = "feedback";
  const json j = parse_object(text, what);
  FeedbackMessage m;
  m.window_index = window_field(j, what);
  m.user_label = class_field(j, "user", what);
  return m;
}

std::string encode_ack(std::size_t window_index) { return json{{"ack", window_index}}.dump(); }

std::string encode_error(std::string_view message) {
  return json{{"error", std::string(message)}}.dump();
}

}  // namespace dusq::service
