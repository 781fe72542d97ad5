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

#include "dusq/quality_class.hpp"

#include <stdexcept>

namespace dusq {

std::string_view to_token(QualityClass c) {
  switch (c) {
    case QualityClass::kGood: return "good";
    case QualityClass::kPoor: return "poor";
    case QualityClass::kInterference: return "interference";
    case QualityClass::kTalking: return "talking";
    case QualityClass::kSilent: return "silent";
  }
  return "unknown";
}

std::string_view display_name(QualityClass c) {
  switch (c) {
    case QualityClass::kGood: return "Good";
    case QualityClass::kPoor: return "Poor";
    case QualityClass::kInterference: return "Interference";
    case QualityClass::kTalking: return "Talking";
    case QualityClass::kSilent: return "Silent";
  }
  return "Unknown";
}

std::optional<QualityClass> parse_quality_class(std::string_view token) {
  for (QualityClass c : kAllClasses) {
    if (to_token(c) == token) return c;
  }
  return std::nullopt;
}

QualityClass class_from_index(std::size_t i) {
  if (i >= kNumClasses) throw std::out_of_range("class index out of range");
  return static_cast<QualityClass>(i);
}

}  // namespace dusq
