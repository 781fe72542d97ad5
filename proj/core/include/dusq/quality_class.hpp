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

#ifndef DUSQ_QUALITY_CLASS_HPP_
#define DUSQ_QUALITY_CLASS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace dusq {

/// Signal-quality category of a window, as seen by the model.
enum class QualityClass : std::uint8_t {
  kGood = 0,
  kPoor = 1,
  kInterference = 2,
  kTalking = 3,
  kSilent = 4,
};

inline constexpr std::size_t kNumClasses = 5;

inline constexpr std::array<QualityClass, kNumClasses> kAllClasses = {
    QualityClass::kGood, QualityClass::kPoor, QualityClass::kInterference,
    QualityClass::kTalking, QualityClass::kSilent};

using ClassCounts = std::array<std::size_t, kNumClasses>;

constexpr std::size_t index_of(QualityClass c) {
  return static_cast<std::size_t>(c);
}

/// Lowercase wire token: "good", "poor", "interference", "talking", "silent".
std::string_view to_token(QualityClass c);

/// Capitalized display name used in reports.
std::string_view display_name(QualityClass c);

std::optional<QualityClass> parse_quality_class(std::string_view token);

QualityClass class_from_index(std::size_t i);

}  // namespace dusq

#endif  // DUSQ_QUALITY_CLASS_HPP_
