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

#ifndef DUSQ_TRAIN_REPORT_HPP_
#define DUSQ_TRAIN_REPORT_HPP_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "dusq/train/metrics.hpp"
#include "dusq/train/trainer.hpp"

namespace dusq::train {

// Documents carry no timings or host details, so a seeded run reproduces
// them byte for byte.
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const CrossValidationResult& cv);
nlohmann::json to_json(const TrainResult& result);

std::string format_text(const MetricsReport& report);
std::string format_text(const CrossValidationResult& cv);

/// Writes `<stem>.json` and `<stem>.txt`.
void write_report(const std::filesystem::path& stem, const nlohmann::json& doc,
                  const std::string& text);

}  // namespace dusq::train

#endif  // DUSQ_TRAIN_REPORT_HPP_
