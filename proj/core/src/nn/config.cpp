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

#include <stdexcept>
#include <string>

#include "dusq/nn/config.hpp"

namespace dusq::nn {

std::string_view to_token(Architecture a) {
  switch (a) {
    case Architecture::kCnnGruAttention: return "cga";
    case Architecture::kCnnAttention: return "ca";
    case Architecture::kGruAttention: return "ga";
  }
  return "unknown";
}

std::optional<Architecture> parse_architecture(std::string_view token) {
  for (Architecture a : {Architecture::kCnnGruAttention, Architecture::kCnnAttention,
                         Architecture::kGruAttention}) {
    if (to_token(a) == token) return a;
  }
  return std::nullopt;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelConfig: " + msg); };
  if (input_time == 0 || input_freq == 0) fail("input dims must be positive");
  if (num_classes < 2) fail("need at least two classes");
  if (dense_units == 0 || attention_dim == 0) fail("dense/attention sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (uses_gru() && gru_units == 0) fail("gru_units must be positive");
  if (uses_conv()) {
    if (conv_filters.empty()) fail("conv architecture needs at least one block");
    if (conv_filters.size() != pools.size()) fail("one pool entry per conv block required");
    if (kernel_size % 2 == 0) fail("kernel_size must be odd");
    std::size_t t = input_time, f = input_freq;
    for (std::size_t i = 0; i < pools.size(); ++i) {
      if (conv_filters[i] == 0) fail("filter counts must be positive");
      if (pools[i].time == 0 || pools[i].freq == 0 || t % pools[i].time != 0 ||
          f % pools[i].freq != 0) {
        fail("pool plan does not divide dims at block " + std::to_string(i));
      }
      t /= pools[i].time;
      f /= pools[i].freq;
    }
  }
}

std::size_t ModelConfig::sequence_length() const {
  if (!uses_conv()) return input_time;
  std::size_t t = input_time;
  for (const auto& p : pools) t /= p.time;
  return t;
}

std::size_t ModelConfig::step_features() const {
  if (!uses_conv()) return input_freq;
  std::size_t f = input_freq;
  for (const auto& p : pools) f /= p.freq;
  return f * conv_filters.back();
}

}  // namespace dusq::nn
