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

#ifndef DUSQ_NN_CONFIG_HPP_
#define DUSQ_NN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace dusq::nn {

enum class Architecture {
  kCnnGruAttention,  // "cga"
  kCnnAttention,     // "ca"
  kGruAttention,     // "ga"
};

std::string_view to_token(Architecture a);
std::optional<Architecture> parse_architecture(std::string_view token);

enum class ForwardMode { kTrain, kInfer };

struct PoolSize {
  std::size_t time = 1;
  std::size_t freq = 1;
  friend bool operator==(const PoolSize&, const PoolSize&) = default;
};

struct ModelConfig {
  Architecture arch = Architecture::kCnnGruAttention;
  std::size_t input_time = 250;
  std::size_t input_freq = 40;
  std::vector<std::size_t> conv_filters = {32, 64, 128};
  std::size_t kernel_size = 3;
  std::vector<PoolSize> pools = {{2, 2}, {1, 2}, {1, 2}};
  double dropout = 0.25;
  std::size_t gru_units = 50;
  std::size_t dense_units = 50;
  std::size_t attention_dim = 50;
  std::size_t num_classes = 5;
  std::uint64_t seed = 0;

  bool uses_conv() const { return arch != Architecture::kGruAttention; }
  bool uses_gru() const { return arch != Architecture::kCnnAttention; }

  /// Throws std::invalid_argument when the pool plan does not divide the
  /// propagated dims or a size is zero.
  void validate() const;

  /// Time steps and per-step features entering the recurrent/dense stage.
  std::size_t sequence_length() const;
  std::size_t step_features() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace dusq::nn

#endif  // DUSQ_NN_CONFIG_HPP_
