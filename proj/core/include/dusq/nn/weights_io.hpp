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

#ifndef DUSQ_NN_WEIGHTS_IO_HPP_
#define DUSQ_NN_WEIGHTS_IO_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "dusq/nn/config.hpp"
#include "dusq/nn/weights.hpp"

namespace dusq::nn {

// File layout (all integers little-endian):
//   "DQCW" | u16 version | u32 tensor count |
//   per tensor: u16 name length, UTF-8 name, u8 rank, u32 dims[rank],
//               f32 payload (row-major).
// Architecture metadata travels as "meta.arch" [1], "meta.input" [2],
// "meta.pools" [n, 2] and "meta.dropout" [1] tensors; the remaining sizes are
// read off the parameter shapes, so a file alone rebuilds its ModelConfig.
inline constexpr std::uint16_t kWeightsFormatVersion = 1;

struct LoadedModel {
  ModelConfig config;
  ModelWeights<double> weights;  // values are exactly representable in f32
};

std::vector<std::byte> save_weights(const ModelConfig& config, const ModelWeights<double>& weights);

/// Throws DataError naming the failing field (magic, version, shape table,
/// truncated payload).
LoadedModel load_weights(std::span<const std::byte> bytes);

void write_weights_file(const std::filesystem::path& path, const ModelConfig& config,
                        const ModelWeights<double>& weights);
LoadedModel read_weights_file(const std::filesystem::path& path);

}  // namespace dusq::nn

#endif  // DUSQ_NN_WEIGHTS_IO_HPP_
