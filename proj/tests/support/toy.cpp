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

#include "toy.hpp"

#include <string>
#include <vector>

#include "dusq/rng.hpp"

namespace dusq::testing {

train::WindowDataset toy_dataset(std::size_t recordings_per_class, std::size_t windows,
                                 std::uint64_t seed) {
  train::WindowDataset data;
  Rng rng(seed);
  std::vector<float> f(train::kFeatureSize);
  for (std::size_t r = 0; r < recordings_per_class; ++r) {
    for (auto cls : kAllClasses) {
      const auto rec = data.add_recording(std::string(to_token(cls)) + "-" + std::to_string(r));
      for (std::size_t w = 0; w < windows; ++w) {
        for (std::size_t t = 0; t < 250; ++t) {
          for (std::size_t b = 0; b < 40; ++b) {
            const bool lit = b / 8 == index_of(cls);
            f[t * 40 + b] = static_cast<float>(0.3 * rng.uniform() + (lit ? 0.7 : 0.0));
          }
        }
        data.add(rec, w, cls, f);
      }
    }
  }
  return data;
}

nn::ModelConfig small_config(nn::Architecture arch) {
  nn::ModelConfig c;
  c.arch = arch;
  c.conv_filters = {2, 2, 2};
  c.gru_units = 4;
  c.dense_units = 8;
  c.attention_dim = 4;
  c.dropout = 0.0;
  return c;
}

}  // namespace dusq::testing
