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

#ifndef DUSQ_NN_WEIGHTS_HPP_
#define DUSQ_NN_WEIGHTS_HPP_

#include <map>
#include <string>
#include <string_view>

#include "dusq/nn/config.hpp"
#include "dusq/nn/tensor.hpp"

namespace dusq::nn {

/// Named parameter tensors. Conv block i uses "conv<i>.{kernel,bias,bn_gamma,
/// bn_beta,bn_mean,bn_var}"; the GRU "gru.{W,U,b}_{z,r,h}"; then "dense1.{W,b}",
/// "attention.{W,b,u}" and "output.{W,b}". Matrices are [out, in]; conv
/// kernels are [kh, kw, in_channels, out_channels].
template <typename T>
class ModelWeights {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor<T>& at(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  void set(const std::string& name, Tensor<T> t) { tensors_[name] = std::move(t); }

  const Map& tensors() const { return tensors_; }
  Map& tensors() { return tensors_; }

  /// Same names and shapes, all zeros.
  ModelWeights zeros_like() const;

  template <typename U>
  ModelWeights<U> cast() const {
    ModelWeights<U> out;
    for (const auto& [name, t] : tensors_) out.set(name, t.template cast<U>());
    return out;
  }

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;

 private:
  Map tensors_;
};

std::string conv_name(std::size_t block, std::string_view field);

/// Batch-norm running statistics are buffers, not trained parameters.
bool is_trainable(std::string_view name);

/// Seeded initialization: Glorot-uniform kernels/matrices, orthogonal GRU
/// recurrent matrices, zero biases, unit BN scale and running variance.
template <typename T>
ModelWeights<T> init_weights(const ModelConfig& config);

/// Throws std::invalid_argument naming the first missing or mis-shaped tensor.
template <typename T>
void check_weights(const ModelConfig& config, const ModelWeights<T>& weights);

}  // namespace dusq::nn

#endif  // DUSQ_NN_WEIGHTS_HPP_
