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

#ifndef DUSQ_NN_MODEL_HPP_
#define DUSQ_NN_MODEL_HPP_

#include <span>
#include <vector>

#include "dusq/nn/config.hpp"
#include "dusq/nn/layers.hpp"
#include "dusq/nn/tensor.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/quality_class.hpp"
#include "dusq/rng.hpp"

namespace dusq::nn {

struct ForwardOptions {
  ForwardMode mode = ForwardMode::kInfer;
  Rng* rng = nullptr;  // dropout source in train mode
  // One mask per conv block; replaces sampling when set.
  const std::vector<DropoutMask>* frozen_masks = nullptr;
};

/// Everything the backward pass needs from a train-mode forward.
template <typename T>
struct ForwardCache {
  std::vector<ConvBlockCache<T>> conv;
  GruCache<T> gru;
  Tensor<T> dense_input;   // [B, S, D] fed to dense1
  Tensor<T> dense_output;  // [B, S, dense_units]
  AttentionCache<T> attention;
  Tensor<T> context;       // [B, dense_units]
  Tensor<T> logits;        // [B, classes]
  Tensor<T> probs;         // [B, classes]
  ForwardMode mode = ForwardMode::kInfer;

  std::vector<DropoutMask> dropout_masks() const;
};

/// scalograms: [B, input_time, input_freq]. Returns class probabilities
/// [B, classes]; each row sums to 1.
template <typename T>
Tensor<T> model_forward(const Tensor<T>& scalograms, const ModelConfig& config,
                        const ModelWeights<T>& weights, const ForwardOptions& options,
                        ForwardCache<T>* cache = nullptr);

template <typename T>
struct BackwardResult {
  ModelWeights<T> gradients;  // running-stat entries are zero
  double loss = 0.0;          // mean categorical cross-entropy
};

/// Gradients of the mean cross-entropy of `cache.probs` against `labels`.
template <typename T>
BackwardResult<T> model_backward(const ForwardCache<T>& cache, std::span<const QualityClass> labels,
                                 const ModelConfig& config, const ModelWeights<T>& weights);

/// Mean categorical cross-entropy computed from logits via log-softmax.
template <typename T>
double cross_entropy(const Tensor<T>& logits, std::span<const QualityClass> labels);

/// Argmax; ties resolve to the lowest class index.
template <typename T>
QualityClass predict_class(std::span<const T> probs);

}  // namespace dusq::nn

#endif  // DUSQ_NN_MODEL_HPP_
