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

#ifndef DUSQ_NN_LAYERS_HPP_
#define DUSQ_NN_LAYERS_HPP_

#include <cstdint>
#include <vector>

#include "dusq/nn/config.hpp"
#include "dusq/nn/tensor.hpp"
#include "dusq/rng.hpp"

namespace dusq::nn {

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Keep flags for one dropout layer (1 = kept), one per output element.
using DropoutMask = std::vector<std::uint8_t>;

// --- Convolution block: conv3x3(same) -> ReLU -> batch-norm -> max-pool -> dropout

/// Same-padded 2D convolution over [B, T, F, Cin] with a [kh, kw, Cin, Cout]
/// kernel; returns [B, T, F, Cout].
template <typename T>
Tensor<T> conv2d_same(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);

template <typename T>
struct ConvBlockParams {
  const Tensor<T>* kernel = nullptr;
  const Tensor<T>* bias = nullptr;
  const Tensor<T>* gamma = nullptr;
  const Tensor<T>* beta = nullptr;
  const Tensor<T>* running_mean = nullptr;
  const Tensor<T>* running_var = nullptr;
  PoolSize pool;
  double dropout = 0.0;
};

template <typename T>
struct ConvBlockCache {
  Tensor<T> input;
  Tensor<T> activation;  // post-ReLU, pre-BN
  std::vector<T> mean;
  std::vector<T> inv_std;
  std::vector<T> batch_var;  // biased batch variance (train mode)
  std::vector<std::uint8_t> argmax;
  DropoutMask keep;  // empty when dropout is inactive
  ForwardMode mode = ForwardMode::kInfer;
};

template <typename T>
struct ConvBlockGrads {
  Tensor<T> kernel, bias, gamma, beta;
};

/// `frozen` replaces freshly drawn dropout masks (used by gradient checks);
/// `rng` is only consulted in train mode when no frozen mask is given.
template <typename T>
Tensor<T> conv_block_forward(const Tensor<T>& x, const ConvBlockParams<T>& p, ForwardMode mode,
                             Rng* rng, const DropoutMask* frozen, ConvBlockCache<T>* cache);

template <typename T>
Tensor<T> conv_block_backward(const Tensor<T>& grad_out, const ConvBlockParams<T>& p,
                              const ConvBlockCache<T>& cache, ConvBlockGrads<T>& grads,
                              bool need_input_grad);

// --- GRU ---------------------------------------------------------------------

template <typename T>
struct GruParams {
  const Tensor<T>* w_z = nullptr;
  const Tensor<T>* u_z = nullptr;
  const Tensor<T>* b_z = nullptr;
  const Tensor<T>* w_r = nullptr;
  const Tensor<T>* u_r = nullptr;
  const Tensor<T>* b_r = nullptr;
  const Tensor<T>* w_h = nullptr;
  const Tensor<T>* u_h = nullptr;
  const Tensor<T>* b_h = nullptr;
};

template <typename T>
struct GruCache {
  Tensor<T> input;      // [B, T, D]
  Tensor<T> z, r, cand; // [B, T, U]
  Tensor<T> h;          // [B, T, U]
};

template <typename T>
struct GruGrads {
  Tensor<T> w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h;
};

/// z = s(W_z x + U_z h + b_z), r = s(W_r x + U_r h + b_r),
/// c = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * c, h_0 = 0.
/// x is [B, T, D]; returns all hidden states [B, T, U].
template <typename T>
Tensor<T> gru_forward(const Tensor<T>& x, const GruParams<T>& p, GruCache<T>* cache);

template <typename T>
Tensor<T> gru_backward(const Tensor<T>& grad_h, const GruParams<T>& p, const GruCache<T>& cache,
                       GruGrads<T>& grads, bool need_input_grad);

// --- Attention pooling -------------------------------------------------------

template <typename T>
struct AttentionParams {
  const Tensor<T>* w = nullptr;  // [A, D]
  const Tensor<T>* b = nullptr;  // [A]
  const Tensor<T>* u = nullptr;  // [A]
};

template <typename T>
struct AttentionCache {
  Tensor<T> input;   // [B, T, D]
  Tensor<T> hidden;  // u_t, [B, T, A]
  Tensor<T> alphas;  // [B, T]
};

template <typename T>
struct AttentionOutput {
  Tensor<T> context;  // [B, D]
  Tensor<T> alphas;   // [B, T]
};

template <typename T>
struct AttentionGrads {
  Tensor<T> w, b, u;
};

/// u_t = tanh(W h_t + b); alpha = softmax_t(u_t . u); v = sum_t alpha_t h_t.
template <typename T>
AttentionOutput<T> attention_forward(const Tensor<T>& h, const AttentionParams<T>& p,
                                     AttentionCache<T>* cache);

template <typename T>
Tensor<T> attention_backward(const Tensor<T>& grad_context, const AttentionParams<T>& p,
                             const AttentionCache<T>& cache, AttentionGrads<T>& grads);

// --- Dense -------------------------------------------------------------------

/// y = x W^T + b over the last axis of a rank-2 or rank-3 tensor, optionally
/// followed by ReLU.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, bool relu);

/// `output` is the forward result (needed for the ReLU mask).
template <typename T>
Tensor<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& output,
                         const Tensor<T>& w, bool relu, Tensor<T>& grad_w, Tensor<T>& grad_b);

/// Row-wise softmax of [B, K] with max subtraction.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

}  // namespace dusq::nn

#endif  // DUSQ_NN_LAYERS_HPP_
