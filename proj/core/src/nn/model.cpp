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

#include "dusq/nn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dusq::nn {
namespace {

template <typename T>
ConvBlockParams<T> block_params(const ModelConfig& c, const ModelWeights<T>& w, std::size_t i) {
  ConvBlockParams<T> p;
  p.kernel = &w.at(conv_name(i, "kernel"));
  p.bias = &w.at(conv_name(i, "bias"));
  p.gamma = &w.at(conv_name(i, "bn_gamma"));
  p.beta = &w.at(conv_name(i, "bn_beta"));
  p.running_mean = &w.at(conv_name(i, "bn_mean"));
  p.running_var = &w.at(conv_name(i, "bn_var"));
  p.pool = c.pools.at(i);
  p.dropout = c.dropout;
  return p;
}

template <typename T>
GruParams<T> gru_params(const ModelWeights<T>& w) {
  return {&w.at("gru.W_z"), &w.at("gru.U_z"), &w.at("gru.b_z"),
          &w.at("gru.W_r"), &w.at("gru.U_r"), &w.at("gru.b_r"),
          &w.at("gru.W_h"), &w.at("gru.U_h"), &w.at("gru.b_h")};
}

template <typename T>
AttentionParams<T> attention_params(const ModelWeights<T>& w) {
  return {&w.at("attention.W"), &w.at("attention.b"), &w.at("attention.u")};
}

}  // namespace

template <typename T>
std::vector<DropoutMask> ForwardCache<T>::dropout_masks() const {
  std::vector<DropoutMask> masks;
  masks.reserve(conv.size());
  for (const auto& c : conv) masks.push_back(c.keep);
  return masks;
}

template <typename T>
Tensor<T> model_forward(const Tensor<T>& scalograms, const ModelConfig& config,
                        const ModelWeights<T>& weights, const ForwardOptions& options,
                        ForwardCache<T>* cache) {
  config.validate();
  if (scalograms.rank() != 3 || scalograms.dim(1) != config.input_time ||
      scalograms.dim(2) != config.input_freq) {
    throw std::invalid_argument("model_forward: input must be [B, " +
                                std::to_string(config.input_time) + ", " +
                                std::to_string(config.input_freq) + "], got " +
                                shape_string(scalograms.shape()));
  }
  const std::size_t batch = scalograms.dim(0);
  if (cache) {
    *cache = ForwardCache<T>{};
    cache->mode = options.mode;
  }

  Tensor<T> seq;
  if (config.uses_conv()) {
    if (options.frozen_masks && options.frozen_masks->size() != config.conv_filters.size()) {
      throw std::invalid_argument("model_forward: one frozen dropout mask per conv block required");
    }
    Tensor<T> x = scalograms;
    x.reshape({batch, config.input_time, config.input_freq, 1});
    if (cache) cache->conv.resize(config.conv_filters.size());
    for (std::size_t i = 0; i < config.conv_filters.size(); ++i) {
      const DropoutMask* frozen = options.frozen_masks ? &(*options.frozen_masks)[i] : nullptr;
      x = conv_block_forward(x, block_params(config, weights, i), options.mode, options.rng,
                             frozen, cache ? &cache->conv[i] : nullptr);
    }
    x.reshape({batch, config.sequence_length(), config.step_features()});
    seq = std::move(x);
  } else {
    seq = scalograms;
  }

  if (config.uses_gru()) {
    seq = gru_forward(seq, gru_params(weights), cache ? &cache->gru : nullptr);
  }

  Tensor<T> dense_out = dense_forward(seq, weights.at("dense1.W"), weights.at("dense1.b"), true);
  AttentionOutput<T> att =
      attention_forward(dense_out, attention_params(weights), cache ? &cache->attention : nullptr);
  Tensor<T> logits =
      dense_forward(att.context, weights.at("output.W"), weights.at("output.b"), false);
  Tensor<T> probs = softmax_rows(logits);

  if (cache) {
    cache->dense_input = std::move(seq);
    cache->dense_output = std::move(dense_out);
    cache->context = std::move(att.context);
    cache->logits = std::move(logits);
    cache->probs = probs;
  }
  return probs;
}

template <typename T>
double cross_entropy(const Tensor<T>& logits, std::span<const QualityClass> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw std::invalid_argument("cross_entropy: one label per logit row required");
  }
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * k;
    double m = static_cast<double>(z[0]);
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, static_cast<double>(z[i]));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::exp(static_cast<double>(z[i]) - m);
    total += m + std::log(s) - static_cast<double>(z[index_of(labels[r])]);
  }
  return rows == 0 ? 0.0 : total / static_cast<double>(rows);
}

template <typename T>
BackwardResult<T> model_backward(const ForwardCache<T>& cache, std::span<const QualityClass> labels,
                                 const ModelConfig& config, const ModelWeights<T>& weights) {
  const Tensor<T>& probs = cache.probs;
  if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
    throw std::invalid_argument("model_backward: one label per batch row required");
  }
  if (config.uses_conv() && cache.conv.size() != config.conv_filters.size()) {
    throw std::invalid_argument("model_backward: cache does not match config");
  }
  const std::size_t batch = probs.dim(0), k = probs.dim(1);

  BackwardResult<T> result;
  result.loss = cross_entropy(cache.logits, labels);
  result.gradients = weights.zeros_like();
  ModelWeights<T>& g = result.gradients;

  Tensor<T> dlogits = probs;
  const T inv_b = T(1) / static_cast<T>(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    dlogits[r * k + index_of(labels[r])] -= T(1);
    for (std::size_t i = 0; i < k; ++i) dlogits[r * k + i] *= inv_b;
  }

  Tensor<T> dctx = dense_backward(dlogits, cache.context, cache.logits, weights.at("output.W"),
                                  false, g.at("output.W"), g.at("output.b"));

  AttentionGrads<T> ag;
  Tensor<T> dseq = attention_backward(dctx, attention_params(weights), cache.attention, ag);
  g.at("attention.W") = std::move(ag.w);
  g.at("attention.b") = std::move(ag.b);
  g.at("attention.u") = std::move(ag.u);

  dseq = dense_backward(dseq, cache.dense_input, cache.dense_output, weights.at("dense1.W"), true,
                        g.at("dense1.W"), g.at("dense1.b"));

  if (config.uses_gru()) {
    GruGrads<T> gg;
    dseq = gru_backward(dseq, gru_params(weights), cache.gru, gg, config.uses_conv());
    g.at("gru.W_z") = std::move(gg.w_z);
    g.at("gru.U_z") = std::move(gg.u_z);
    g.at("gru.b_z") = std::move(gg.b_z);
    g.at("gru.W_r") = std::move(gg.w_r);
    g.at("gru.U_r") = std::move(gg.u_r);
    g.at("gru.b_r") = std::move(gg.b_r);
    g.at("gru.W_h") = std::move(gg.w_h);
    g.at("gru.U_h") = std::move(gg.u_h);
    g.at("gru.b_h") = std::move(gg.b_h);
  }

  if (config.uses_conv()) {
    const std::size_t n = config.conv_filters.size();
    const auto& act = cache.conv.back().activation;
    const PoolSize pool = config.pools.at(n - 1);
    dseq.reshape({batch, act.dim(1) / pool.time, act.dim(2) / pool.freq, act.dim(3)});
    for (std::size_t i = n; i-- > 0;) {
      ConvBlockGrads<T> cg;
      dseq = conv_block_backward(dseq, block_params(config, weights, i), cache.conv[i], cg, i > 0);
      g.at(conv_name(i, "kernel")) = std::move(cg.kernel);
      g.at(conv_name(i, "bias")) = std::move(cg.bias);
      g.at(conv_name(i, "bn_gamma")) = std::move(cg.gamma);
      g.at(conv_name(i, "bn_beta")) = std::move(cg.beta);
    }
  }
  return result;
}

template <typename T>
QualityClass predict_class(std::span<const T> probs) {
  if (probs.size() != kNumClasses) {
    throw std::invalid_argument("predict_class: expected 5 probabilities");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return class_from_index(best);
}

template struct ForwardCache<float>;
template struct ForwardCache<double>;
template Tensor<float> model_forward(const Tensor<float>&, const ModelConfig&,
                                     const ModelWeights<float>&, const ForwardOptions&,
                                     ForwardCache<float>*);
template Tensor<double> model_forward(const Tensor<double>&, const ModelConfig&,
                                      const ModelWeights<double>&, const ForwardOptions&,
                                      ForwardCache<double>*);
template BackwardResult<float> model_backward(const ForwardCache<float>&,
                                              std::span<const QualityClass>, const ModelConfig&,
                                              const ModelWeights<float>&);
template BackwardResult<double> model_backward(const ForwardCache<double>&,
                                               std::span<const QualityClass>, const ModelConfig&,
                                               const ModelWeights<double>&);
template double cross_entropy(const Tensor<float>&, std::span<const QualityClass>);
template double cross_entropy(const Tensor<double>&, std::span<const QualityClass>);
template QualityClass predict_class(std::span<const float>);
template QualityClass predict_class(std::span<const double>);

}  // namespace dusq::nn
