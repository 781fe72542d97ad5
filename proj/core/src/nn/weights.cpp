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

#include "dusq/nn/weights.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dusq/rng.hpp"

namespace dusq::nn {
namespace {

template <typename T>
Tensor<T> glorot(Rng& rng, Shape shape, double fan_in, double fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor<T> t(std::move(shape));
  for (T& v : t.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

template <typename T>
Tensor<T> orthogonal(Rng& rng, std::size_t n) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Tensor<T> t({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      t[i * n + j] = static_cast<T>(q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return t;
}

std::vector<std::pair<std::string, Shape>> expected_shapes(const ModelConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  if (c.uses_conv()) {
    std::size_t cin = 1;
    for (std::size_t i = 0; i < c.conv_filters.size(); ++i) {
      const std::size_t cout = c.conv_filters[i];
      out.emplace_back(conv_name(i, "kernel"), Shape{c.kernel_size, c.kernel_size, cin, cout});
      for (const char* f : {"bias", "bn_gamma", "bn_beta", "bn_mean", "bn_var"}) {
        out.emplace_back(conv_name(i, f), Shape{cout});
      }
      cin = cout;
    }
  }
  std::size_t d = c.step_features();
  if (c.uses_gru()) {
    const std::size_t u = c.gru_units;
    for (const char* g : {"z", "r", "h"}) {
      out.emplace_back(std::string("gru.W_") + g, Shape{u, d});
      out.emplace_back(std::string("gru.U_") + g, Shape{u, u});
      out.emplace_back(std::string("gru.b_") + g, Shape{u});
    }
    d = u;
  }
  out.emplace_back("dense1.W", Shape{c.dense_units, d});
  out.emplace_back("dense1.b", Shape{c.dense_units});
  out.emplace_back("attention.W", Shape{c.attention_dim, c.dense_units});
  out.emplace_back("attention.b", Shape{c.attention_dim});
  out.emplace_back("attention.u", Shape{c.attention_dim});
  out.emplace_back("output.W", Shape{c.num_classes, c.dense_units});
  out.emplace_back("output.b", Shape{c.num_classes});
  return out;
}

}  // namespace

std::string conv_name(std::size_t block, std::string_view field) {
  return "conv" + std::to_string(block) + "." + std::string(field);
}

bool is_trainable(std::string_view name) {
  return !(name.ends_with(".bn_mean") || name.ends_with(".bn_var") || name.starts_with("meta."));
}

template <typename T>
const Tensor<T>& ModelWeights<T>::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::invalid_argument("weights: missing tensor " + name);
  return it->second;
}

template <typename T>
Tensor<T>& ModelWeights<T>::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::invalid_argument("weights: missing tensor " + name);
  return it->second;
}

template <typename T>
ModelWeights<T> ModelWeights<T>::zeros_like() const {
  ModelWeights out;
  for (const auto& [name, t] : tensors_) out.set(name, Tensor<T>(t.shape()));
  return out;
}

template <typename T>
ModelWeights<T> init_weights(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ModelWeights<T> w;
  const double k2 = static_cast<double>(config.kernel_size * config.kernel_size);
  for (const auto& [name, shape] : expected_shapes(config)) {
    Tensor<T> t(shape);
    if (name.ends_with(".kernel")) {
      t = glorot<T>(rng, shape, k2 * static_cast<double>(shape[2]), k2 * static_cast<double>(shape[3]));
    } else if (name.ends_with(".bn_gamma") || name.ends_with(".bn_var")) {
      t.fill(T(1));
    } else if (name.starts_with("gru.U_")) {
      t = orthogonal<T>(rng, shape[0]);
    } else if (name == "attention.u") {
      t = glorot<T>(rng, shape, static_cast<double>(shape[0]), 1.0);
    } else if (shape.size() == 2) {
      t = glorot<T>(rng, shape, static_cast<double>(shape[1]), static_cast<double>(shape[0]));
    }
    w.set(name, std::move(t));
  }
  return w;
}

template <typename T>
void check_weights(const ModelConfig& config, const ModelWeights<T>& weights) {
  config.validate();
  for (const auto& [name, shape] : expected_shapes(config)) {
    if (!weights.contains(name)) throw std::invalid_argument("weights: missing tensor " + name);
    if (weights.at(name).shape() != shape) {
      throw std::invalid_argument("weights: tensor " + name + " has shape " +
                                  shape_string(weights.at(name).shape()) + ", expected " +
                                  shape_string(shape));
    }
    if (name.ends_with(".bn_var")) {
      for (T v : weights.at(name).values()) {
        if (v < T(0)) throw std::invalid_argument("weights: negative running variance in " + name);
      }
    }
  }
}

template class ModelWeights<float>;
template class ModelWeights<double>;
template ModelWeights<float> init_weights<float>(const ModelConfig&);
template ModelWeights<double> init_weights<double>(const ModelConfig&);
template void check_weights<float>(const ModelConfig&, const ModelWeights<float>&);
template void check_weights<double>(const ModelConfig&, const ModelWeights<double>&);

}  // namespace dusq::nn
