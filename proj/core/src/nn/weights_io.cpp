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

#include "dusq/nn/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "dusq/error.hpp"

namespace dusq::nn {
namespace {

constexpr char kMagic[4] = {'D', 'Q', 'C', 'W'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::byte> take() { return std::move(out_); }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  std::span<const std::byte> take(std::size_t n, const char* field) {
    if (in_.size() - pos_ < n) {
      throw DataError(std::string("weights: truncated ") + field + " at byte " +
                      std::to_string(pos_));
    }
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U le(const char* field) {
    auto s = take(sizeof(U), field);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(s[i])) << (8 * i);
    }
    return static_cast<U>(v);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

Tensor<double> scalar(double v) { return Tensor<double>({1}, std::vector<double>{v}); }

std::size_t as_size(double v, const std::string& what) {
  if (!(v >= 0) || v != std::floor(v) || v > 1e9) {
    throw DataError("weights: invalid value in " + what);
  }
  return static_cast<std::size_t>(v);
}

const Tensor<double>& need(const ModelWeights<double>& w, const std::string& name, std::size_t rank) {
  if (!w.contains(name)) throw DataError("weights: missing tensor " + name);
  const auto& t = w.at(name);
  if (t.rank() != rank) throw DataError("weights: tensor " + name + " has wrong rank");
  return t;
}

ModelConfig config_from_tensors(const ModelWeights<double>& w) {
  ModelConfig c;
  const auto arch_code = as_size(need(w, "meta.arch", 1)[0], "meta.arch");
  if (arch_code > 2) throw DataError("weights: unknown architecture code in meta.arch");
  c.arch = static_cast<Architecture>(arch_code);
  const auto& input = need(w, "meta.input", 1);
  if (input.size() != 2) throw DataError("weights: meta.input must hold 2 values");
  c.input_time = as_size(input[0], "meta.input");
  c.input_freq = as_size(input[1], "meta.input");
  c.dropout = need(w, "meta.dropout", 1)[0];

  if (c.uses_conv()) {
    c.conv_filters.clear();
    c.pools.clear();
    const auto& pools = need(w, "meta.pools", 2);
    if (pools.dim(1) != 2) throw DataError("weights: meta.pools must be [n, 2]");
    for (std::size_t i = 0; i < pools.dim(0); ++i) {
      c.pools.push_back({as_size(pools[2 * i], "meta.pools"), as_size(pools[2 * i + 1], "meta.pools")});
      const auto& k = need(w, conv_name(i, "kernel"), 4);
      c.kernel_size = k.dim(0);
      c.conv_filters.push_back(k.dim(3));
    }
  }
  if (c.uses_gru()) c.gru_units = need(w, "gru.U_z", 2).dim(0);
  c.dense_units = need(w, "dense1.W", 2).dim(0);
  c.attention_dim = need(w, "attention.W", 2).dim(0);
  c.num_classes = need(w, "output.W", 2).dim(0);
  return c;
}

}  // namespace

std::vector<std::byte> save_weights(const ModelConfig& config, const ModelWeights<double>& weights) {
  check_weights(config, weights);
  ModelWeights<double> all = weights;
  all.set("meta.arch", scalar(static_cast<double>(config.arch)));
  all.set("meta.input", Tensor<double>({2}, std::vector<double>{
                                                static_cast<double>(config.input_time),
                                                static_cast<double>(config.input_freq)}));
  all.set("meta.dropout", scalar(static_cast<double>(static_cast<float>(config.dropout))));
  if (config.uses_conv()) {
    Tensor<double> pools({config.pools.size(), 2});
    for (std::size_t i = 0; i < config.pools.size(); ++i) {
      pools[2 * i] = static_cast<double>(config.pools[i].time);
      pools[2 * i + 1] = static_cast<double>(config.pools[i].freq);
    }
    all.set("meta.pools", std::move(pools));
  }

  Writer w;
  w.bytes(kMagic, 4);
  w.le<std::uint16_t>(kWeightsFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(all.tensors().size()));
  for (const auto& [name, t] : all.tensors()) {
    if (name.size() > 0xffff) throw std::invalid_argument("weights: tensor name too long");
    w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.le<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

LoadedModel load_weights(std::span<const std::byte> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw DataError("weights: bad magic (expected DQCW)");
  const auto version = r.le<std::uint16_t>("version");
  if (version != kWeightsFormatVersion) {
    throw DataError("weights: unsupported version " + std::to_string(version));
  }
  const auto count = r.le<std::uint32_t>("tensor count");

  ModelWeights<double> w;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint16_t>("name length");
    auto raw = r.take(len, "name");
    std::string name(reinterpret_cast<const char*>(raw.data()), raw.size());
    if (name.empty() || w.contains(name)) {
      throw DataError("weights: empty or duplicate tensor name in shape table");
    }
    const auto rank = r.le<std::uint8_t>("rank");
    if (rank > 4) throw DataError("weights: rank above 4 for tensor " + name);
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.le<std::uint32_t>("dims");
      n *= d;
      if (n > bytes.size()) throw DataError("weights: shape table of " + name + " exceeds file size");
    }
    auto payload = r.take(4 * n, "payload");
    std::vector<double> data(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::uint32_t bits = 0;
      for (std::size_t b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(payload[4 * j + b])) << (8 * b);
      }
      data[j] = static_cast<double>(std::bit_cast<float>(bits));
    }
    w.set(name, Tensor<double>(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw DataError("weights: trailing bytes after tensor table");

  LoadedModel out;
  out.config = config_from_tensors(w);
  for (auto it = w.tensors().begin(); it != w.tensors().end();) {
    it = it->first.starts_with("meta.") ? w.tensors().erase(it) : std::next(it);
  }
  try {
    check_weights(out.config, w);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("weights: shape table inconsistent: ") + e.what());
  }
  out.weights = std::move(w);
  return out;
}

void write_weights_file(const std::filesystem::path& path, const ModelConfig& config,
                        const ModelWeights<double>& weights) {
  const auto bytes = save_weights(config, weights);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("weights: cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("weights: write failed for " + path.string());
}

LoadedModel read_weights_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("weights: cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return load_weights(std::as_bytes(std::span<const char>(raw)));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dusq::nn
