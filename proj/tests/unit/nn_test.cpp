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

#include <gtest/gtest.h>

#include <cmath>

#include "dusq/error.hpp"
#include "dusq/nn/layers.hpp"
#include "dusq/nn/model.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/nn/weights_io.hpp"
#include "dusq/rng.hpp"
#include "oracles.hpp"

namespace dusq::nn {
namespace {

using testing::Mat;
using testing::Vec;

Tensor<double> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// --- Softmax -----------------------------------------------------------------

TEST(Softmax, ExtremeLogitsStayValid) {
  const Tensor<double> logits({3, 5}, {1e4, -1e4, 0, 5, 1e4,  //
                                       -1e4, -1e4, -1e4, -1e4, -1e4,  //
                                       0, 0, 0, 0, 1e4});
  const auto p = softmax_rows(logits);
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double v = p[r * 5 + c];
      ASSERT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[5], 0.2, 1e-12);
  EXPECT_NEAR(p[14], 1.0, 1e-12);
}

TEST(Softmax, ShiftInvariant) {
  Rng rng(2);
  const auto logits = random_tensor(rng, {4, 5}, -3, 3);
  auto shifted = logits;
  for (auto& v : shifted.values()) v += 123.0;
  const auto a = softmax_rows(logits);
  const auto b = softmax_rows(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(PredictClass, ArgmaxWithLowestIndexTies) {
  const std::vector<double> p = {0.1, 0.3, 0.3, 0.2, 0.1};
  EXPECT_EQ(predict_class(std::span<const double>(p)), QualityClass::kPoor);
  const std::vector<float> q = {0.2f, 0.2f, 0.2f, 0.2f, 0.2f};
  EXPECT_EQ(predict_class(std::span<const float>(q)), QualityClass::kGood);
}

TEST(PredictClass, InvariantToLogitShift) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> logits(5);
    for (auto& v : logits) v = rng.uniform(-10, 10);
    auto shifted = logits;
    const double c = rng.uniform(-1000, 1000);
    for (auto& v : shifted) v += c;
    EXPECT_EQ(predict_class(std::span<const double>(logits)), predict_class(std::span<const double>(shifted)));
  }
}

// --- GRU -----------------------------------------------------------------------

struct GruCase {
  testing::GruRef ref;
  std::array<Tensor<double>, 9> t;
  GruParams<double> params() const {
    return {&t[0], &t[1], &t[2], &t[3], &t[4], &t[5], &t[6], &t[7], &t[8]};
  }
};

GruCase random_gru(Rng& rng, std::size_t d, std::size_t u, double scale) {
  GruCase c;
  auto& r = c.ref;
  r.w_z = testing::random_matrix(rng, u, d, scale);
  r.u_z = testing::random_matrix(rng, u, u, scale);
  r.b_z = testing::random_vector(rng, u, scale);
  r.w_r = testing::random_matrix(rng, u, d, scale);
  r.u_r = testing::random_matrix(rng, u, u, scale);
  r.b_r = testing::random_vector(rng, u, scale);
  r.w_h = testing::random_matrix(rng, u, d, scale);
  r.u_h = testing::random_matrix(rng, u, u, scale);
  r.b_h = testing::random_vector(rng, u, scale);
  c.t = {testing::to_tensor(r.w_z), testing::to_tensor(r.u_z), testing::to_tensor(r.b_z),
         testing::to_tensor(r.w_r), testing::to_tensor(r.u_r), testing::to_tensor(r.b_r),
         testing::to_tensor(r.w_h), testing::to_tensor(r.u_h), testing::to_tensor(r.b_h)};
  return c;
}

TEST(Gru, MatchesScalarReference) {
  Rng rng(100);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + rng.below(3), steps = 1 + rng.below(7), d = 1 + rng.below(5), u = 1 + rng.below(5);
    const auto c = random_gru(rng, d, u, 1.5);
    const auto x = random_tensor(rng, {b, steps, d}, -2, 2);
    const auto h = gru_forward(x, c.params(), static_cast<GruCache<double>*>(nullptr));
    for (std::size_t i = 0; i < b; ++i) {
      Mat xs(steps, Vec(d));
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t k = 0; k < d; ++k) xs[t][k] = x[(i * steps + t) * d + k];
      const auto ref = testing::scalar_gru(xs, c.ref);
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t k = 0; k < u; ++k) worst = std::max(worst, std::abs(h[(i * steps + t) * u + k] - ref[t][k]));
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Gru, CandidateAndStateBounded) {
  Rng rng(5);
  const auto c = random_gru(rng, 4, 6, 40.0);
  const auto x = random_tensor(rng, {2, 20, 4}, -50, 50);
  GruCache<double> cache;
  const auto h = gru_forward(x, c.params(), &cache);
  for (double v : cache.cand.values()) EXPECT_LE(std::abs(v), 1.0);
  for (double v : h.values()) EXPECT_LE(std::abs(v), 1.0);
  for (double v : cache.z.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

// --- Attention -------------------------------------------------------------------

TEST(Attention, MatchesScalarReference) {
  Rng rng(200);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + rng.below(3), steps = 1 + rng.below(8), d = 1 + rng.below(6), a = 1 + rng.below(5);
    testing::AttentionRef ref{testing::random_matrix(rng, a, d, 1.0), testing::random_vector(rng, a, 1.0),
                              testing::random_vector(rng, a, 2.0)};
    const auto w = testing::to_tensor(ref.w), bb = testing::to_tensor(ref.b), u = testing::to_tensor(ref.u);
    const auto h = random_tensor(rng, {b, steps, d}, -2, 2);
    const auto out = attention_forward(h, AttentionParams<double>{&w, &bb, &u},
                                       static_cast<AttentionCache<double>*>(nullptr));
    for (std::size_t i = 0; i < b; ++i) {
      Mat hs(steps, Vec(d));
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t k = 0; k < d; ++k) hs[t][k] = h[(i * steps + t) * d + k];
      const auto r = testing::scalar_attention(hs, ref);
      for (std::size_t k = 0; k < d; ++k) worst = std::max(worst, std::abs(out.context[i * d + k] - r.context[k]));
      for (std::size_t t = 0; t < steps; ++t) worst = std::max(worst, std::abs(out.alphas[i * steps + t] - r.alphas[t]));
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Attention, WeightsFormADistribution) {
  Rng rng(7);
  const Tensor<double> w = random_tensor(rng, {3, 4}), b = random_tensor(rng, {3}), u = random_tensor(rng, {3}, -5, 5);
  const auto h = random_tensor(rng, {4, 9, 4}, -3, 3);
  const auto out = attention_forward(h, AttentionParams<double>{&w, &b, &u}, static_cast<AttentionCache<double>*>(nullptr));
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < 9; ++t) {
      EXPECT_GE(out.alphas[i * 9 + t], 0.0);
      s += out.alphas[i * 9 + t];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Attention, DominantScoreTakesAllWeight) {
  // One step aligned with a large relevance vector.
  const Tensor<double> w({1, 1}, {1.0}), b({1}, {0.0}), u({1}, {1e3});
  Tensor<double> h({1, 5, 1}, {-1.0, -1.0, 5.0, -1.0, -1.0});
  const auto out = attention_forward(h, AttentionParams<double>{&w, &b, &u}, static_cast<AttentionCache<double>*>(nullptr));
  EXPECT_GE(out.alphas[2], 1.0 - 1e-9);
  EXPECT_NEAR(out.context[0], 5.0, 1e-6);
}

// --- Conv / dense ----------------------------------------------------------------

TEST(Conv, MatchesNaiveSamePadding) {
  Rng rng(31);
  const std::size_t b = 2, t = 5, f = 4, cin = 2, cout = 3, k = 3;
  const auto x = random_tensor(rng, {b, t, f, cin});
  const auto kernel = random_tensor(rng, {k, k, cin, cout});
  const auto bias = random_tensor(rng, {cout});
  const auto y = conv2d_same(x, kernel, bias);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < f; ++j)
        for (std::size_t o = 0; o < cout; ++o) {
          double s = bias[o];
          for (std::size_t di = 0; di < k; ++di)
            for (std::size_t dj = 0; dj < k; ++dj) {
              const auto si = static_cast<std::ptrdiff_t>(i + di) - 1, sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
              if (si < 0 || sj < 0 || si >= static_cast<std::ptrdiff_t>(t) || sj >= static_cast<std::ptrdiff_t>(f)) continue;
              for (std::size_t c = 0; c < cin; ++c)
                s += x[((n * t + si) * f + sj) * cin + c] * kernel[((di * k + dj) * cin + c) * cout + o];
            }
          EXPECT_NEAR(y[((n * t + i) * f + j) * cout + o], s, 1e-12);
        }
}

TEST(Dense, MatchesMatrixProduct) {
  Rng rng(12);
  const auto x = random_tensor(rng, {3, 4});
  const auto w = random_tensor(rng, {2, 4});
  const auto b = random_tensor(rng, {2});
  const auto y = dense_forward(x, w, b, true);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t o = 0; o < 2; ++o) {
      double s = b[o];
      for (std::size_t k = 0; k < 4; ++k) s += x[i * 4 + k] * w[o * 4 + k];
      EXPECT_NEAR(y[i * 2 + o], std::max(0.0, s), 1e-12);
    }
}

// --- Model ---------------------------------------------------------------------

TEST(Model, FullConfigShapes) {
  ModelConfig c;
  c.validate();
  EXPECT_EQ(c.sequence_length(), 125u);
  EXPECT_EQ(c.step_features(), 640u);
  c.arch = Architecture::kGruAttention;
  EXPECT_EQ(c.sequence_length(), 250u);
  EXPECT_EQ(c.step_features(), 40u);
  ModelConfig bad;
  bad.pools = {{3, 2}, {1, 2}, {1, 2}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Model, ArchitectureTokens) {
  for (auto a : {Architecture::kCnnGruAttention, Architecture::kCnnAttention, Architecture::kGruAttention}) {
    EXPECT_EQ(parse_architecture(to_token(a)), a);
  }
  EXPECT_EQ(to_token(Architecture::kCnnGruAttention), "cga");
  EXPECT_EQ(parse_architecture("rnn"), std::nullopt);
}

class GradientCheck : public ::testing::TestWithParam<Architecture> {};

TEST_P(GradientCheck, EveryTensorAgreesWithFiniteDifferences) {
  const auto report = testing::check_gradients(testing::tiny_config(GetParam()), 3, 4);
  ASSERT_FALSE(report.tensors.empty());
  for (const auto& t : report.tensors) {
    EXPECT_LT(t.max_relative_error, 1e-4) << t.name;
    EXPECT_GT(t.max_abs_analytic, 0.0) << t.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Architectures, GradientCheck,
                         ::testing::Values(Architecture::kCnnGruAttention, Architecture::kCnnAttention,
                                           Architecture::kGruAttention),
                         [](const auto& info) { return std::string(to_token(info.param)); });

Tensor<double> tiny_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return random_tensor(rng, {n, 16, 8}, 0, 1);
}

TEST(Model, InferenceIsDeterministicAndRowsSumToOne) {
  const auto cfg = testing::tiny_config();
  const auto w = init_weights<double>(cfg);
  const auto x = tiny_batch(6, 1);
  const auto a = model_forward(x, cfg, w, {});
  const auto b = model_forward(x, cfg, w, {});
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) s += a[i * 5 + c];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Model, InferenceDoesNotMixBatchRows) {
  const auto cfg = testing::tiny_config();
  const auto w = init_weights<double>(cfg);
  const auto x = tiny_batch(3, 2);
  const auto all = model_forward(x, cfg, w, {});
  Tensor<double> one({1, 16, 8}, std::vector<double>(x.values().begin() + 128, x.values().begin() + 256));
  const auto single = model_forward(one, cfg, w, {});
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(single[c], all[5 + c], 1e-14);
}

TEST(Model, CrossEntropyMatchesProbabilities) {
  const auto cfg = testing::tiny_config();
  const auto w = init_weights<double>(cfg);
  const auto x = tiny_batch(5, 3);
  ForwardCache<double> cache;
  model_forward(x, cfg, w, {}, &cache);
  const std::vector<QualityClass> y(kAllClasses.begin(), kAllClasses.end());
  double ref = 0.0;
  for (std::size_t i = 0; i < 5; ++i) ref -= std::log(cache.probs[i * 5 + i]);
  EXPECT_NEAR(cross_entropy(cache.logits, y), ref / 5.0, 1e-12);
}

TEST(Model, RejectsWrongInputShape) {
  const auto cfg = testing::tiny_config();
  const auto w = init_weights<double>(cfg);
  EXPECT_THROW(model_forward(Tensor<double>({2, 16, 7}), cfg, w, {}), std::invalid_argument);
}

TEST(Weights, InitIsSeededAndComplete) {
  auto cfg = testing::tiny_config();
  const auto a = init_weights<double>(cfg);
  EXPECT_EQ(a, init_weights<double>(cfg));
  cfg.seed += 1;
  EXPECT_NE(a, init_weights<double>(cfg));
  EXPECT_NO_THROW(check_weights(cfg, a));
  EXPECT_TRUE(a.contains("gru.U_z"));
  EXPECT_FALSE(is_trainable("conv0.bn_mean"));
  EXPECT_TRUE(is_trainable("conv0.bn_gamma"));
}

TEST(Weights, CheckNamesTheBadTensor) {
  const auto cfg = testing::tiny_config();
  auto w = init_weights<double>(cfg);
  w.tensors().erase("attention.u");
  try {
    check_weights(cfg, w);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("attention.u"), std::string::npos);
  }
}

TEST(WeightsIo, RoundTripPreservesConfigAndFloatValues) {
  for (auto arch : {Architecture::kCnnGruAttention, Architecture::kCnnAttention, Architecture::kGruAttention}) {
    const auto cfg = testing::tiny_config(arch);
    const auto w = init_weights<double>(cfg);
    const auto loaded = load_weights(save_weights(cfg, w));
    auto expect_cfg = cfg;
    expect_cfg.seed = loaded.config.seed;
    if (!cfg.uses_conv()) {
      expect_cfg.conv_filters = loaded.config.conv_filters;
      expect_cfg.pools = loaded.config.pools;
    }
    if (!cfg.uses_gru()) expect_cfg.gru_units = loaded.config.gru_units;
    EXPECT_EQ(loaded.config, expect_cfg) << to_token(arch);
    for (const auto& [name, t] : w.tensors()) {
      const auto& back = loaded.weights.at(name);
      ASSERT_EQ(back.shape(), t.shape());
      for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(t[i])));
    }
  }
}

TEST(WeightsIo, SavingAt32BitBarelyMovesProbabilities) {
  const auto cfg = testing::tiny_config();
  const auto w = init_weights<double>(cfg);
  const auto loaded = load_weights(save_weights(cfg, w));
  const auto x = tiny_batch(8, 4);
  const auto a = model_forward(x, cfg, w, {});
  const auto b = model_forward(x, loaded.config, loaded.weights, {});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-5);
}

TEST(WeightsIo, CorruptFilesAreDataErrors) {
  const auto cfg = testing::tiny_config();
  const auto bytes = save_weights(cfg, init_weights<double>(cfg));
  auto bad = bytes;
  bad[0] = std::byte{'X'};
  EXPECT_THROW(load_weights(bad), DataError);
  EXPECT_THROW(load_weights(std::span<const std::byte>(bytes).first(bytes.size() - 1)), DataError);
  auto longer = bytes;
  longer.push_back(std::byte{0});
  EXPECT_THROW(load_weights(longer), DataError);
  bad = bytes;
  bad[4] = std::byte{99};  // version
  EXPECT_THROW(load_weights(bad), DataError);
  testing::TempDir dir;
  EXPECT_THROW(read_weights_file(dir / "none.dqcw"), DataError);
}

}  // namespace
}  // namespace dusq::nn
