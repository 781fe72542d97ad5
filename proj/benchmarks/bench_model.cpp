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

#include <vector>

#include <benchmark/benchmark.h>

#include "dusq/nn/model.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/rng.hpp"

namespace {

using dusq::nn::Architecture;

template <typename T>
dusq::nn::Tensor<T> random_input(const dusq::nn::ModelConfig& cfg, std::size_t batch) {
  dusq::Rng rng(3);
  dusq::nn::Tensor<T> x({batch, cfg.input_time, cfg.input_freq});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<T>(rng.uniform());
  return x;
}

template <typename T>
void BM_Infer(benchmark::State& state) {
  dusq::nn::ModelConfig cfg;
  cfg.arch = static_cast<Architecture>(state.range(0));
  const auto w = dusq::nn::init_weights<T>(cfg);
  const auto x = random_input<T>(cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dusq::nn::model_forward(x, cfg, w, {}));
}
BENCHMARK(BM_Infer<double>)
    ->Arg(static_cast<int>(Architecture::kCnnGruAttention))
    ->Arg(static_cast<int>(Architecture::kGruAttention))
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Infer<float>)->Arg(static_cast<int>(Architecture::kCnnGruAttention))->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  dusq::nn::ModelConfig cfg;
  const auto w = dusq::nn::init_weights<double>(cfg);
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const auto x = random_input<double>(cfg, batch);
  std::vector<dusq::QualityClass> labels;
  for (std::size_t i = 0; i < batch; ++i) labels.push_back(dusq::class_from_index(i % dusq::kNumClasses));
  dusq::Rng rng(9);
  for (auto _ : state) {
    dusq::nn::ForwardCache<double> cache;
    dusq::nn::ForwardOptions opt{dusq::nn::ForwardMode::kTrain, &rng, nullptr};
    dusq::nn::model_forward(x, cfg, w, opt, &cache);
    benchmark::DoNotOptimize(dusq::nn::model_backward(cache, labels, cfg, w));
  }
}
BENCHMARK(BM_TrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
