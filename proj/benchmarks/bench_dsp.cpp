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

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "dusq/audio_io.hpp"
#include "dusq/dsp.hpp"
#include "dusq/rng.hpp"

namespace {

std::vector<double> noisy_window(std::size_t n) {
  dusq::Rng rng(5);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 0.3 * std::sin(0.15 * i) + 0.1 * (rng.uniform() - 0.5);
  return x;
}

void BM_Bandpass(benchmark::State& state) {
  const auto c = dusq::dsp::design_bandpass(dusq::dsp::kBandLowHz, dusq::dsp::kBandHighHz, dusq::dsp::kSampleRateHz);
  const auto x = noisy_window(dusq::audio::kWindowSamples);
  for (auto _ : state) benchmark::DoNotOptimize(dusq::dsp::apply_filter(c, x));
}
BENCHMARK(BM_Bandpass);

void BM_FeatureWindow(benchmark::State& state) {
  const dusq::dsp::FeatureExtractor fx;
  const auto x = noisy_window(dusq::audio::kWindowSamples);
  for (auto _ : state) benchmark::DoNotOptimize(fx(x));
}
BENCHMARK(BM_FeatureWindow)->Unit(benchmark::kMillisecond);

// One second of acquisition-rate audio down to 4 kHz.
void BM_ResampleSecond(benchmark::State& state) {
  const auto x = noisy_window(dusq::audio::kAcquisitionRateHz);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dusq::audio::resample_to_4khz({"b", x, dusq::audio::kAcquisitionRateHz}));
  }
}
BENCHMARK(BM_ResampleSecond)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
