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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "dusq/audio_io.hpp"
#include "dusq/dsp.hpp"
#include "dusq/error.hpp"

namespace dusq::dsp {
namespace {

// Linear convolution room: the widest wavelet (25 Hz, s ~ 153 samples) is
// below 1e-17 of its peak 1384 samples (~9 s) from its centre.
constexpr std::size_t kFftSize = 16384;

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer make_buffer() {
  return FftwBuffer(fftw_alloc_complex(kFftSize));
}

// Plans are created once (planner calls are not thread-safe) and executed via
// the new-array interface on per-call aligned buffers, which is thread-safe.
struct Plans {
  fftw_plan forward;
  fftw_plan backward;

  Plans() {
    FftwBuffer a = make_buffer();
    FftwBuffer b = make_buffer();
    forward = fftw_plan_dft_1d(static_cast<int>(kFftSize), a.get(), b.get(), FFTW_FORWARD,
                               FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(static_cast<int>(kFftSize), a.get(), b.get(), FFTW_BACKWARD,
                                FFTW_ESTIMATE);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

const Plans& plans() {
  static const Plans p;
  return p;
}

template <typename Visit>
void for_each_scale(std::span<const double> window, const ScaleBank& bank, Visit&& visit) {
  if (window.size() != audio::kWindowSamples) {
    throw std::invalid_argument("morlet_scalogram: window must hold exactly 15000 samples");
  }
  const Plans& p = plans();
  FftwBuffer time = make_buffer();
  FftwBuffer spectrum = make_buffer();
  FftwBuffer product = make_buffer();
  FftwBuffer coeffs = make_buffer();

  for (std::size_t n = 0; n < kFftSize; ++n) {
    time[n][0] = n < window.size() ? window[n] : 0.0;
    time[n][1] = 0.0;
  }
  fftw_execute_dft(p.forward, time.get(), spectrum.get());

  const double pi = std::numbers::pi;
  const double norm = std::pow(pi, -0.25) * std::sqrt(2.0 * pi);
  const double inv_n = 1.0 / static_cast<double>(kFftSize);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const double s = bank.scale(i);
    const double gain = std::sqrt(s) * norm * inv_n;
    for (std::size_t k = 0; k < kFftSize; ++k) {
      const double signed_k = k <= kFftSize / 2 ? static_cast<double>(k)
                                                : static_cast<double>(k) - kFftSize;
      const double omega = 2.0 * pi * signed_k / static_cast<double>(kFftSize);
      const double d = s * omega - bank.omega0;
      const double expo = -0.5 * d * d;
      const double w = expo < -700.0 ? 0.0 : gain * std::exp(expo);
      product[k][0] = spectrum[k][0] * w;
      product[k][1] = spectrum[k][1] * w;
    }
    fftw_execute_dft(p.backward, product.get(), coeffs.get());
    visit(i, coeffs.get());
  }
}

}  // namespace

ScaleBank ScaleBank::log_spaced(double f_lo_hz, double f_hi_hz, std::size_t count,
                                double omega0, double fs_hz) {
  if (count < 2 || !(f_lo_hz > 0.0 && f_hi_hz > f_lo_hz)) {
    throw std::invalid_argument("ScaleBank: need count >= 2 and 0 < f_lo < f_hi");
  }
  ScaleBank bank;
  bank.omega0 = omega0;
  bank.fs_hz = fs_hz;
  bank.frequencies_hz.resize(count);
  const double ratio = std::log(f_hi_hz / f_lo_hz) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    bank.frequencies_hz[i] = f_lo_hz * std::exp(ratio * static_cast<double>(i));
  }
  bank.frequencies_hz.front() = f_lo_hz;
  bank.frequencies_hz.back() = f_hi_hz;
  return bank;
}

double ScaleBank::scale(std::size_t i) const {
  return omega0 * fs_hz / (2.0 * std::numbers::pi * frequencies_hz.at(i));
}

std::vector<std::vector<std::complex<double>>> morlet_cwt(std::span<const double> window,
                                                          const ScaleBank& bank) {
  std::vector<std::vector<std::complex<double>>> out(bank.size());
  for_each_scale(window, bank, [&](std::size_t i, const fftw_complex* c) {
    out[i].resize(window.size());
    for (std::size_t n = 0; n < window.size(); ++n) out[i][n] = {c[n][0], c[n][1]};
  });
  return out;
}

Scalogram morlet_scalogram(std::span<const double> window, const ScaleBank& bank) {
  Scalogram result(kScalogramFrames, bank.size());
  for_each_scale(window, bank, [&](std::size_t i, const fftw_complex* c) {
    for (std::size_t f = 0; f < kScalogramFrames; ++f) {
      double acc = 0.0;
      for (std::size_t j = 0; j < kPoolFactor; ++j) {
        const std::size_t n = f * kPoolFactor + j;
        acc += std::hypot(c[n][0], c[n][1]);
      }
      result.at(f, i) = acc / static_cast<double>(kPoolFactor);
    }
  });
  return result;
}

Scalogram normalize_minmax(const Scalogram& s) {
  const auto v = s.values();
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("normalize_minmax: non-finite scalogram entry");
  }
  Scalogram out(s.frames(), s.bins());
  if (v.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range == 0.0) return out;
  auto o = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) o[i] = (v[i] - lo) / range;
  return out;
}

FeatureExtractor::FeatureExtractor()
    : filter_(design_bandpass(kBandLowHz, kBandHighHz, kSampleRateHz)),
      bank_(ScaleBank::log_spaced()) {}

Scalogram FeatureExtractor::operator()(std::span<const double> window) const {
  const auto filtered = apply_filter(filter_, window);
  return normalize_minmax(morlet_scalogram(filtered, bank_));
}

}  // namespace dusq::dsp
