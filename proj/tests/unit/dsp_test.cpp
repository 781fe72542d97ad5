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
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "dusq/audio_io.hpp"
#include "dusq/dsp.hpp"
#include "dusq/error.hpp"
#include "dusq/rng.hpp"

namespace dusq::dsp {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tone(double f_hz, std::size_t n = audio::kWindowSamples, double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * f_hz * i / kSampleRateHz);
  return x;
}

double gain_db(const FilterCoefficients& c, double f) { return 20.0 * std::log10(std::abs(c.response(f))); }

std::size_t nearest_bin(const ScaleBank& bank, double f) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < bank.size(); ++i) {
    if (std::abs(std::log(bank.frequencies_hz[i] / f)) < std::abs(std::log(bank.frequencies_hz[best] / f))) best = i;
  }
  return best;
}

TEST(Bandpass, EdgesSitAtMinusThreeDecibels) {
  const auto c = design_bandpass(kBandLowHz, kBandHighHz, kSampleRateHz);
  EXPECT_EQ(c.sections.size(), 2u);
  EXPECT_NEAR(gain_db(c, 25.0), -3.0103, 0.1);
  EXPECT_NEAR(gain_db(c, 600.0), -3.0103, 0.1);
}

TEST(Bandpass, PassbandAndStopbandShape) {
  const auto c = design_bandpass(kBandLowHz, kBandHighHz, kSampleRateHz);
  const double centre = std::sqrt(25.0 * 600.0);
  EXPECT_NEAR(gain_db(c, centre), 0.0, 0.05);
  EXPECT_LT(gain_db(c, 2.0), -30.0);
  EXPECT_LT(gain_db(c, 1900.0), -20.0);
  // Second order per edge: 40 dB/decade far from the band.
  EXPECT_NEAR(gain_db(c, 2.5) - gain_db(c, 0.25), 40.0, 1.0);
}

TEST(Bandpass, FilteredToneMatchesResponse) {
  const auto c = design_bandpass(kBandLowHz, kBandHighHz, kSampleRateHz);
  for (double f : {40.0, 150.0, 550.0, 900.0}) {
    const auto y = apply_filter(c, tone(f, 40000, 1.0));
    double s = 0.0;
    for (std::size_t i = 20000; i < y.size(); ++i) s += y[i] * y[i];
    const double measured = std::sqrt(2.0 * s / 20000.0);
    EXPECT_NEAR(measured, std::abs(c.response(f)), 2e-3) << f;
  }
}

TEST(Bandpass, RejectsInvalidEdges) {
  EXPECT_THROW(design_bandpass(600.0, 25.0, 4000.0), std::invalid_argument);
  EXPECT_THROW(design_bandpass(25.0, 2500.0, 4000.0), std::invalid_argument);
  EXPECT_THROW(design_bandpass(0.0, 600.0, 4000.0), std::invalid_argument);
}

TEST(Bank, LogSpacedCoversTheBand) {
  const auto bank = ScaleBank::log_spaced();
  ASSERT_EQ(bank.size(), kScalogramBins);
  EXPECT_DOUBLE_EQ(bank.frequencies_hz.front(), 25.0);
  EXPECT_DOUBLE_EQ(bank.frequencies_hz.back(), 600.0);
  const double ratio = bank.frequencies_hz[1] / bank.frequencies_hz[0];
  for (std::size_t i = 1; i < bank.size(); ++i) {
    EXPECT_NEAR(bank.frequencies_hz[i] / bank.frequencies_hz[i - 1], ratio, 1e-12);
  }
  EXPECT_NEAR(bank.scale(0), 6.0 * 4000.0 / (2.0 * kPi * 25.0), 1e-9);
}

TEST(Scalogram, ShapeIsExact) {
  const auto s = FeatureExtractor()(tone(100.0));
  EXPECT_EQ(s.frames(), 250u);
  EXPECT_EQ(s.bins(), 40u);
  EXPECT_EQ(s.values().size(), 10000u);
  EXPECT_THROW(morlet_scalogram(std::vector<double>(14999), ScaleBank::log_spaced()), std::invalid_argument);
}

TEST(Scalogram, ToneArgmaxAtNearestBin) {
  const auto bank = ScaleBank::log_spaced();
  for (double f : {60.0, 100.0, 250.0}) {
    const auto s = morlet_scalogram(tone(f), bank);
    const std::size_t want = nearest_bin(bank, f);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < s.frames(); ++t) {
      std::size_t arg = 0;
      for (std::size_t b = 1; b < s.bins(); ++b) {
        if (s.at(t, b) > s.at(t, arg)) arg = b;
      }
      hits += arg == want;
    }
    EXPECT_GE(static_cast<double>(hits) / s.frames(), 0.99) << f;
  }
}

// Direct time-domain sum of the sampled Morlet wavelet.
double direct_cwt_magnitude(std::span<const double> x, double s, double omega0, std::size_t b) {
  std::complex<double> acc = 0.0;
  const double reach = 12.0 * s;
  const double norm = std::pow(kPi, -0.25) / std::sqrt(s);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double t = (static_cast<double>(b) - static_cast<double>(n)) / s;
    if (std::abs(t * s) > reach) continue;
    acc += x[n] * norm * std::exp(std::complex<double>(-0.5 * t * t, omega0 * t));
  }
  return std::abs(acc);
}

TEST(Scalogram, CwtMatchesDirectConvolution) {
  Rng rng(21);
  std::vector<double> x(audio::kWindowSamples);
  for (auto& v : x) v = rng.uniform(-1, 1);
  const auto bank = ScaleBank::log_spaced();
  const auto cwt = morlet_cwt(x, bank);
  for (std::size_t bin : {0u, 13u, 39u}) {
    double peak = 0.0;
    for (const auto& c : cwt[bin]) peak = std::max(peak, std::abs(c));
    for (std::size_t b : {0u, 777u, 7500u, 14999u}) {
      EXPECT_NEAR(std::abs(cwt[bin][b]), direct_cwt_magnitude(x, bank.scale(bin), bank.omega0, b), 1e-9 * peak)
          << bin << " " << b;
    }
  }
}

TEST(Scalogram, PoolingIsMeanOfMagnitudes) {
  Rng rng(4);
  std::vector<double> x(audio::kWindowSamples);
  for (auto& v : x) v = rng.uniform(-1, 1);
  const auto bank = ScaleBank::log_spaced();
  const auto cwt = morlet_cwt(x, bank);
  const auto s = morlet_scalogram(x, bank);
  for (std::size_t t : {0u, 100u, 249u}) {
    for (std::size_t bin : {0u, 20u, 39u}) {
      double m = 0.0;
      for (std::size_t k = 0; k < kPoolFactor; ++k) m += std::abs(cwt[bin][t * kPoolFactor + k]);
      EXPECT_NEAR(s.at(t, bin), m / kPoolFactor, 1e-12);
    }
  }
}

TEST(Normalize, MapsToUnitRange) {
  Scalogram s(3, 2);
  const double vals[] = {2.0, 4.0, 6.0, 3.0, 5.0, 10.0};
  for (std::size_t i = 0; i < 6; ++i) s.values()[i] = vals[i];
  const auto n = normalize_minmax(s);
  EXPECT_DOUBLE_EQ(n.values()[0], 0.0);
  EXPECT_DOUBLE_EQ(n.values()[5], 1.0);
  EXPECT_DOUBLE_EQ(n.values()[1], 0.25);
}

TEST(Normalize, ConstantInputGivesZeros) {
  const auto n = normalize_minmax(Scalogram(4, 4, 3.5));
  for (double v : n.values()) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, NonFiniteIsNumericError) {
  Scalogram s(2, 2, 1.0);
  s.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(normalize_minmax(s), NumericError);
  s.at(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(normalize_minmax(s), NumericError);
}

TEST(Features, SilentWindowIsAllZero) {
  const auto s = FeatureExtractor()(std::vector<double>(audio::kWindowSamples, 0.0));
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
}

TEST(Features, ValuesInUnitRange) {
  Rng rng(8);
  std::vector<double> x(audio::kWindowSamples);
  for (auto& v : x) v = rng.normal() * 0.1;
  const auto s = FeatureExtractor()(x);
  double lo = 1.0, hi = 0.0;
  for (double v : s.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
}

TEST(ScalogramIo, RoundTripRoundsToFloat) {
  Scalogram s(3, 2);
  for (std::size_t i = 0; i < 6; ++i) s.values()[i] = 0.1 * static_cast<double>(i) + 1e-12;
  const auto back = decode_scalogram(encode_scalogram(s));
  ASSERT_EQ(back.frames(), 3u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(s.values()[i])));
  }
  std::stringstream ss;
  write_scalogram(ss, s);
  write_scalogram(ss, s);
  Scalogram r;
  EXPECT_TRUE(read_scalogram(ss, r));
  EXPECT_TRUE(read_scalogram(ss, r));
  EXPECT_FALSE(read_scalogram(ss, r));
  const auto bytes = encode_scalogram(s);
  std::stringstream bad(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size() - 3));
  EXPECT_THROW(read_scalogram(bad, r), DataError);
}

}  // namespace
}  // namespace dusq::dsp
