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
#include <numbers>
#include <stdexcept>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"

namespace dusq::audio {
namespace {

double kaiser_beta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0) {
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  }
  return 0.0;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

RationalResampler::RationalResampler(int up, int down, const Design& design)
    : up_(up), down_(down) {
  if (up <= 0 || down <= 0) throw std::invalid_argument("resampler: up/down must be positive");
  if (!(design.passband_edge_hz > 0.0 && design.stopband_edge_hz > design.passband_edge_hz &&
        design.input_rate_hz > 0.0)) {
    throw std::invalid_argument("resampler: invalid band edges");
  }
  const double fs = design.input_rate_hz;
  const double cutoff = 0.5 * (design.passband_edge_hz + design.stopband_edge_hz) / fs;
  const double transition = (design.stopband_edge_hz - design.passband_edge_hz) / fs;
  const double atten = design.stopband_attenuation_db;
  const double beta = kaiser_beta(atten);
  const double taps = (atten - 7.95) / (14.357 * transition);
  half_width_ = static_cast<std::size_t>(std::ceil(taps / 2.0));
  if (half_width_ < 1) half_width_ = 1;

  const std::size_t width = taps_per_phase();
  const double h = static_cast<double>(half_width_);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  table_.resize(static_cast<std::size_t>(up_) * width);
  for (int p = 0; p < up_; ++p) {
    double* row = &table_[static_cast<std::size_t>(p) * width];
    double sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      const double tau = h - 1.0 - static_cast<double>(j) + static_cast<double>(p) / up_;
      const double x = tau / h;
      const double w = std::abs(x) <= 1.0
                           ? std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / i0_beta
                           : 0.0;
      row[j] = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * w;
      sum += row[j];
    }
    for (std::size_t j = 0; j < width; ++j) row[j] /= sum;
  }
}

double RationalResampler::output_sample(std::uint64_t m) const {
  const std::uint64_t pos = m * static_cast<std::uint64_t>(down_);
  const std::uint64_t q = pos / static_cast<std::uint64_t>(up_);
  const std::size_t p = static_cast<std::size_t>(pos % static_cast<std::uint64_t>(up_));
  const std::size_t width = taps_per_phase();
  const double* row = &table_[p * width];
  // Tap j reads input index q - H + 1 + j.
  const auto first = static_cast<std::int64_t>(q) - static_cast<std::int64_t>(half_width_) + 1;
  const auto start = static_cast<std::int64_t>(buffer_start_);
  const auto end = static_cast<std::int64_t>(consumed_);
  double acc = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    const std::int64_t n = first + static_cast<std::int64_t>(j);
    if (n < 0 || n >= end) continue;
    acc += row[j] * buffer_[static_cast<std::size_t>(n - start)];
  }
  return acc;
}

void RationalResampler::emit_ready(std::vector<double>& out, std::uint64_t limit) {
  while (next_output_ < limit) {
    out.push_back(output_sample(next_output_));
    ++next_output_;
  }
}

void RationalResampler::trim() {
  const std::uint64_t q = next_output_ * static_cast<std::uint64_t>(down_) /
                          static_cast<std::uint64_t>(up_);
  const std::uint64_t keep_from = q + 1 > half_width_ ? q + 1 - half_width_ : 0;
  if (keep_from <= buffer_start_) return;
  const std::uint64_t drop = std::min<std::uint64_t>(keep_from - buffer_start_, buffer_.size());
  // Compact only once the dead prefix dominates, to keep erase amortized.
  if (drop < 4096 && drop * 2 < buffer_.size()) return;
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(drop));
  buffer_start_ += drop;
}

std::vector<double> RationalResampler::process(std::span<const double> input) {
  if (flushed_) throw std::logic_error("resampler: process after flush");
  buffer_.insert(buffer_.end(), input.begin(), input.end());
  consumed_ += input.size();
  std::vector<double> out;
  // Output m is final once input index q + H has arrived, q = floor(m * down / up).
  if (consumed_ > half_width_) {
    const std::uint64_t last_q = consumed_ - 1 - half_width_;
    const auto up = static_cast<std::uint64_t>(up_);
    const auto down = static_cast<std::uint64_t>(down_);
    const std::uint64_t lim = ((last_q + 1) * up - 1) / down + 1;
    emit_ready(out, lim);
  }
  trim();
  return out;
}

std::vector<double> RationalResampler::flush() {
  if (flushed_) return {};
  flushed_ = true;
  // Only outputs whose whole sample period lies inside the input.
  const std::uint64_t total =
      consumed_ * static_cast<std::uint64_t>(up_) / static_cast<std::uint64_t>(down_);
  std::vector<double> out;
  emit_ready(out, total);
  return out;
}

RationalResampler make_acquisition_resampler() {
  RationalResampler::Design d;
  d.input_rate_hz = kAcquisitionRateHz;
  return RationalResampler(kAnalysisRateHz / 100, kAcquisitionRateHz / 100, d);
}

Recording resample_to_4khz(const Recording& r) {
  if (r.sample_rate_hz == kAnalysisRateHz) return r;
  if (r.sample_rate_hz != kAcquisitionRateHz) {
    throw DataError("resample: unsupported sample_rate_hz " + std::to_string(r.sample_rate_hz) +
                    " (expected 44100 or 4000)");
  }
  RationalResampler rs = make_acquisition_resampler();
  Recording out;
  out.id = r.id;
  out.sample_rate_hz = kAnalysisRateHz;
  out.samples = rs.process(r.samples);
  const auto tail = rs.flush();
  out.samples.insert(out.samples.end(), tail.begin(), tail.end());
  return out;
}

std::vector<double> upsample_4khz_to_44k(std::span<const double> samples) {
  RationalResampler::Design d;
  d.input_rate_hz = kAnalysisRateHz;
  RationalResampler rs(kAcquisitionRateHz / 100, kAnalysisRateHz / 100, d);
  auto out = rs.process(samples);
  const auto tail = rs.flush();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace dusq::audio
