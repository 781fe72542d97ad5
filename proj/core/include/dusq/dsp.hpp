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

#ifndef DUSQ_DSP_HPP_
#define DUSQ_DSP_HPP_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace dusq::dsp {

inline constexpr double kBandLowHz = 25.0;
inline constexpr double kBandHighHz = 600.0;
inline constexpr double kSampleRateHz = 4000.0;
inline constexpr std::size_t kScalogramFrames = 250;
inline constexpr std::size_t kScalogramBins = 40;
inline constexpr std::size_t kPoolFactor = 60;  // 15000 samples -> 250 frames
inline constexpr double kMorletOmega0 = 6.0;

/// Direct-form-II-transposed biquad; a0 is normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  std::vector<Biquad> sections;
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;
  double fs_hz = 0.0;

  /// H(e^{j 2 pi f / fs}) of the cascade.
  std::complex<double> response(double f_hz) const;
};

/// Order-2 Butterworth low-pass prototype mapped to a band-pass (two biquads)
/// through the bilinear transform with pre-warped edges, so both edges sit at
/// exactly -3 dB. Requires 0 < f_lo < f_hi < fs / 2.
FilterCoefficients design_bandpass(double f_lo_hz, double f_hi_hz, double fs_hz);

/// Causal single pass through the cascade, zero initial state.
std::vector<double> apply_filter(const FilterCoefficients& c, std::span<const double> x);

struct ScaleBank {
  std::vector<double> frequencies_hz;  // ascending
  double omega0 = kMorletOmega0;
  double fs_hz = kSampleRateHz;

  /// Log-spaced centre frequencies spanning [f_lo, f_hi] inclusive.
  static ScaleBank log_spaced(double f_lo_hz = kBandLowHz, double f_hi_hz = kBandHighHz,
                              std::size_t count = kScalogramBins,
                              double omega0 = kMorletOmega0, double fs_hz = kSampleRateHz);

  /// Wavelet scale in samples for bin i: omega0 * fs / (2 pi f).
  double scale(std::size_t i) const;
  std::size_t size() const { return frequencies_hz.size(); }
};

/// Time x frequency magnitude map, row-major (frame-major).
class Scalogram {
 public:
  Scalogram() = default;
  Scalogram(std::size_t frames, std::size_t bins, double fill = 0.0)
      : frames_(frames), bins_(bins), data_(frames * bins, fill) {}

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  double& at(std::size_t frame, std::size_t bin) { return data_[frame * bins_ + bin]; }
  double at(std::size_t frame, std::size_t bin) const { return data_[frame * bins_ + bin]; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Scalogram&, const Scalogram&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<double> data_;
};

/// Magnitude of the complex Morlet CWT (psi(t) = pi^-1/4 e^{i w0 t} e^{-t^2/2},
/// each scale L2-normalized by 1/sqrt(s)), evaluated by zero-padded FFT
/// convolution over a full 15000-sample window and mean-pooled in blocks of 60
/// samples to 250 frames. Throws std::invalid_argument on other lengths.
Scalogram morlet_scalogram(std::span<const double> window, const ScaleBank& bank);

/// Complex CWT coefficients before magnitude/pooling: [bin][sample].
std::vector<std::vector<std::complex<double>>> morlet_cwt(std::span<const double> window,
                                                          const ScaleBank& bank);

/// (s - min) / (max - min); all zeros when max == min. Throws NumericError on
/// NaN/Inf.
Scalogram normalize_minmax(const Scalogram& s);

/// Window -> band-pass -> scalogram -> normalization, with the filter and scale
/// bank designed once.
class FeatureExtractor {
 public:
  FeatureExtractor();
  Scalogram operator()(std::span<const double> window) const;
  const FilterCoefficients& filter() const { return filter_; }
  const ScaleBank& bank() const { return bank_; }

 private:
  FilterCoefficients filter_;
  ScaleBank bank_;
};

// Scalogram records: u32 frames, u32 bins (little-endian), then frames*bins
// little-endian f32 values, row-major.
std::vector<std::byte> encode_scalogram(const Scalogram& s);
Scalogram decode_scalogram(std::span<const std::byte> bytes);
void write_scalogram(std::ostream& out, const Scalogram& s);
/// Returns false on clean EOF before a record; throws DataError on truncation.
bool read_scalogram(std::istream& in, Scalogram& s);

}  // namespace dusq::dsp

#endif  // DUSQ_DSP_HPP_
