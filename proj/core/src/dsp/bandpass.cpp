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

#include "dusq/dsp.hpp"

namespace dusq::dsp {

std::complex<double> FilterCoefficients::response(double f_hz) const {
  const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);
  const std::complex<double> zinv2 = zinv * zinv;
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
  }
  return h;
}

FilterCoefficients design_bandpass(double f_lo_hz, double f_hi_hz, double fs_hz) {
  if (!(fs_hz > 0.0 && f_lo_hz > 0.0 && f_lo_hz < f_hi_hz && f_hi_hz < fs_hz / 2.0)) {
    throw std::invalid_argument("design_bandpass: need 0 < f_lo < f_hi < fs/2");
  }
  using cd = std::complex<double>;
  const double pi = std::numbers::pi;
  const double k = 2.0 * fs_hz;
  const double w_lo = k * std::tan(pi * f_lo_hz / fs_hz);
  const double w_hi = k * std::tan(pi * f_hi_hz / fs_hz);
  const double w0_sq = w_lo * w_hi;
  const double bw = w_hi - w_lo;

  // Upper-half-plane prototype pole; its conjugate yields the conjugate poles.
  const cd proto = std::polar(1.0, 3.0 * pi / 4.0);
  const cd pb = proto * bw;
  const cd disc = std::sqrt(pb * pb - 4.0 * w0_sq);
  const cd analog[2] = {(pb + disc) / 2.0, (pb - disc) / 2.0};

  FilterCoefficients c;
  c.f_lo_hz = f_lo_hz;
  c.f_hi_hz = f_hi_hz;
  c.fs_hz = fs_hz;
  for (const cd& s : analog) {
    const cd z = (1.0 + s / k) / (1.0 - s / k);
    Biquad b;
    b.b0 = 1.0;
    b.b1 = 0.0;
    b.b2 = -1.0;
    b.a1 = -2.0 * z.real();
    b.a2 = std::norm(z);
    c.sections.push_back(b);
  }

  // Unity gain at the digital image of the analog centre frequency.
  const double f_center = fs_hz / pi * std::atan(std::sqrt(w0_sq) / k);
  const double g = std::sqrt(1.0 / std::abs(c.response(f_center)));
  for (Biquad& b : c.sections) {
    b.b0 *= g;
    b.b2 *= g;
  }
  return c;
}

std::vector<double> apply_filter(const FilterCoefficients& c, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : c.sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

}  // namespace dusq::dsp
