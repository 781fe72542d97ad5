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

#include "dusq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"
#include "dusq/rng.hpp"

namespace dusq::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSilentSigma = 3e-5;
constexpr double kSilentLimit = 1e-4;

std::size_t span_samples(double duration_s) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw std::invalid_argument("gen_span: duration must be finite and non-negative");
  }
  return static_cast<std::size_t>(std::llround(duration_s * kSynthRateHz));
}

// Hann-windowed linear chirp added at `start` (may run past either end).
void add_chirp(std::vector<double>& x, double start, double length_s, double f0, double f1,
               double amp) {
  const auto n = static_cast<std::ptrdiff_t>(length_s * kSynthRateHz);
  const auto s0 = static_cast<std::ptrdiff_t>(std::floor(start));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t k = s0 + i;
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(x.size())) continue;
    const double t = static_cast<double>(i) / kSynthRateHz;
    const double u = static_cast<double>(i) / static_cast<double>(n);
    const double env = 0.5 - 0.5 * std::cos(kTwoPi * u);
    const double phase = kTwoPi * (f0 * t + 0.5 * (f1 - f0) / length_s * t * t);
    x[static_cast<std::size_t>(k)] += amp * env * std::sin(phase);
  }
}

void add_heartbeat(std::vector<double>& x, double bpm, double amp, Rng& rng) {
  const double period = 60.0 / bpm * kSynthRateHz;
  const double gap = rng.uniform(0.10, 0.16) * kSynthRateHz;
  const double lo = rng.uniform(60.0, 90.0), hi = rng.uniform(150.0, 200.0);
  const double first = rng.uniform(0.0, period) - period;
  for (double k = 0;; ++k) {
    const double t = first + k * period + 0.01 * period * rng.normal();
    if (t >= static_cast<double>(x.size())) break;
    const double a = amp * rng.uniform(0.85, 1.0);
    add_chirp(x, t, 0.05, lo, hi, a);
    add_chirp(x, t + gap, 0.04, hi, lo, 0.6 * a);
  }
}

void gen_good(std::vector<double>& x, const SpanParams& p, Rng& rng) {
  add_heartbeat(x, p.fhr_bpm, p.amplitude, rng);
  const double floor = p.amplitude * 0.02;
  for (double& v : x) v += floor * rng.normal();
}

void gen_interference(std::vector<double>& x, const SpanParams& p, Rng& rng) {
  const double f0 = (rng.bernoulli(0.5) ? 50.0 : 60.0) + rng.uniform(-0.2, 0.2);
  const auto harmonics = static_cast<std::size_t>(600.0 / f0);
  std::vector<double> amp(harmonics), phase(harmonics);
  double norm = 0.0;
  for (std::size_t h = 1; h <= harmonics; ++h) {
    amp[h - 1] = (h % 2 == 1 ? 1.0 : 0.5) * std::pow(static_cast<double>(h), -0.3) *
                 rng.uniform(0.5, 1.0);
    phase[h - 1] = rng.uniform(0.0, kTwoPi);
    norm += amp[h - 1];
  }
  const double scale = p.amplitude / norm * 2.0;
  const double drift_f = rng.uniform(0.1, 0.4), drift_phase = rng.uniform(0.0, kTwoPi);
  const double floor = p.amplitude * 0.01;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / kSynthRateHz;
    double s = 0.0;
    for (std::size_t h = 1; h <= harmonics; ++h) {
      s += amp[h - 1] * std::sin(kTwoPi * f0 * static_cast<double>(h) * t + phase[h - 1]);
    }
    const double drift = 1.0 + 0.1 * std::sin(kTwoPi * drift_f * t + drift_phase);
    x[i] += scale * drift * s + floor * rng.normal();
  }
}

void gen_talking(std::vector<double>& x, const SpanParams& p, Rng& rng) {
  const double rate = rng.uniform(2.0, 6.0);
  const double base_pitch = rng.uniform(100.0, 200.0);
  // Aspiration noise, smoothed to sit mostly below 500 Hz.
  std::vector<double> noise(x.size());
  double lp = 0.0;
  for (double& v : noise) {
    lp = 0.55 * lp + 0.45 * rng.normal();
    v = lp;
  }
  std::size_t pos = static_cast<std::size_t>(rng.uniform(0.0, 0.3) * kSynthRateHz);
  double phase = 0.0;
  while (pos < x.size()) {
    const double syll_s = rng.uniform(0.5, 0.9) / rate;
    const double pause_s = rng.uniform(0.1, 1.1) / rate;
    const auto len = static_cast<std::size_t>(syll_s * kSynthRateHz);
    const double f_start = base_pitch * rng.uniform(0.9, 1.15);
    const double f_end = base_pitch * rng.uniform(0.8, 1.1);
    const double formant1 = rng.uniform(150.0, 300.0), formant2 = rng.uniform(300.0, 480.0);
    const double loud = p.amplitude * rng.uniform(0.6, 1.0);
    for (std::size_t i = 0; i < len && pos + i < x.size(); ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(len);
      const double env = std::sin(std::numbers::pi * u);
      const double f = f_start + (f_end - f_start) * u;
      phase += kTwoPi * f / kSynthRateHz;
      double voiced = 0.0;
      for (double h = 1; h * f <= 500.0; ++h) {
        const double fh = h * f;
        const double w = std::exp(-0.5 * std::pow((fh - formant1) / 60.0, 2)) +
                         0.7 * std::exp(-0.5 * std::pow((fh - formant2) / 70.0, 2)) + 0.05;
        voiced += w * std::sin(h * phase);
      }
      x[pos + i] += loud * env * (0.45 * voiced + 0.25 * noise[pos + i]);
    }
    pos += len + static_cast<std::size_t>(pause_s * kSynthRateHz);
  }
  if (rng.bernoulli(0.5)) add_heartbeat(x, p.fhr_bpm, 0.15 * p.amplitude, rng);
  const double floor = p.amplitude * 0.01;
  for (double& v : x) v += floor * rng.normal();
}

void gen_poor(std::vector<double>& x, const SpanParams& p, Rng& rng) {
  const double sigma = p.amplitude * rng.uniform(0.15, 0.3);
  const double mix = rng.uniform(0.3, 0.7);
  double brown = 0.0;
  for (double& v : x) {
    brown = 0.95 * brown + 0.3 * rng.normal();
    v += sigma * ((1.0 - mix) * rng.normal() + mix * brown);
  }
  const double rate = rng.uniform(0.5, 2.0);  // thumps per second
  double t = -std::log(1.0 - rng.uniform()) / rate;
  while (t * kSynthRateHz < static_cast<double>(x.size())) {
    const double f = rng.uniform(15.0, 60.0), tau = rng.uniform(0.05, 0.2);
    const double a = p.amplitude * rng.uniform(0.5, 1.5);
    const auto start = static_cast<std::size_t>(t * kSynthRateHz);
    const auto len = static_cast<std::size_t>(5.0 * tau * kSynthRateHz);
    for (std::size_t i = 0; i < len && start + i < x.size(); ++i) {
      const double s = static_cast<double>(i) / kSynthRateHz;
      x[start + i] += a * std::exp(-s / tau) * std::sin(kTwoPi * f * s);
    }
    t += -std::log(1.0 - rng.uniform()) / rate;
  }
}

void gen_silent(std::vector<double>& x, Rng& rng) {
  for (double& v : x) v = std::clamp(kSilentSigma * rng.normal(), -kSilentLimit, kSilentLimit);
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(s);
  while (std::getline(ss, field, sep)) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::vector<double> gen_span(QualityClass cls, double duration_s, std::uint64_t seed,
                             const SpanParams& params) {
  std::vector<double> x(span_samples(duration_s), 0.0);
  Rng rng(seed);
  switch (cls) {
    case QualityClass::kGood: gen_good(x, params, rng); break;
    case QualityClass::kPoor: gen_poor(x, params, rng); break;
    case QualityClass::kInterference: gen_interference(x, params, rng); break;
    case QualityClass::kTalking: gen_talking(x, params, rng); break;
    case QualityClass::kSilent: gen_silent(x, rng); break;
  }
  return x;
}

std::size_t ClassScript::total_segments() const {
  std::size_t n = 0;
  for (const auto& s : spans) n += s.segments;
  return n;
}

double ClassScript::duration_s() const {
  return static_cast<double>(total_segments()) * audio::kSegmentSeconds;
}

std::vector<QualityClass> ClassScript::segment_labels() const {
  std::vector<QualityClass> out;
  out.reserve(total_segments());
  for (const auto& s : spans) out.insert(out.end(), s.segments, s.cls);
  return out;
}

ClassCounts ClassScript::window_counts() const {
  ClassCounts c{};
  for (const auto& s : spans) {
    if (s.segments >= audio::kSegmentsPerWindow) {
      c[index_of(s.cls)] += s.segments - (audio::kSegmentsPerWindow - 1);
    }
  }
  return c;
}

ClassScript plan_recording(std::uint64_t seed, const CorpusOptions& o) {
  if (!(o.min_duration_s > 0.0 && o.max_duration_s >= o.min_duration_s)) {
    throw std::invalid_argument("plan_recording: bad duration range");
  }
  if (o.min_span_segments == 0 || o.max_span_segments < o.min_span_segments) {
    throw std::invalid_argument("plan_recording: bad span length range");
  }
  Rng rng(seed);
  ClassScript script;
  script.seed = derive_seed(seed, 0xfeed);
  script.fhr_bpm = rng.uniform(110.0, 160.0);
  script.amplitude = rng.uniform(0.15, 0.5);
  const double duration = rng.uniform(o.min_duration_s, o.max_duration_s);
  const auto total = static_cast<std::size_t>(duration / audio::kSegmentSeconds);

  std::array<double, kNumClasses> share{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    share[c] = o.class_shares[c] * rng.uniform(0.6, 1.4);
    sum += share[c];
  }
  std::array<std::size_t, kNumClasses> remaining{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    remaining[c] = static_cast<std::size_t>(std::floor(share[c] / sum * static_cast<double>(total)));
    assigned += remaining[c];
  }
  remaining[index_of(QualityClass::kGood)] += total - assigned;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (c != index_of(QualityClass::kGood) && remaining[c] < o.min_span_segments) {
      remaining[index_of(QualityClass::kGood)] += remaining[c];
      remaining[c] = 0;
    }
  }

  std::optional<QualityClass> prev;
  for (;;) {
    double weight_sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (remaining[c] > 0 && (!prev || index_of(*prev) != c)) weight_sum += static_cast<double>(remaining[c]);
    }
    if (weight_sum == 0.0) {
      // Only the previous class has budget left: extend its span.
      if (prev && remaining[index_of(*prev)] > 0) {
        script.spans.back().segments += remaining[index_of(*prev)];
      }
      break;
    }
    double pick = rng.uniform(0.0, weight_sum);
    std::size_t chosen = kNumClasses;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (remaining[c] == 0 || (prev && index_of(*prev) == c)) continue;
      chosen = c;
      pick -= static_cast<double>(remaining[c]);
      if (pick < 0.0) break;
    }
    std::size_t len = o.min_span_segments +
                      rng.below(o.max_span_segments - o.min_span_segments + 1);
    len = std::min(len, remaining[chosen]);
    if (remaining[chosen] - len < o.min_span_segments) len = remaining[chosen];
    script.spans.push_back({class_from_index(chosen), len});
    remaining[chosen] -= len;
    prev = class_from_index(chosen);
  }
  return script;
}

std::vector<double> render_script(const ClassScript& script) {
  std::vector<double> out;
  out.reserve(script.total_segments() * audio::kSegmentSamples);
  SpanParams params{script.fhr_bpm, script.amplitude};
  for (std::size_t i = 0; i < script.spans.size(); ++i) {
    const auto& s = script.spans[i];
    const auto x = gen_span(s.cls, static_cast<double>(s.segments) * audio::kSegmentSeconds,
                            derive_seed(script.seed, i), params);
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

annotations::AnnotationSet script_annotations(const std::string& recording_id,
                                              const ClassScript& script) {
  annotations::AnnotationSet set;
  set.recording_id = recording_id;
  for (QualityClass c : script.segment_labels()) {
    const auto l = annotations::to_label(c);
    set.segments.push_back({l, l, l});
  }
  return set;
}

ClassCounts SynthCorpusManifest::window_counts() const {
  ClassCounts total{};
  for (const auto& r : recordings) {
    const auto c = r.script.window_counts();
    for (std::size_t i = 0; i < kNumClasses; ++i) total[i] += c[i];
  }
  return total;
}

SynthCorpusManifest plan_corpus(std::size_t n_recordings, std::uint64_t seed,
                                const CorpusOptions& options) {
  if (n_recordings < 5) throw std::invalid_argument("plan_corpus: need at least 5 recordings");
  SynthCorpusManifest m;
  m.seed = seed;
  for (std::size_t i = 0; i < n_recordings; ++i) {
    m.recordings.push_back({fmt::format("rec{:03d}", i), plan_recording(derive_seed(seed, i), options)});
  }
  return m;
}

SynthCorpusManifest gen_corpus(std::size_t n_recordings, std::uint64_t seed,
                               const std::filesystem::path& dir, const CorpusOptions& options,
                               const GenProgress& progress) {
  auto manifest = plan_corpus(n_recordings, seed, options);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < manifest.recordings.size(); ++i) {
    const auto& r = manifest.recordings[i];
    const auto at_4k = render_script(r.script);
    audio::write_wav(dir / (r.id + ".wav"), audio::upsample_4khz_to_44k(at_4k),
                     audio::kAcquisitionRateHz);
    annotations::write_annotations_csv(dir / (r.id + ".annotations.csv"),
                                       script_annotations(r.id, r.script));
    if (progress) progress(i + 1, manifest.recordings.size());
  }
  write_manifest(dir, manifest);
  return manifest;
}

std::string format_script(const ClassScript& script) {
  std::string out;
  for (const auto& s : script.spans) {
    if (!out.empty()) out += ';';
    out += fmt::format("{}:{}", to_token(s.cls), s.segments);
  }
  return out;
}

std::vector<ScriptSpan> parse_script(const std::string& text) {
  std::vector<ScriptSpan> spans;
  if (text.empty()) return spans;
  for (const auto& item : split(text, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw DataError("script: expected <class>:<segments> in '" + item + "'");
    const auto cls = parse_quality_class(item.substr(0, colon));
    if (!cls) throw DataError("script: unknown class in '" + item + "'");
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
      n = std::stoull(item.substr(colon + 1), &used);
    } catch (const std::exception&) {
      throw DataError("script: bad segment count in '" + item + "'");
    }
    if (used != item.size() - colon - 1) throw DataError("script: bad segment count in '" + item + "'");
    spans.push_back({*cls, static_cast<std::size_t>(n)});
  }
  return spans;
}

void write_manifest(const std::filesystem::path& dir, const SynthCorpusManifest& manifest) {
  const auto path = dir / "manifest.csv";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "recording_id,wav,annotations,seed,fhr_bpm,amplitude,duration_s,script\n";
  for (const auto& r : manifest.recordings) {
    f << r.id << ',' << r.id << ".wav," << r.id << ".annotations.csv," << r.script.seed << ','
      << fmt_double(r.script.fhr_bpm) << ',' << fmt_double(r.script.amplitude) << ','
      << fmt_double(r.script.duration_s()) << ',' << format_script(r.script) << '\n';
  }
  if (!f) throw DataError("write failed for " + path.string());
}

SynthCorpusManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.csv";
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(f, line);
  const auto header = split(line, ',');
  const std::vector<std::string> expected = {"recording_id", "wav",        "annotations", "seed",
                                             "fhr_bpm",      "amplitude", "duration_s",  "script"};
  if (header != expected) throw DataError(path.string() + ": not a synthetic corpus manifest");
  SynthCorpusManifest m;
  for (std::size_t line_no = 2; std::getline(f, line); ++line_no) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != expected.size()) throw DataError(where + ": expected 8 fields");
    SynthRecording r;
    r.id = fields[0];
    try {
      r.script.seed = std::stoull(fields[3]);
      r.script.fhr_bpm = std::stod(fields[4]);
      r.script.amplitude = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw DataError(where + ": bad numeric field");
    }
    r.script.spans = parse_script(fields[7]);
    m.recordings.push_back(std::move(r));
  }
  return m;
}

}  // namespace dusq::synth
