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

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <numeric>

#include "dusq/annotations.hpp"
#include "dusq/synth.hpp"
#include "oracles.hpp"

namespace dusq::synth {
namespace {

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::vector<double> power_spectrum(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(x.size() / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  std::vector<double> power(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) power[k] = std::norm(out[k]);
  return power;
}

TEST(Spans, LengthAndDeterminism) {
  for (auto cls : kAllClasses) {
    const auto a = gen_span(cls, 7.5, 42);
    EXPECT_EQ(a.size(), 30000u) << to_token(cls);
    EXPECT_EQ(a, gen_span(cls, 7.5, 42));
    EXPECT_NE(a, gen_span(cls, 7.5, 43));
    for (double v : a) ASSERT_LE(std::abs(v), 1.0);
  }
}

TEST(Spans, SilentIsBelowOneTenThousandth) {
  const auto x = gen_span(QualityClass::kSilent, 30.0, 1);
  EXPECT_LE(rms(x), 1e-4);
  for (double v : x) EXPECT_LE(std::abs(v), 1e-4);
}

TEST(Spans, GoodEnvelopeRepeatsAtHeartRate) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = gen_span(QualityClass::kGood, 20.0, seed, {140.0, 0.3});
    // Rectify and smooth over 25 ms.
    std::vector<double> env(x.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += std::abs(x[i]);
      if (i >= 100) acc -= std::abs(x[i - 100]);
      env[i] = acc;
    }
    const double mean = std::accumulate(env.begin(), env.end(), 0.0) / env.size();
    for (auto& v : env) v -= mean;
    std::size_t best = 0;
    double best_r = -1e300;
    for (std::size_t lag = 1000; lag <= 2500; ++lag) {
      double r = 0.0;
      for (std::size_t i = 0; i + lag < env.size(); ++i) r += env[i] * env[i + lag];
      if (r > best_r) {
        best_r = r;
        best = lag;
      }
    }
    const double expected = 60.0 / 140.0 * 4000.0;
    EXPECT_NEAR(static_cast<double>(best), expected, 0.02 * expected) << seed;
  }
}

TEST(Spans, InterferenceEnergySitsOnMainsHarmonics) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto x = gen_span(QualityClass::kInterference, 10.0, seed);
    const auto p = power_spectrum(x);
    const double df = 4000.0 / static_cast<double>(x.size());
    const double total = std::accumulate(p.begin() + 1, p.end(), 0.0);
    double best_share = 0.0;
    for (double f0 = 49.7; f0 <= 60.3; f0 += 0.05) {
      if (f0 > 50.3 && f0 < 59.7) continue;
      double on = 0.0;
      for (std::size_t k = 1; k < p.size(); ++k) {
        const double f = k * df;
        const double h = std::round(f / f0);
        if (h >= 1 && std::abs(f - h * f0) <= 2.0) on += p[k];
      }
      best_share = std::max(best_share, on / total);
    }
    EXPECT_GE(best_share, 0.8) << seed;
  }
}

TEST(Scripts, WindowLawPerSpan) {
  std::size_t spans = 0, long_spans = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto script = plan_recording(seed);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < script.spans.size(); ++i) {
      const auto& s = script.spans[i];
      EXPECT_GE(s.segments, 6u);
      ++spans;
      long_spans += s.segments > 32u;
      if (i > 0) EXPECT_NE(s.cls, script.spans[i - 1].cls);
      expected += s.segments >= 5 ? s.segments - 4 : 0;
    }
    const auto counts = script.window_counts();
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), expected);
    const auto segs = annotations::apply_consensus(script_annotations("r", script));
    EXPECT_EQ(annotations::class_histogram(annotations::build_labeled_windows(segs)), counts);
    EXPECT_GE(script.duration_s(), 60.0 - 0.75 * 32);
    EXPECT_LE(script.duration_s(), 180.0 + 0.75 * 32);
  }
  EXPECT_LE(long_spans * 10, spans) << long_spans << " of " << spans << " spans past the cap";
}

TEST(Scripts, FormatParseRoundTrip) {
  const auto script = plan_recording(5);
  EXPECT_EQ(parse_script(format_script(script)), script.spans);
  const std::vector<ScriptSpan> spans = {{QualityClass::kGood, 12}, {QualityClass::kSilent, 8}};
  EXPECT_EQ(parse_script("good:12;silent:8"), spans);
}

TEST(Corpus, DefaultHistogramOrdering) {
  const auto counts = plan_corpus(40, 7).window_counts();
  using QC = QualityClass;
  const auto at = [&](QC c) { return counts[index_of(c)]; };
  EXPECT_GT(at(QC::kGood), at(QC::kSilent));
  EXPECT_GT(at(QC::kSilent), at(QC::kPoor));
  EXPECT_GT(at(QC::kPoor), at(QC::kTalking));
  EXPECT_GT(at(QC::kTalking), at(QC::kInterference));
  EXPECT_GT(at(QC::kInterference), 0u);
}

TEST(Corpus, PlanIsSeeded) {
  EXPECT_EQ(plan_corpus(8, 3).recordings, plan_corpus(8, 3).recordings);
  EXPECT_NE(plan_corpus(8, 3).recordings, plan_corpus(8, 4).recordings);
  EXPECT_THROW(plan_corpus(4, 1), std::invalid_argument);
  EXPECT_EQ(plan_corpus(12, 1).recordings[11].id, "rec011");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Corpus, SameSeedWritesIdenticalBytes) {
  testing::TempDir a, b;
  CorpusOptions opt;
  opt.min_duration_s = 10.0;
  opt.max_duration_s = 14.0;
  gen_corpus(5, 11, a.path(), opt);
  gen_corpus(5, 11, b.path(), opt);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / name)) << name;
    ++files;
  }
  EXPECT_EQ(files, 11u);  // 5 WAVs, 5 annotation files, manifest
  EXPECT_EQ(read_manifest(a.path()).recordings, plan_corpus(5, 11, opt).recordings);
}

}  // namespace
}  // namespace dusq::synth
