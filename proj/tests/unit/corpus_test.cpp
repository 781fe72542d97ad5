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

// Small generated corpora pushed through loading, caching and features.

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"
#include "dusq/synth.hpp"
#include "dusq/train/dataset.hpp"
#include "oracles.hpp"

namespace dusq::train {
namespace {

class SmallCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new dusq::testing::TempDir("dusq-corpus");
    synth::CorpusOptions opt;
    opt.min_duration_s = 25.0;
    opt.max_duration_s = 35.0;
    manifest_ = new synth::SynthCorpusManifest(synth::gen_corpus(8, 21, dir_->path(), opt));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static dusq::testing::TempDir* dir_;
  static synth::SynthCorpusManifest* manifest_;
};

dusq::testing::TempDir* SmallCorpus::dir_ = nullptr;
synth::SynthCorpusManifest* SmallCorpus::manifest_ = nullptr;

TEST_F(SmallCorpus, ManifestColumnsAndWavRate) {
  const auto entries = read_corpus_manifest(dir_->path());
  ASSERT_EQ(entries.size(), 8u);
  EXPECT_EQ(entries[0].recording_id, "rec000");
  const auto r = audio::read_wav(dir_->path() / entries[0].wav);
  EXPECT_EQ(r.sample_rate_hz, audio::kAcquisitionRateHz);
}

TEST_F(SmallCorpus, LoadedWindowsMatchScripts) {
  const auto data = load_corpus(dir_->path());
  EXPECT_EQ(data.histogram(data.all_rows()), manifest_->window_counts());
  EXPECT_EQ(data.recording_ids().size(), 8u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto f = data.features(i);
    float lo = 1.0f, hi = 0.0f;
    for (float v : f) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    ASSERT_GE(lo, 0.0f);
    ASSERT_LE(hi, 1.0f);
  }
  // Labels agree with the generating script segment by segment.
  for (std::size_t i = 0; i < data.size(); i += 7) {
    const auto& row = data.row(i);
    const auto& rec = manifest_->recordings.at(row.recording);
    const auto labels = rec.script.segment_labels();
    for (std::size_t s = 0; s < 5; ++s) EXPECT_EQ(labels.at(row.start_segment + s), row.label);
  }
}

TEST_F(SmallCorpus, CacheIsReusedAndInvalidatedByContent) {
  const auto entries = read_corpus_manifest(dir_->path());
  const auto first = cached_recording_features(dir_->path(), entries[1]);
  const auto cache = dir_->path() / "cache" / "rec001.scal";
  ASSERT_TRUE(std::filesystem::exists(cache));
  EXPECT_EQ(cached_recording_features(dir_->path(), entries[1]), first);
  EXPECT_EQ(recording_features(audio::read_wav(dir_->path() / entries[1].wav)), first);

  // Corrupt the cache: it must be ignored, not trusted.
  {
    std::fstream f(cache, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  EXPECT_EQ(cached_recording_features(dir_->path(), entries[1]), first);
}

TEST_F(SmallCorpus, NearestCentroidSeparatesClasses) {
  const auto data = load_corpus(dir_->path());
  // Per-window mean over time of each frequency bin, then leave-recording-out
  // nearest centroid.
  std::vector<std::array<double, 40>> profile(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto f = data.features(i);
    profile[i].fill(0.0);
    for (std::size_t t = 0; t < 250; ++t)
      for (std::size_t b = 0; b < 40; ++b) profile[i][b] += f[t * 40 + b] / 250.0;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::array<std::array<double, 40>, kNumClasses> centroid{};
    std::array<std::size_t, kNumClasses> n{};
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (data.row(j).recording == data.row(i).recording) continue;
      const auto c = index_of(data.row(j).label);
      ++n[c];
      for (std::size_t b = 0; b < 40; ++b) centroid[c][b] += profile[j][b];
    }
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (n[c] == 0) continue;
      double d = 0.0;
      for (std::size_t b = 0; b < 40; ++b) d += std::pow(profile[i][b] - centroid[c][b] / n[c], 2);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    correct += arg == index_of(data.row(i).label);
  }
  EXPECT_GE(static_cast<double>(correct) / data.size(), 0.7);
}

TEST(Dataset, ManifestErrorsNameTheProblem) {
  dusq::testing::TempDir dir;
  EXPECT_THROW(read_corpus_manifest(dir.path()), DataError);
  std::ofstream(dir / "manifest.csv") << "recording_id,annotations\nrec000,a.csv\n";
  try {
    read_corpus_manifest(dir.path());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("wav"), std::string::npos);
  }
}

TEST(Dataset, BatchGathersRows) {
  WindowDataset data;
  const auto r = data.add_recording("a");
  EXPECT_EQ(data.add_recording("a"), r);
  std::vector<float> f(kFeatureSize);
  for (std::size_t i = 0; i < 3; ++i) {
    std::fill(f.begin(), f.end(), static_cast<float>(i));
    data.add(r, i, class_from_index(i), f);
  }
  const std::vector<std::size_t> rows = {2, 0};
  const auto t = data.batch<double>(rows);
  EXPECT_EQ(t.shape(), (nn::Shape{2, 250, 40}));
  EXPECT_EQ(t[0], 2.0);
  EXPECT_EQ(t[kFeatureSize], 0.0);
  EXPECT_EQ(data.labels(rows), (std::vector<QualityClass>{QualityClass::kInterference, QualityClass::kGood}));
  const std::vector<std::size_t> bad = {9};
  EXPECT_THROW(data.batch<double>(bad), std::out_of_range);
  EXPECT_THROW(data.add(r, 0, QualityClass::kGood, std::vector<float>(5)), std::invalid_argument);
}

}  // namespace
}  // namespace dusq::train
