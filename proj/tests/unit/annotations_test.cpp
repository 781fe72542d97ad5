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

#include <fstream>

#include "dusq/annotations.hpp"
#include "dusq/error.hpp"
#include "dusq/rng.hpp"
#include "oracles.hpp"

namespace dusq::annotations {
namespace {

Label label_at(std::size_t i) { return static_cast<Label>(i); }

TEST(Consensus, AllTriplesMatchRuleTable) {
  std::size_t labelled = 0;
  for (std::size_t a = 0; a < kNumLabels; ++a) {
    for (std::size_t b = 0; b < kNumLabels; ++b) {
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        const auto got = consensus_label(label_at(a), label_at(b), label_at(c));
        EXPECT_EQ(got, testing::reference_consensus(label_at(a), label_at(b), label_at(c)))
            << a << b << c;
        labelled += got.has_value();
      }
    }
  }
  // 3 unanimity triples + 2 * (1 + 3 * 5) two-of-three triples.
  EXPECT_EQ(labelled, 35u);
}

TEST(Consensus, SpotChecks) {
  EXPECT_EQ(consensus_label(Label::kGood, Label::kGood, Label::kGood), QualityClass::kGood);
  EXPECT_EQ(consensus_label(Label::kGood, Label::kGood, Label::kPoor), std::nullopt);
  EXPECT_EQ(consensus_label(Label::kTalking, Label::kUnsure, Label::kTalking), QualityClass::kTalking);
  EXPECT_EQ(consensus_label(Label::kInterference, Label::kInterference, Label::kGood),
            QualityClass::kInterference);
  EXPECT_EQ(consensus_label(Label::kUnsure, Label::kUnsure, Label::kUnsure), std::nullopt);
  EXPECT_EQ(consensus_label(Label::kSilent, Label::kSilent, Label::kUnsure), std::nullopt);
}

std::vector<LabeledSegment> as_segments(const std::vector<std::optional<QualityClass>>& labels) {
  std::vector<LabeledSegment> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({"r", i, labels[i]});
  return out;
}

TEST(Windows, CountLawAgainstEnumerator) {
  Rng rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng.below(80);
    std::vector<std::optional<QualityClass>> labels(n);
    // Sticky sequences so long runs occur.
    std::optional<QualityClass> cur;
    for (auto& l : labels) {
      if (rng.bernoulli(0.2)) {
        cur = rng.bernoulli(0.15) ? std::nullopt : std::optional(class_from_index(rng.below(kNumClasses)));
      }
      l = cur;
    }
    const auto got = build_labeled_windows(as_segments(labels));
    EXPECT_EQ(got, testing::enumerate_windows("r", labels)) << "trial " << trial;

    std::size_t expected = 0, run = 0;
    for (std::size_t i = 0; i < n; ++i) {
      run = (labels[i] && i > 0 && labels[i] == labels[i - 1]) ? run + 1 : (labels[i] ? 1 : 0);
      const bool ends = i + 1 == n || labels[i + 1] != labels[i];
      if (ends && labels[i]) expected += run >= 5 ? run - 4 : 0;
    }
    EXPECT_EQ(got.size(), expected);
  }
}

TEST(Windows, GapInSegmentIndicesBreaksRun) {
  std::vector<LabeledSegment> segs;
  for (std::size_t i = 0; i < 12; ++i) {
    if (i == 6) continue;
    segs.push_back({"r", i, QualityClass::kGood});
  }
  // Runs 0..5 (6 segments) and 7..11 (5 segments).
  EXPECT_EQ(build_labeled_windows(segs).size(), 3u);
}

TEST(Windows, HistogramCountsLabels) {
  const std::vector<LabeledWindow> w = {
      {"r", 0, QualityClass::kGood}, {"r", 1, QualityClass::kGood}, {"r", 9, QualityClass::kSilent}};
  const auto h = class_histogram(w);
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[4], 1u);
  EXPECT_EQ(h[1] + h[2] + h[3], 0u);
}

TEST(Csv, AnnotationRoundTrip) {
  testing::TempDir dir;
  AnnotationSet set{"rec", {{Label::kGood, Label::kGood, Label::kUnsure},
                            {Label::kTalking, Label::kSilent, Label::kInterference}}};
  write_annotations_csv(dir / "a.csv", set);
  const auto back = read_annotations_csv(dir / "a.csv", "rec");
  EXPECT_EQ(back.recording_id, "rec");
  EXPECT_EQ(back.segments, set.segments);
}

TEST(Csv, UnknownTokenIsDataError) {
  testing::TempDir dir;
  std::ofstream(dir / "a.csv") << "segment_index,annotA,annotB,annotC\n0,good,great,good\n";
  EXPECT_THROW(read_annotations_csv(dir / "a.csv", "r"), DataError);
  EXPECT_THROW(read_annotations_csv(dir / "missing.csv", "r"), DataError);
}

TEST(Csv, WindowManifestRoundTrip) {
  testing::TempDir dir;
  const std::vector<LabeledWindow> w = {{"a", 0, QualityClass::kPoor}, {"b", 17, QualityClass::kTalking}};
  write_window_manifest(dir / "w.csv", w);
  EXPECT_EQ(read_window_manifest(dir / "w.csv"), w);
}

TEST(Tokens, RoundTrip) {
  for (std::size_t i = 0; i < kNumLabels; ++i) EXPECT_EQ(parse_label(to_token(label_at(i))), label_at(i));
  EXPECT_EQ(parse_label("nope"), std::nullopt);
  for (auto c : kAllClasses) {
    EXPECT_EQ(parse_quality_class(to_token(c)), c);
    EXPECT_EQ(static_cast<std::size_t>(to_label(c)), index_of(c));
  }
}

}  // namespace
}  // namespace dusq::annotations
