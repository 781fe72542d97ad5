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

#include "dusq/annotations.hpp"

#include <fstream>
#include <sstream>

#include "dusq/error.hpp"

namespace dusq::annotations {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t parse_index(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError(where + ": invalid integer '" + s + "'");
  }
}

}  // namespace

std::string_view to_token(Label l) {
  if (l == Label::kUnsure) return "unsure";
  return dusq::to_token(static_cast<QualityClass>(l));
}

std::optional<Label> parse_label(std::string_view token) {
  if (token == "unsure") return Label::kUnsure;
  if (auto c = parse_quality_class(token)) return to_label(*c);
  return std::nullopt;
}

Label to_label(QualityClass c) { return static_cast<Label>(index_of(c)); }

std::optional<QualityClass> consensus_label(Label a, Label b, Label c) {
  std::array<int, kNumLabels> votes{};
  ++votes[static_cast<std::size_t>(a)];
  ++votes[static_cast<std::size_t>(b)];
  ++votes[static_cast<std::size_t>(c)];
  for (QualityClass cls : {QualityClass::kInterference, QualityClass::kTalking}) {
    if (votes[index_of(cls)] >= 2) return cls;
  }
  for (QualityClass cls : {QualityClass::kGood, QualityClass::kPoor, QualityClass::kSilent}) {
    if (votes[index_of(cls)] == 3) return cls;
  }
  return std::nullopt;
}

std::vector<LabeledSegment> apply_consensus(const AnnotationSet& set) {
  std::vector<LabeledSegment> out;
  out.reserve(set.segments.size());
  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    const Triple& t = set.segments[i];
    out.push_back({set.recording_id, i, consensus_label(t[0], t[1], t[2])});
  }
  return out;
}

std::vector<LabeledWindow> build_labeled_windows(std::span<const LabeledSegment> segments) {
  std::vector<LabeledWindow> windows;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i <= segments.size(); ++i) {
    const bool continues = i < segments.size() && i > run_start &&
                           segments[i].consensus.has_value() &&
                           segments[i].consensus == segments[i - 1].consensus &&
                           segments[i].index == segments[i - 1].index + 1;
    if (continues) continue;
    // Close the run [run_start, i).
    if (i > run_start && segments[run_start].consensus.has_value()) {
      const std::size_t len = i - run_start;
      for (std::size_t k = 0; k + 5 <= len; ++k) {
        const LabeledSegment& first = segments[run_start + k];
        windows.push_back({first.recording_id, first.index, *first.consensus});
      }
    }
    run_start = i;
  }
  return windows;
}

ClassCounts class_histogram(std::span<const LabeledWindow> windows) {
  ClassCounts counts{};
  for (const auto& w : windows) ++counts[index_of(w.label)];
  return counts;
}

AnnotationSet read_annotations_csv(const std::filesystem::path& path, std::string recording_id) {
  std::ifstream in(path);
  if (!in) throw DataError("annotations: cannot open " + path.string());
  AnnotationSet set;
  set.recording_id = std::move(recording_id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "segment_index") continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw DataError(where + ": expected 4 columns");
    const std::size_t index = parse_index(fields[0], where);
    if (index != set.segments.size()) {
      throw DataError(where + ": segment_index " + fields[0] + " out of sequence");
    }
    Triple t{};
    for (std::size_t k = 0; k < kNumAnnotators; ++k) {
      auto label = parse_label(fields[k + 1]);
      if (!label) throw DataError(where + ": unknown label '" + fields[k + 1] + "'");
      t[k] = *label;
    }
    set.segments.push_back(t);
  }
  return set;
}

void write_annotations_csv(const std::filesystem::path& path, const AnnotationSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("annotations: cannot write " + path.string());
  out << "segment_index,annotA,annotB,annotC\n";
  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    const Triple& t = set.segments[i];
    out << i << ',' << to_token(t[0]) << ',' << to_token(t[1]) << ',' << to_token(t[2]) << '\n';
  }
}

std::vector<LabeledWindow> read_window_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("window manifest: cannot open " + path.string());
  std::vector<LabeledWindow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "recording_id") continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw DataError(where + ": expected 3 columns");
    auto cls = parse_quality_class(fields[2]);
    if (!cls) throw DataError(where + ": unknown class '" + fields[2] + "'");
    out.push_back({fields[0], parse_index(fields[1], where), *cls});
  }
  return out;
}

void write_window_manifest(const std::filesystem::path& path,
                           std::span<const LabeledWindow> windows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("window manifest: cannot write " + path.string());
  out << "recording_id,start_segment,class\n";
  for (const auto& w : windows) {
    out << w.recording_id << ',' << w.start_segment << ',' << dusq::to_token(w.label) << '\n';
  }
}

}  // namespace dusq::annotations
