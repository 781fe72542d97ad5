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

#include "dusq/train/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dusq/error.hpp"

namespace dusq::train {
namespace {

constexpr char kCacheMagic[4] = {'D', 'Q', 'S', 'C'};
constexpr std::uint32_t kCacheVersion = 2;

std::vector<std::string> split_fields(const std::string& line) {
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

std::vector<std::byte> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::uint64_t fnv1a(std::span<const std::byte> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::byte b : bytes) {
    h ^= std::to_integer<std::uint64_t>(b);
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename U>
void put_le(std::ostream& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename U>
bool get_le(std::istream& in, U& v) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == EOF) return false;
    acc |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  v = static_cast<U>(acc);
  return true;
}

std::vector<std::vector<float>> features_from_bytes(std::span<const std::byte> wav_bytes,
                                                    const std::string& id) {
  return recording_features(audio::decode_wav(wav_bytes, id));
}

// Returns nothing when the cache is absent, stale or unreadable. Layout:
// magic, version, wav hash, count, scalograms, then FNV-1a of the scalograms.
std::optional<std::vector<std::vector<float>>> read_cache(const std::filesystem::path& path,
                                                          std::uint64_t hash) {
  std::ifstream file(path, std::ios::binary);
  if (!file) return std::nullopt;
  const std::string raw((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 4 + 4 + 8 + 4;
  if (raw.size() < kHeader + 8) return std::nullopt;
  const auto* bytes = reinterpret_cast<const std::byte*>(raw.data());
  std::istringstream tail(raw.substr(raw.size() - 8));
  std::uint64_t checksum = 0;
  get_le(tail, checksum);
  if (fnv1a({bytes + kHeader, raw.size() - kHeader - 8}) != checksum) return std::nullopt;

  std::istringstream in(raw.substr(0, raw.size() - 8));
  char magic[4];
  std::uint32_t version = 0, count = 0;
  std::uint64_t stored = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kCacheMagic, 4) != 0) return std::nullopt;
  if (!get_le(in, version) || version != kCacheVersion) return std::nullopt;
  if (!get_le(in, stored) || stored != hash) return std::nullopt;
  if (!get_le(in, count)) return std::nullopt;
  std::vector<std::vector<float>> out;
  out.reserve(count);
  try {
    dsp::Scalogram s;
    for (std::uint32_t i = 0; i < count; ++i) {
      if (!dsp::read_scalogram(in, s) || s.frames() != dsp::kScalogramFrames ||
          s.bins() != dsp::kScalogramBins) {
        return std::nullopt;
      }
      out.emplace_back(s.values().begin(), s.values().end());
    }
  } catch (const DataError&) {
    return std::nullopt;
  }
  return out;
}

void write_cache(const std::filesystem::path& path, std::uint64_t hash,
                 const std::vector<std::vector<float>>& features) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write feature cache " + tmp);
    out.write(kCacheMagic, 4);
    put_le(out, kCacheVersion);
    put_le(out, hash);
    put_le(out, static_cast<std::uint32_t>(features.size()));
    std::ostringstream payload;
    for (const auto& f : features) {
      dsp::Scalogram s(dsp::kScalogramFrames, dsp::kScalogramBins);
      std::copy(f.begin(), f.end(), s.values().begin());
      dsp::write_scalogram(payload, s);
    }
    const std::string body = payload.str();
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    put_le(out, fnv1a({reinterpret_cast<const std::byte*>(body.data()), body.size()}));
    if (!out) throw DataError("write failed for feature cache " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

struct LoadedRecording {
  std::vector<std::vector<float>> features;
  std::vector<annotations::LabeledWindow> labeled;
};

LoadedRecording load_recording(const std::filesystem::path& dir, const CorpusEntry& e) {
  LoadedRecording r;
  r.features = cached_recording_features(dir, e);
  const auto set = annotations::read_annotations_csv(dir / e.annotations, e.recording_id);
  const auto segments = annotations::apply_consensus(set);
  r.labeled = annotations::build_labeled_windows(segments);
  return r;
}

}  // namespace

std::vector<CorpusEntry> read_corpus_manifest(const std::filesystem::path& corpus_dir) {
  const auto path = corpus_dir / "manifest.csv";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty manifest");
  const auto header = split_fields(line);
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("recording_id"), c_wav = column("wav"),
                    c_ann = column("annotations");
  std::vector<CorpusEntry> out;
  std::unordered_set<std::string> ids;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) throw DataError(where + ": expected " +
                                                   std::to_string(header.size()) + " fields");
    if (f[c_id].empty()) throw DataError(where + ": empty recording_id");
    if (!ids.insert(f[c_id]).second) throw DataError(where + ": duplicate recording_id " + f[c_id]);
    out.push_back({f[c_id], f[c_wav], f[c_ann]});
  }
  return out;
}

std::vector<std::vector<float>> recording_features(const audio::Recording& recording_44k) {
  static const dsp::FeatureExtractor extract;
  const auto windows = audio::windows_from_recording(recording_44k);
  std::vector<std::vector<float>> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    const auto s = extract(w.samples);
    out.emplace_back(s.values().begin(), s.values().end());
  }
  return out;
}

std::vector<std::vector<float>> cached_recording_features(const std::filesystem::path& corpus_dir,
                                                          const CorpusEntry& entry) {
  const auto wav_bytes = read_bytes(corpus_dir / entry.wav);
  const std::uint64_t hash = fnv1a(wav_bytes);
  const auto cache = corpus_dir / "cache" / (entry.recording_id + ".scal");
  if (auto hit = read_cache(cache, hash)) return std::move(*hit);
  auto features = features_from_bytes(wav_bytes, entry.recording_id);
  write_cache(cache, hash, features);
  return features;
}

std::size_t WindowDataset::add_recording(const std::string& id) {
  const auto it = std::find(recording_ids_.begin(), recording_ids_.end(), id);
  if (it != recording_ids_.end()) return static_cast<std::size_t>(it - recording_ids_.begin());
  recording_ids_.push_back(id);
  return recording_ids_.size() - 1;
}

void WindowDataset::add(std::size_t recording, std::size_t start_segment, QualityClass label,
                        std::span<const float> features) {
  if (recording >= recording_ids_.size()) throw std::out_of_range("WindowDataset: bad recording");
  if (features.size() != kFeatureSize) {
    throw std::invalid_argument("WindowDataset: features must hold 250 x 40 values");
  }
  rows_.push_back({recording, start_segment, label});
  features_.insert(features_.end(), features.begin(), features.end());
}

std::vector<std::size_t> WindowDataset::rows_of(std::span<const std::string> recording_ids) const {
  std::vector<bool> wanted(recording_ids_.size(), false);
  for (const auto& id : recording_ids) {
    const auto it = std::find(recording_ids_.begin(), recording_ids_.end(), id);
    if (it != recording_ids_.end()) wanted[static_cast<std::size_t>(it - recording_ids_.begin())] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (wanted[rows_[i].recording]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> WindowDataset::all_rows() const {
  std::vector<std::size_t> out(rows_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

ClassCounts WindowDataset::histogram(std::span<const std::size_t> rows) const {
  ClassCounts h{};
  for (std::size_t i : rows) ++h[index_of(rows_.at(i).label)];
  return h;
}

ClassCounts WindowDataset::recording_histogram(std::size_t recording) const {
  ClassCounts h{};
  for (const auto& r : rows_) {
    if (r.recording == recording) ++h[index_of(r.label)];
  }
  return h;
}

template <typename T>
nn::Tensor<T> WindowDataset::batch(std::span<const std::size_t> rows) const {
  nn::Tensor<T> out({rows.size(), dsp::kScalogramFrames, dsp::kScalogramBins});
  T* dst = out.data();
  for (std::size_t i : rows) {
    if (i >= rows_.size()) throw std::out_of_range("WindowDataset: bad row");
    const auto f = features(i);
    dst = std::transform(f.begin(), f.end(), dst, [](float v) { return static_cast<T>(v); });
  }
  return out;
}

std::vector<QualityClass> WindowDataset::labels(std::span<const std::size_t> rows) const {
  std::vector<QualityClass> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(rows_.at(i).label);
  return out;
}

template nn::Tensor<float> WindowDataset::batch(std::span<const std::size_t>) const;
template nn::Tensor<double> WindowDataset::batch(std::span<const std::size_t>) const;

WindowDataset load_corpus(const std::filesystem::path& corpus_dir, const LoadProgress& progress) {
  const auto entries = read_corpus_manifest(corpus_dir);
  WindowDataset data;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto rec = load_recording(corpus_dir, e);
    const std::size_t ri = data.add_recording(e.recording_id);
    for (const auto& w : rec.labeled) {
      if (w.start_segment >= rec.features.size()) {
        throw DataError(e.recording_id + ": annotations label window " +
                        std::to_string(w.start_segment) + " beyond the end of the audio");
      }
      data.add(ri, w.start_segment, w.label, rec.features[w.start_segment]);
    }
    if (progress) progress(i + 1, entries.size(), e.recording_id);
  }
  return data;
}

WindowDataset load_windows(const std::filesystem::path& corpus_dir,
                           std::span<const annotations::LabeledWindow> windows,
                           const LoadProgress& progress) {
  const auto entries = read_corpus_manifest(corpus_dir);
  std::map<std::string, const CorpusEntry*> by_id;
  for (const auto& e : entries) by_id[e.recording_id] = &e;
  std::map<std::string, std::vector<const annotations::LabeledWindow*>> wanted;
  std::vector<std::string> order;
  for (const auto& w : windows) {
    if (!by_id.count(w.recording_id)) {
      throw DataError("window manifest names unknown recording " + w.recording_id);
    }
    if (!wanted.count(w.recording_id)) order.push_back(w.recording_id);
    wanted[w.recording_id].push_back(&w);
  }
  WindowDataset data;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& id = order[i];
    const auto features = cached_recording_features(corpus_dir, *by_id[id]);
    const std::size_t ri = data.add_recording(id);
    for (const auto* w : wanted[id]) {
      if (w->start_segment >= features.size()) {
        throw DataError(id + ": window " + std::to_string(w->start_segment) +
                        " beyond the end of the audio");
      }
      data.add(ri, w->start_segment, w->label, features[w->start_segment]);
    }
    if (progress) progress(i + 1, order.size(), id);
  }
  return data;
}

}  // namespace dusq::train
