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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"

namespace dusq::audio {
namespace {

std::uint32_t read_u32(std::span<const std::byte> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::byte> b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<std::uint16_t>(b[at]) |
                                    (static_cast<std::uint16_t>(b[at + 1]) << 8));
}

bool tag_is(std::span<const std::byte> b, std::size_t at, std::string_view tag) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (static_cast<char>(b[at + i]) != tag[i]) return false;
  }
  return true;
}

void put_tag(std::vector<std::byte>& out, std::string_view tag) {
  for (char c : tag) out.push_back(static_cast<std::byte>(c));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xFF));
  out.push_back(static_cast<std::byte>(v >> 8));
}

struct FormatChunk {
  std::uint16_t audio_format = 0;
  std::uint16_t num_channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

}  // namespace

Recording decode_wav(std::span<const std::byte> bytes, std::string id) {
  if (bytes.size() < 12) throw DataError("wav: file too short for RIFF header");
  if (!tag_is(bytes, 0, "RIFF")) throw DataError("wav: RIFF chunk id missing");
  if (!tag_is(bytes, 8, "WAVE")) throw DataError("wav: WAVE format tag missing");

  std::optional<FormatChunk> fmt;
  std::optional<std::span<const std::byte>> data;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw DataError("wav: chunk size exceeds file length (truncated payload)");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw DataError("wav: fmt chunk shorter than 16 bytes");
      FormatChunk f;
      f.audio_format = read_u16(bytes, body);
      f.num_channels = read_u16(bytes, body + 2);
      f.sample_rate = read_u32(bytes, body + 4);
      f.bits_per_sample = read_u16(bytes, body + 14);
      fmt = f;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
    }
    pos = body + size + (size & 1u);
  }

  if (!fmt) throw DataError("wav: fmt chunk missing");
  if (fmt->audio_format != 1) {
    throw DataError("wav: audio_format " + std::to_string(fmt->audio_format) +
                    " is not PCM (1)");
  }
  if (fmt->num_channels != 1) {
    throw DataError("wav: num_channels " + std::to_string(fmt->num_channels) +
                    " is not mono");
  }
  if (fmt->bits_per_sample != 16) {
    throw DataError("wav: bits_per_sample " + std::to_string(fmt->bits_per_sample) +
                    " is not 16");
  }
  if (fmt->sample_rate == 0) throw DataError("wav: sample_rate is zero");
  if (!data) throw DataError("wav: data chunk missing");
  if (data->size() % 2 != 0) throw DataError("wav: data chunk size is odd");
  if (data->empty()) throw DataError("wav: data chunk is empty");

  Recording r;
  r.id = std::move(id);
  r.sample_rate_hz = static_cast<int>(fmt->sample_rate);
  r.samples.resize(data->size() / 2);
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(*data, 2 * i));
    r.samples[i] = static_cast<double>(raw) / 32768.0;
  }
  return r;
}

Recording read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav: cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  try {
    return decode_wav(bytes, path.stem().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::int16_t quantize_sample(double x) {
  const double scaled = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

std::vector<std::byte> encode_wav(std::span<const double> samples, int sample_rate_hz) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::byte> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double x : samples) put_u16(out, static_cast<std::uint16_t>(quantize_sample(x)));
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz) {
  const auto bytes = encode_wav(samples, sample_rate_hz);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("wav: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("wav: write failed for " + path.string());
}

}  // namespace dusq::audio
