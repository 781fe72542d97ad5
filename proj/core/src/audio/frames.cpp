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

#include <array>
#include <istream>
#include <ostream>

#include "dusq/audio_io.hpp"
#include "dusq/error.hpp"

namespace dusq::audio {

std::optional<std::vector<std::int16_t>> read_frame(std::istream& in) {
  std::array<unsigned char, 4> header{};
  in.read(reinterpret_cast<char*>(header.data()), 4);
  if (in.gcount() == 0) return std::nullopt;
  if (in.gcount() != 4) throw DataError("frame: truncated length prefix");
  const std::uint32_t count = static_cast<std::uint32_t>(header[0]) |
                              (static_cast<std::uint32_t>(header[1]) << 8) |
                              (static_cast<std::uint32_t>(header[2]) << 16) |
                              (static_cast<std::uint32_t>(header[3]) << 24);
  if (count == 0) return std::nullopt;
  std::vector<unsigned char> raw(static_cast<std::size_t>(count) * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw DataError("frame: truncated payload (expected " + std::to_string(count) + " samples)");
  }
  std::vector<std::int16_t> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(raw[2 * i]) |
                                           (static_cast<std::uint16_t>(raw[2 * i + 1]) << 8));
  }
  return samples;
}

void write_frame(std::ostream& out, std::span<const std::int16_t> samples) {
  const auto count = static_cast<std::uint32_t>(samples.size());
  std::array<char, 4> header{};
  for (int i = 0; i < 4; ++i) header[static_cast<std::size_t>(i)] = static_cast<char>((count >> (8 * i)) & 0xFF);
  out.write(header.data(), 4);
  std::vector<char> raw(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(samples[i]);
    raw[2 * i] = static_cast<char>(v & 0xFF);
    raw[2 * i + 1] = static_cast<char>(v >> 8);
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

}  // namespace dusq::audio
