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

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "dusq/dsp.hpp"
#include "dusq/error.hpp"

namespace dusq::dsp {
namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::byte> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::byte> encode_scalogram(const Scalogram& s) {
  std::vector<std::byte> out;
  out.reserve(8 + 4 * s.values().size());
  put_u32(out, static_cast<std::uint32_t>(s.frames()));
  put_u32(out, static_cast<std::uint32_t>(s.bins()));
  for (double x : s.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

Scalogram decode_scalogram(std::span<const std::byte> bytes) {
  if (bytes.size() < 8) throw DataError("scalogram: header truncated");
  const std::size_t frames = get_u32(bytes, 0);
  const std::size_t bins = get_u32(bytes, 4);
  if (bytes.size() != 8 + 4 * frames * bins) {
    throw DataError("scalogram: payload size does not match dims");
  }
  Scalogram s(frames, bins);
  auto v = s.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, 8 + 4 * i)));
  }
  return s;
}

void write_scalogram(std::ostream& out, const Scalogram& s) {
  const auto bytes = encode_scalogram(s);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

bool read_scalogram(std::istream& in, Scalogram& s) {
  std::vector<std::byte> header(8);
  in.read(reinterpret_cast<char*>(header.data()), 8);
  if (in.gcount() == 0) return false;
  if (in.gcount() != 8) throw DataError("scalogram: header truncated");
  const std::size_t frames = get_u32(header, 0);
  const std::size_t bins = get_u32(header, 4);
  std::vector<std::byte> bytes(8 + 4 * frames * bins);
  std::memcpy(bytes.data(), header.data(), 8);
  in.read(reinterpret_cast<char*>(bytes.data() + 8), static_cast<std::streamsize>(bytes.size() - 8));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size() - 8) {
    throw DataError("scalogram: payload truncated");
  }
  s = decode_scalogram(bytes);
  return true;
}

}  // namespace dusq::dsp
