// ust/wav_io.cc

// Copyright 2026  The ust Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ust/wav_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ust {

namespace {

struct ChunkHeader {
  char id[4];
  std::uint32_t size;
};

std::uint32_t rd_u32(const unsigned char* p) { return read_le<std::uint32_t>(p); }
std::uint16_t rd_u16(const unsigned char* p) { return read_le<std::uint16_t>(p); }

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("read_wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = rd_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw DataError("read_wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw DataError("read_wav: short fmt chunk in " + path);
      format = rd_u16(bytes.data() + body + 0);
      channels = rd_u16(bytes.data() + body + 2);
      sample_rate = rd_u32(bytes.data() + body + 4);
      bits = rd_u16(bytes.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }

  if (format != 1) throw DataError("read_wav: only PCM supported: " + path);
  if (channels != 1 && channels != 2)
    throw DataError("read_wav: channel count must be 1 or 2: " + path);
  if (bits != 16 && bits != 24)
    throw DataError("read_wav: only 16/24-bit PCM supported: " + path);
  if (data == nullptr) throw DataError("read_wav: no data chunk: " + path);

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t n = data_size / frame_size;

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.channels.assign(channels, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_size + c * bytes_per_sample;
      double v;
      if (bits == 16) {
        auto s = static_cast<std::int16_t>(rd_u16(p));
        v = static_cast<double>(s) / 32768.0;
      } else {
        std::int32_t s = static_cast<std::int32_t>(p[0]) |
                         (static_cast<std::int32_t>(p[1]) << 8) |
                         (static_cast<std::int32_t>(p[2]) << 16);
        if (s & 0x800000) s |= ~0xFFFFFF;  // sign-extend 24 -> 32
        v = static_cast<double>(s) / 8388608.0;
      }
      w.channels[c][i] = v;
    }
  }
  w.validate();
  return w;
}

void write_wav16(const std::string& path, const Waveform& w) {
  w.validate();
  const auto channels = static_cast<std::uint16_t>(w.n_channels());
  const std::size_t n = w.n_samples();
  const std::uint32_t data_size = static_cast<std::uint32_t>(n * channels * 2);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  auto put = [&out](const char* s) {
    out.insert(out.end(), s, s + 4);
  };
  put("RIFF");
  append_le<std::uint32_t>(&out, 36 + data_size);
  put("WAVE");
  put("fmt ");
  append_le<std::uint32_t>(&out, 16);
  append_le<std::uint16_t>(&out, 1);  // PCM
  append_le<std::uint16_t>(&out, channels);
  append_le<std::uint32_t>(&out, static_cast<std::uint32_t>(w.sample_rate));
  append_le<std::uint32_t>(&out,
                           static_cast<std::uint32_t>(w.sample_rate) * channels * 2);
  append_le<std::uint16_t>(&out, static_cast<std::uint16_t>(channels * 2));
  append_le<std::uint16_t>(&out, 16);
  put("data");
  append_le<std::uint32_t>(&out, data_size);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      double v = std::clamp(w.channels[c][i], -1.0, 1.0);
      auto s = static_cast<std::int16_t>(std::lrint(v * 32767.0));
      append_le<std::uint16_t>(&out, static_cast<std::uint16_t>(s));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("write_wav16: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write_wav16: write failed: " + path);
}

}  // namespace ust
