// Copyright 2026 The DiaCorrect-CPP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diacorrect/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace diacorrect {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const unsigned char* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  int format = 0;
  const unsigned char* payload = nullptr;
  std::size_t payload_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const char* id = reinterpret_cast<const char*>(data + pos);
    std::uint32_t len = read_u32(data + pos + 4);
    std::size_t body = pos + 8;
    if (body + len > n) throw FormatError("truncated wav chunk: " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError("bad fmt chunk: " + path);
      format = read_u16(data + body);
      channels = read_u16(data + body + 2);
      sample_rate = static_cast<int>(read_u32(data + body + 4));
      bits = read_u16(data + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      payload = data + body;
      payload_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (payload == nullptr || channels == 0) {
    throw FormatError("wav file missing fmt/data chunk: " + path);
  }
  if (channels != 1) throw FormatError("only mono wav supported: " + path);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  if (format == 1 && bits == 16) {
    std::size_t count = payload_len / 2;
    clip.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::int16_t v = static_cast<std::int16_t>(read_u16(payload + 2 * i));
      clip.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    std::size_t count = payload_len / 4;
    clip.samples.resize(count);
    std::memcpy(clip.samples.data(), payload, count * 4);
  } else {
    throw FormatError("unsupported wav encoding (need 16-bit PCM or 32-bit float): " +
                      path);
  }
  return clip;
}

void write_wav(const std::string& path, const AudioClip& audio) {
  const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (float s : audio.samples) {
    float c = std::clamp(s, -1.0f, 1.0f);
    int v = static_cast<int>(std::lrintf(c * 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write wav file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("short write to wav file: " + path);
}

}  // namespace diacorrect
