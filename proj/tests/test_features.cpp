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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "diacorrect/features.hpp"
#include "diacorrect/wav.hpp"
#include "oracles.hpp"

using namespace diacorrect;

namespace {

AudioClip tone(double freq, double seconds, double amp = 0.5) {
  AudioClip clip;
  clip.sample_rate = kCorpusSampleRate;
  const auto n = static_cast<std::size_t>(seconds * kCorpusSampleRate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = static_cast<float>(
        amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) /
                       kCorpusSampleRate));
  }
  return clip;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("logmel: 1 s of silence -> 98 frames, all at the log floor") {
  AudioClip clip;
  clip.samples.assign(8000, 0.0f);
  const MelFrames mel = compute_logmel(clip);
  CHECK(mel.values.rows() == 98);  // floor((8000-200)/80)+1
  CHECK(mel.values.cols() == 23);
  CHECK((mel.values.array() == kLogFloor).all());
}

TEST_CASE("logmel: frame-count formula for 2 s input") {
  AudioClip clip;
  clip.samples.assign(16000, 0.01f);
  CHECK(compute_logmel(clip).values.rows() == 198);
}

TEST_CASE("logmel: 1 kHz tone peaks in the band whose center is nearest 1 kHz") {
  const AudioClip clip = tone(1000.0, 0.5);
  const MelFrames mel = compute_logmel(clip);
  const auto centers = mel_filter_centers(23, kCorpusSampleRate);
  int nearest = 0;
  for (int m = 1; m < 23; ++m) {
    if (std::abs(centers[static_cast<std::size_t>(m)] - 1000.0) <
        std::abs(centers[static_cast<std::size_t>(nearest)] - 1000.0)) {
      nearest = m;
    }
  }
  for (Eigen::Index t = 0; t < mel.values.rows(); ++t) {
    Eigen::Index argmax = 0;
    mel.values.row(t).maxCoeff(&argmax);
    CHECK(argmax == nearest);
  }
}

TEST_CASE("logmel: every frame matches the naive-DFT oracle") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<float> dist(-0.8f, 0.8f);
  AudioClip clip;
  clip.samples.resize(1600);  // 0.2 s -> 18 frames
  for (auto& s : clip.samples) s = dist(gen);

  const MelFrames mel = compute_logmel(clip);
  REQUIRE(mel.values.rows() == 18);
  for (Eigen::Index t = 0; t < mel.values.rows(); ++t) {
    const auto ref = oracles::naive_logmel_frame(
        clip.samples.data() + t * 80, 200, kCorpusSampleRate, 23);
    for (int m = 0; m < 23; ++m) {
      CHECK(mel.values(t, m) ==
            doctest::Approx(ref[static_cast<std::size_t>(m)]).epsilon(1e-5));
    }
  }
}

TEST_CASE("logmel: errors") {
  AudioClip clip;
  clip.samples.assign(100, 0.0f);  // shorter than the 200-sample window
  CHECK_THROWS_WITH_AS(compute_logmel(clip), "audio too short",
                       std::invalid_argument);
  clip.samples.assign(8000, 0.0f);
  clip.sample_rate = 16000;
  CHECK_THROWS_AS(compute_logmel(clip), std::invalid_argument);
}

TEST_CASE("stacking: single frame is tiled 15 times") {
  MelFrames mel;
  mel.values.resize(1, 23);
  for (int m = 0; m < 23; ++m) mel.values(0, m) = static_cast<float>(m);
  const FeatureSequence out = stack_and_subsample(mel);
  REQUIRE(out.values.rows() == 1);
  REQUIRE(out.values.cols() == 345);
  for (int k = 0; k < 15; ++k) {
    for (int m = 0; m < 23; ++m) {
      CHECK(out.values(0, 23 * k + m) == static_cast<float>(m));
    }
  }
}

TEST_CASE("stacking: 100 mel frames -> 10 x 345") {
  MelFrames mel;
  mel.values = MatrixF::Random(100, 23);
  const FeatureSequence out = stack_and_subsample(mel);
  CHECK(out.values.rows() == 10);
  CHECK(out.values.cols() == 345);
  CHECK(out.frame_duration == kFrameDuration);
}

TEST_CASE("stacking: center slice equals mel frame 10*t; edges replicate") {
  MelFrames mel;
  mel.values = MatrixF::Random(73, 23);
  const FeatureSequence out = stack_and_subsample(mel);
  REQUIRE(out.values.rows() == 8);  // ceil(73/10)
  for (Eigen::Index t = 0; t < out.values.rows(); ++t) {
    CHECK((out.values.block(t, 7 * 23, 1, 23).array() ==
           mel.values.row(10 * t).array())
              .all());
    // full window with clamped indices
    for (int k = -7; k <= 7; ++k) {
      const Eigen::Index src = std::clamp<Eigen::Index>(10 * t + k, 0, 72);
      CHECK((out.values.block(t, (k + 7) * 23, 1, 23).array() ==
             mel.values.row(src).array())
                .all());
    }
  }
}

TEST_CASE("stacking: empty input rejected") {
  MelFrames mel;
  mel.values.resize(0, 23);
  CHECK_THROWS_AS(stack_and_subsample(mel), std::invalid_argument);
}

TEST_CASE("extract_features: width 345, length ceil(T0/10), deterministic") {
  const AudioClip clip = tone(440.0, 1.3);
  const FeatureSequence a = extract_features(clip);
  const FeatureSequence b = extract_features(clip);
  const Eigen::Index t0 = compute_logmel(clip).values.rows();
  CHECK(a.values.cols() == 345);
  CHECK(a.values.rows() == (t0 + 9) / 10);
  CHECK((a.values.array() == b.values.array()).all());  // bit-identical
  CHECK(a.values.allFinite());
  CHECK((a.values.array() >= kLogFloor).all());
}

TEST_CASE("feature cache: bit-exact round-trip and error cases") {
  FeatureSequence feats;
  feats.values = MatrixF::Random(17, 345);
  const std::string path = temp_path("dc_test_cache.feat");
  write_feature_cache(path, feats);
  const FeatureSequence back = read_feature_cache(path);
  CHECK((back.values.array() == feats.values.array()).all());

  // truncation
  {
    std::ofstream f(path, std::ios::binary);
    f << "DCFEAT1\n";
  }
  CHECK_THROWS_AS(read_feature_cache(path), FormatError);
  // wrong magic
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTFEAT0";
  }
  CHECK_THROWS_AS(read_feature_cache(path), FormatError);
  CHECK_THROWS_AS(read_feature_cache(temp_path("dc_no_such_file.feat")),
                  FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("wav: 16-bit round-trip within quantization error") {
  AudioClip clip = tone(700.0, 0.25, 0.9);
  const std::string path = temp_path("dc_test_roundtrip.wav");
  write_wav(path, clip);
  const AudioClip back = read_wav(path);
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(back.sample_rate == clip.sample_rate);
  // write rounds x*32767, read divides by 32768, so the round-trip error is
  // |round(x*32767)/32768 - x| <= (0.5 + |x|)/32768 <= 1.5/32768
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 1.5f / 32768.0f);
  }
  std::filesystem::remove(path);
}

TEST_CASE("wav: clamping of out-of-range samples") {
  AudioClip clip;
  clip.samples = {2.0f, -2.0f, 0.0f};
  const std::string path = temp_path("dc_test_clamp.wav");
  write_wav(path, clip);
  const AudioClip back = read_wav(path);
  CHECK(back.samples[0] == doctest::Approx(1.0f).epsilon(1e-3));
  CHECK(back.samples[1] == doctest::Approx(-1.0f).epsilon(1e-3));
  CHECK(back.samples[2] == 0.0f);
  std::filesystem::remove(path);
}

TEST_CASE("wav: 32-bit float files are readable") {
  // hand-assembled minimal IEEE-float WAV, 3 samples
  const float samples[3] = {0.25f, -0.5f, 1.0f};
  std::string bytes = "RIFF";
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto put_u16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xff));
    bytes.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  put_u32(36 + 12);
  bytes += "WAVEfmt ";
  put_u32(16);
  put_u16(3);  // IEEE float
  put_u16(1);
  put_u32(8000);
  put_u32(8000 * 4);
  put_u16(4);
  put_u16(32);
  bytes += "data";
  put_u32(12);
  const char* raw = reinterpret_cast<const char*>(samples);
  bytes.append(raw, 12);

  const std::string path = temp_path("dc_test_float.wav");
  {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  const AudioClip clip = read_wav(path);
  REQUIRE(clip.samples.size() == 3);
  CHECK(clip.samples[0] == 0.25f);
  CHECK(clip.samples[1] == -0.5f);
  CHECK(clip.samples[2] == 1.0f);
  std::filesystem::remove(path);
}

TEST_CASE("wav: malformed files rejected") {
  const std::string path = temp_path("dc_test_bad.wav");
  {
    std::ofstream f(path, std::ios::binary);
    f << "RIFFxxxxWAVX";
  }
  CHECK_THROWS_AS(read_wav(path), FormatError);
  CHECK_THROWS_AS(read_wav(temp_path("dc_no_such.wav")), FormatError);
  std::filesystem::remove(path);
}
