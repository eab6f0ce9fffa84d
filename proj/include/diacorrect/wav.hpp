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

#ifndef DIACORRECT_WAV_HPP_
#define DIACORRECT_WAV_HPP_

#include <string>
#include <vector>

#include "diacorrect/common.hpp"

namespace diacorrect {

// Mono recording, amplitudes in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kCorpusSampleRate;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a mono RIFF/WAVE file. Accepts 16-bit PCM and 32-bit IEEE float;
// integer samples are scaled to [-1, 1].
AudioClip read_wav(const std::string& path);

// Writes 16-bit PCM; samples are clamped to [-1, 1] before quantization.
void write_wav(const std::string& path, const AudioClip& audio);

}  // namespace diacorrect

#endif  // DIACORRECT_WAV_HPP_
