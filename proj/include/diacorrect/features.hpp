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

#ifndef DIACORRECT_FEATURES_HPP_
#define DIACORRECT_FEATURES_HPP_

#include <string>

#include "diacorrect/common.hpp"
#include "diacorrect/wav.hpp"

namespace diacorrect {

// Log-Mel analysis frames at the 10 ms hop, before stacking/subsampling.
//
// Conventions (fixed so results are bit-exact across runs):
//   - Hann analysis window, symmetric form 0.5 - 0.5*cos(2*pi*n/(L-1)).
//   - Frames zero-padded to a 256-point FFT, magnitude spectrum.
//   - 23 triangular filters on the HTK Mel scale covering 0-4000 Hz.
//   - Filter outputs floored at 1e-10 before the natural log, so digital
//     silence maps to kLogFloor instead of -inf.
//   - No per-utterance normalization.
struct MelFrames {
  MatrixF values;  // T0 x n_mels, natural-log energies
  double frame_hop = 0.010;
  double frame_len = 0.025;
};

// Stacked, subsampled features: each row is 15 consecutive Mel frames
// (center +/- 7, edges replicated) taken every 10th frame, giving one
// 345-dimensional vector per 100 ms.
struct FeatureSequence {
  MatrixF values;  // T x 345
  double frame_duration = kFrameDuration;
};

inline constexpr float kLogFloor = -23.025850929940457f;  // log(1e-10)

MelFrames compute_logmel(const AudioClip& audio, int n_mels = 23,
                         double win = 0.025, double hop = 0.010);

FeatureSequence stack_and_subsample(const MelFrames& mel, int context = 7,
                                    int factor = 10);

// compute_logmel followed by stack_and_subsample.
FeatureSequence extract_features(const AudioClip& audio);

// Center frequencies (Hz) of the triangular Mel filters, for analysis
// and tests.
std::vector<double> mel_filter_centers(int n_mels, int sample_rate,
                                       double f_lo = 0.0, double f_hi = 4000.0);

// Feature cache, binary: magic "DCFEAT1\n", u64 T, u64 dim, row-major
// little-endian float32.
void write_feature_cache(const std::string& path, const FeatureSequence& features);
FeatureSequence read_feature_cache(const std::string& path);

}  // namespace diacorrect

#endif  // DIACORRECT_FEATURES_HPP_
