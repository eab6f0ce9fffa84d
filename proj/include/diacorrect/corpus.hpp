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

#ifndef DIACORRECT_CORPUS_HPP_
#define DIACORRECT_CORPUS_HPP_

#include <array>
#include <string>
#include <vector>

#include "diacorrect/common.hpp"
#include "diacorrect/wav.hpp"

namespace diacorrect {

// One reference or hypothesis speech interval.
struct Segment {
  std::string recording_id;
  double onset = 0.0;     // seconds
  double duration = 0.0;  // seconds, > 0
  std::string speaker;
};

// Per-frame, per-speaker binary activity on the global 0.1 s grid.
struct LabelMatrix {
  BinaryMatrix values;  // T x C
  double frame_duration = kFrameDuration;
  std::vector<std::string> speakers;  // column order
};

// Per-frame, per-speaker activity logits on the same grid; logit 0 is the
// 0.5-probability decision boundary.
struct SapSequence {
  MatrixF values;  // T x C
  double frame_duration = kFrameDuration;
  std::vector<std::string> speakers;
};

// Controls for the corruptible oracle that emulates an imperfect initial
// diarization system on top of ground-truth labels.
struct CorruptionConfig {
  double flip_prob = 0.0;       // per-cell chance the target class is flipped
  double logit_noise_std = 0.0; // additive Gaussian noise on logits
  double logit_scale = 4.0;     // clean-class logit magnitude (sigma)
  double global_bias = 0.0;     // added to every logit, models miscalibration
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// RTTM
// ---------------------------------------------------------------------------

// Parses RTTM text: one Segment per SPEAKER line, other line types ignored.
// Field order: type file channel onset duration <NA> <NA> speaker <NA> <NA>.
// Throws ParseError naming the 1-based line number on malformed lines.
std::vector<Segment> parse_rttm(const std::string& text);

// Emits one SPEAKER line per segment, onset/duration with 2 decimals,
// each line newline-terminated. Throws on negative durations.
std::string write_rttm(const std::vector<Segment>& segments);

std::vector<Segment> read_rttm_file(const std::string& path);
void write_rttm_file(const std::string& path, const std::vector<Segment>& segments);

// ---------------------------------------------------------------------------
// Label grids
// ---------------------------------------------------------------------------

// Rasterizes segments: cell (t, c) is 1 iff the frame midpoint
// (t + 0.5) * frame_duration lies inside [onset, onset + duration) of some
// segment of speaker c. Throws if a segment names an unknown speaker.
LabelMatrix segments_to_labels(const std::vector<Segment>& segments,
                               const std::vector<std::string>& speakers,
                               Eigen::Index num_frames,
                               double frame_duration = kFrameDuration);

// Inverse mapping: maximal runs of 1s per column become segments.
// Identity with segments_to_labels on frame-aligned input.
std::vector<Segment> labels_to_segments(const LabelMatrix& labels,
                                        const std::string& recording_id = "");

// ---------------------------------------------------------------------------
// Toy conversation simulator
// ---------------------------------------------------------------------------

// Sampling targets for the simulator, defaults tuned toward 2-speaker
// telephony statistics (~12.8% silence, ~8.4% overlap).
struct SimulationStats {
  double silence_frac = 0.128;
  double overlap_frac = 0.0837;
  double mean_turn = 2.5;          // seconds
  double overlap_prob = 0.55;      // chance a turn change overlaps
  // Spectral band (Hz) per synthetic voice; bands are disjoint so the
  // speech encoder can tell the speakers apart.
  std::array<std::array<double, 2>, 2> bands = {{{250.0, 1000.0}, {1600.0, 3000.0}}};
};

struct SimulatedConversation {
  AudioClip audio;               // the 2-speaker mixture
  LabelMatrix labels;            // exact activity of the rendered segments
  std::vector<Segment> segments; // same content as labels, interval form
  std::array<std::vector<float>, 2> stems;  // per-speaker rendered signals
};

// Deterministic per seed. Turn boundaries are snapped to the 0.1 s frame
// grid so rendered audio, labels and RTTM stay exactly consistent.
SimulatedConversation simulate_conversation(std::uint64_t seed,
                                            double target_duration,
                                            const SimulationStats& stats = {});

// Imperfect initial SAPs from ground truth: +/-logit_scale per class, random
// class flips, Gaussian noise, then a global bias. Deterministic per seed.
SapSequence corrupt_oracle(const LabelMatrix& labels, const CorruptionConfig& cfg);

// ---------------------------------------------------------------------------
// SAP file format (DCSAP01)
// ---------------------------------------------------------------------------

// Binary: magic "DCSAP01\n", u64 T, u64 C, C speaker names (u32 byte length
// + UTF-8 bytes), then row-major little-endian float32 logits.
void write_sap(const std::string& path, const SapSequence& sap);
SapSequence read_sap(const std::string& path);

}  // namespace diacorrect

#endif  // DIACORRECT_CORPUS_HPP_
