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

#ifndef DIACORRECT_SCORING_HPP_
#define DIACORRECT_SCORING_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "diacorrect/corpus.hpp"
#include "diacorrect/features.hpp"
#include "diacorrect/model.hpp"

namespace diacorrect {

struct ScoringConfig {
  double collar = 0.0;        // seconds excluded around each ref boundary
  int median_frames = 1;      // odd; 1 = no filtering
  double threshold_logit = 0.0;  // logit 0 <=> probability 0.5
  double scoring_resolution = 0.01;  // seconds per scoring frame

  void validate() const;  // throws std::invalid_argument
};

// DER decomposition in percent of reference speaker time within scored
// regions. der == miss + fa + conf by construction (shared denominator).
struct DerBreakdown {
  double der = 0.0;
  double miss = 0.0;
  double fa = 0.0;
  double conf = 0.0;
  double scored_speech = 0.0;  // reference speaker-seconds actually scored
  double scored_time = 0.0;    // wall-clock seconds not excluded by collars
};

// Majority filter per speaker column. Window of `width` frames centered on
// each frame; edge windows shrink to the available frames; an exact tie
// (possible only for shrunken even-size windows) keeps the original value.
LabelMatrix median_filter(const LabelMatrix& labels, int width);

// Injective partial mapping hyp speaker -> ref speaker maximizing total
// co-occurring speech time (collar-free, sampled at 0.01 s). Brute force for
// <= 3 speakers per side, exact subset-DP assignment otherwise. Hyp speakers
// with no useful match stay unmapped.
std::map<std::string, std::string> optimal_speaker_map(
    const std::vector<Segment>& ref, const std::vector<Segment>& hyp);

// Frame-counting DER at cfg.scoring_resolution. Frames whose midpoint lies
// strictly within `collar` of any reference segment boundary are excluded
// (so collar 0 excludes nothing). The speaker mapping is recomputed over the
// scored frames. Per scored frame, with R active ref and H active hyp
// speakers and k of them correctly paired:
//   miss += max(0, R-H), fa += max(0, H-R), conf += min(R, H) - k,
// all normalized by total scored reference speaker time.
DerBreakdown der(const std::vector<Segment>& ref, const std::vector<Segment>& hyp,
                 const ScoringConfig& cfg);

// Thresholds SAP logits (strictly above cfg.threshold_logit), applies the
// median filter, and converts runs to segments.
std::vector<Segment> sap_to_segments(const SapSequence& sap,
                                     const ScoringConfig& cfg,
                                     const std::string& recording_id = "");

// Forward pass -> threshold at logit 0 (probability 0.5) -> median filter ->
// segments -> der against the reference.
std::pair<std::vector<Segment>, DerBreakdown> infer_and_score(
    Model& model, const FeatureSequence& features, const SapSequence& sap,
    const std::vector<Segment>& ref, const ScoringConfig& cfg,
    const std::string& recording_id = "");

// Corpus-level breakdown: components re-weighted by each recording's scored
// reference speaker time (equivalent to pooling all scored frames).
DerBreakdown aggregate_der(const std::vector<DerBreakdown>& parts);

}  // namespace diacorrect

#endif  // DIACORRECT_SCORING_HPP_
