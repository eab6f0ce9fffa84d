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

#ifndef DIACORRECT_PRUNING_HPP_
#define DIACORRECT_PRUNING_HPP_

#include <string>
#include <vector>

#include "diacorrect/corpus.hpp"
#include "diacorrect/scoring.hpp"

namespace diacorrect {

// One recording whose initial SAP gets scored against its reference labels.
struct ScoredRecording {
  std::string id;
  SapSequence sap;
  LabelMatrix labels;
};

struct PruneRow {
  std::string id;
  double der = 0.0;   // percent; == miss + fa + conf
  double miss = 0.0;
  double fa = 0.0;
  double conf = 0.0;
};

struct PruneTable {
  std::vector<PruneRow> rows;
};

// Baseline DER per recording: SAP thresholded at logit 0, collar 0, no
// median filter, per-recording optimal speaker mapping. Throws with the
// recording id on a sap/label length mismatch.
PruneTable score_corpus(const std::vector<ScoredRecording>& corpus,
                        int jobs = 1);

// Recording ids with lower <= der <= upper (inclusive on both ends), in
// table order. Throws std::invalid_argument when lower >= upper.
std::vector<std::string> select_hard(const PruneTable& table, double lower,
                                     double upper = 40.0);

// Tab-separated with a header row: recording_id der miss fa conf.
void write_prune_table(const std::string& path, const PruneTable& table);
PruneTable read_prune_table(const std::string& path);

}  // namespace diacorrect

#endif  // DIACORRECT_PRUNING_HPP_
