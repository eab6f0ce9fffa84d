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

#ifndef DIACORRECT_CALIBRATION_HPP_
#define DIACORRECT_CALIBRATION_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "diacorrect/corpus.hpp"
#include "diacorrect/scoring.hpp"

namespace diacorrect {

struct CalibrationCurve {
  std::vector<std::pair<double, double>> points;  // (bias, corpus DER %)
  double best_bias = 0.0;
  double best_der = 0.0;
};

// Class-conditional logit histograms over shared equal-width bins spanning
// the observed logit range. Cell (t, c) goes to speech_counts when the
// reference label is 1, else to silence_counts.
struct SapHistogram {
  std::vector<double> bin_edges;             // size bins + 1
  std::vector<std::int64_t> speech_counts;   // size bins
  std::vector<std::int64_t> silence_counts;  // size bins
};

// Subtracts a scalar bias from every logit; shape/speaker order preserved.
// apply_bias(Z, b) thresholded at 0 decides exactly like Z thresholded at b.
SapSequence apply_bias(const SapSequence& sap, double bias);

// Scores the corpus DER of bias-shifted, thresholded SAPs for every grid
// value. Best point = minimum DER; ties prefer the smaller |bias|, then the
// smaller bias. Throws on an empty grid or empty corpus.
CalibrationCurve sweep_bias(
    const std::vector<std::pair<SapSequence, std::vector<Segment>>>& pairs,
    const std::vector<double>& grid, const ScoringConfig& cfg, int jobs = 1);

// Inclusive grid [lo, lo+step, ...] up to hi (within half a step).
std::vector<double> make_grid(double lo, double hi, double step);

SapHistogram sap_histogram(
    const std::vector<std::pair<SapSequence, LabelMatrix>>& pairs, int bins);

// Tab-separated, header rows included ("bias\tder"; "bin_center\tspeech\tsilence").
void write_calibration_curve(const std::string& path, const CalibrationCurve& curve);
void write_sap_histogram(const std::string& path, const SapHistogram& hist);

}  // namespace diacorrect

#endif  // DIACORRECT_CALIBRATION_HPP_
