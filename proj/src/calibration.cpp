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

#include "diacorrect/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "diacorrect/parallel.hpp"

namespace diacorrect {

SapSequence apply_bias(const SapSequence& sap, double bias) {
  if (!std::isfinite(bias)) throw std::invalid_argument("bias must be finite");
  SapSequence out = sap;
  out.values.array() -= static_cast<float>(bias);
  return out;
}

CalibrationCurve sweep_bias(
    const std::vector<std::pair<SapSequence, std::vector<Segment>>>& pairs,
    const std::vector<double>& grid, const ScoringConfig& cfg, int jobs) {
  if (pairs.empty()) throw std::invalid_argument("sweep_bias: no recordings");
  if (grid.empty()) throw std::invalid_argument("sweep_bias: empty grid");
  cfg.validate();

  std::vector<double> ders(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t g) {
    std::vector<DerBreakdown> parts;
    parts.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const SapSequence shifted = apply_bias(pairs[i].first, grid[g]);
      const auto hyp =
          sap_to_segments(shifted, cfg, "rec" + std::to_string(i));
      parts.push_back(der(pairs[i].second, hyp, cfg));
    }
    ders[g] = aggregate_der(parts).der;
  });

  CalibrationCurve curve;
  curve.best_der = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    curve.points.emplace_back(grid[g], ders[g]);
    const bool better =
        ders[g] < curve.best_der ||
        (ders[g] == curve.best_der &&
         (std::abs(grid[g]) < std::abs(curve.best_bias) ||
          (std::abs(grid[g]) == std::abs(curve.best_bias) &&
           grid[g] < curve.best_bias)));
    if (better) {
      curve.best_der = ders[g];
      curve.best_bias = grid[g];
    }
  }
  return curve;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0)) throw std::invalid_argument("grid step must be > 0");
  if (hi < lo) throw std::invalid_argument("grid upper bound below lower bound");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
  for (long i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  return grid;
}

SapHistogram sap_histogram(
    const std::vector<std::pair<SapSequence, LabelMatrix>>& pairs, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  std::int64_t cells = 0;
  for (const auto& [sap, labels] : pairs) {
    if (sap.values.rows() != labels.values.rows() ||
        sap.values.cols() != labels.values.cols()) {
      throw std::invalid_argument("sap_histogram: sap/label shape mismatch");
    }
    cells += sap.values.size();
    if (sap.values.size() > 0) {
      lo = std::min(lo, sap.values.minCoeff());
      hi = std::max(hi, sap.values.maxCoeff());
    }
  }
  if (cells == 0) throw std::invalid_argument("sap_histogram: no cells");
  if (!(hi > lo)) {  // all logits identical: give the spike a unit-wide home
    lo -= 0.5f;
    hi += 0.5f;
  }

  SapHistogram hist;
  hist.bin_edges.resize(static_cast<size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    hist.bin_edges[b] =
        static_cast<double>(lo) +
        (static_cast<double>(hi) - static_cast<double>(lo)) * b / bins;
  }
  hist.speech_counts.assign(bins, 0);
  hist.silence_counts.assign(bins, 0);
  const double width = (static_cast<double>(hi) - static_cast<double>(lo)) / bins;
  for (const auto& [sap, labels] : pairs) {
    for (Eigen::Index t = 0; t < sap.values.rows(); ++t) {
      for (Eigen::Index c = 0; c < sap.values.cols(); ++c) {
        const double z = static_cast<double>(sap.values(t, c));
        int b = static_cast<int>((z - static_cast<double>(lo)) / width);
        b = std::clamp(b, 0, bins - 1);  // top edge closes the last bin
        if (labels.values(t, c)) {
          ++hist.speech_counts[b];
        } else {
          ++hist.silence_counts[b];
        }
      }
    }
  }
  return hist;
}

void write_calibration_curve(const std::string& path,
                             const CalibrationCurve& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "bias\tder\n";
  char buf[96];
  for (const auto& [bias, d] : curve.points) {
    std::snprintf(buf, sizeof buf, "%.4f\t%.6f", bias, d);
    os << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "# best_bias\t%.4f\n# best_der\t%.6f",
                curve.best_bias, curve.best_der);
  os << buf << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_sap_histogram(const std::string& path, const SapHistogram& hist) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "bin_center\tspeech\tsilence\n";
  char buf[96];
  for (size_t b = 0; b + 1 < hist.bin_edges.size(); ++b) {
    const double center = 0.5 * (hist.bin_edges[b] + hist.bin_edges[b + 1]);
    std::snprintf(buf, sizeof buf, "%.6f", center);
    os << buf << '\t' << hist.speech_counts[b] << '\t' << hist.silence_counts[b]
       << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace diacorrect
