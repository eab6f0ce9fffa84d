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

#include "diacorrect/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace diacorrect {

void ScoringConfig::validate() const {
  if (!(collar >= 0) || !std::isfinite(collar))
    throw std::invalid_argument("collar must be a finite value >= 0");
  if (median_frames < 1 || median_frames % 2 == 0)
    throw std::invalid_argument("median_frames must be an odd value >= 1");
  if (!(scoring_resolution > 0))
    throw std::invalid_argument("scoring_resolution must be > 0");
  if (!std::isfinite(threshold_logit))
    throw std::invalid_argument("threshold_logit must be finite");
}

// ---------------------------------------------------------------------------
// Median filter
// ---------------------------------------------------------------------------

LabelMatrix median_filter(const LabelMatrix& labels, int width) {
  if (width < 1 || width % 2 == 0)
    throw std::invalid_argument("median filter width must be odd and >= 1");
  LabelMatrix out = labels;
  if (width == 1) return out;
  const Eigen::Index t_len = labels.values.rows();
  const int half = width / 2;
  std::vector<int> prefix(static_cast<size_t>(t_len) + 1);
  for (Eigen::Index c = 0; c < labels.values.cols(); ++c) {
    prefix[0] = 0;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      prefix[t + 1] = prefix[t] + labels.values(t, c);
    }
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
      const Eigen::Index hi = std::min<Eigen::Index>(t_len - 1, t + half);
      const int window = static_cast<int>(hi - lo + 1);
      const int ones = prefix[hi + 1] - prefix[lo];
      if (2 * ones > window) {
        out.values(t, c) = 1;
      } else if (2 * ones < window) {
        out.values(t, c) = 0;
      }  // tie: keep the original value
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Speaker mapping
// ---------------------------------------------------------------------------

namespace {

// Speakers indexed by first appearance; frame grids sampled at midpoints.
struct FrameGrid {
  std::vector<std::string> speakers;
  BinaryMatrix active;  // frames x speakers
};

std::vector<std::string> speaker_order(const std::vector<Segment>& segments) {
  std::vector<std::string> order;
  for (const auto& s : segments) {
    if (std::find(order.begin(), order.end(), s.speaker) == order.end()) {
      order.push_back(s.speaker);
    }
  }
  return order;
}

FrameGrid rasterize(const std::vector<Segment>& segments, Eigen::Index n_frames,
                    double resolution) {
  FrameGrid grid;
  grid.speakers = speaker_order(segments);
  grid.active = BinaryMatrix::Zero(n_frames, grid.speakers.size());
  for (const auto& seg : segments) {
    const auto c = static_cast<Eigen::Index>(
        std::find(grid.speakers.begin(), grid.speakers.end(), seg.speaker) -
        grid.speakers.begin());
    // conservative frame bracket; the midpoint test below stays authoritative
    const auto lo = std::max<Eigen::Index>(
        0, static_cast<Eigen::Index>(std::floor(seg.onset / resolution)) - 2);
    const auto hi = std::min<Eigen::Index>(
        n_frames - 1, static_cast<Eigen::Index>(std::ceil(
                          (seg.onset + seg.duration) / resolution)) + 2);
    for (Eigen::Index t = lo; t <= hi; ++t) {
      const double mid = (t + 0.5) * resolution;
      if (mid >= seg.onset && mid < seg.onset + seg.duration) {
        grid.active(t, c) = 1;
      }
    }
  }
  return grid;
}

Eigen::Index grid_frames(const std::vector<Segment>& ref,
                         const std::vector<Segment>& hyp, double resolution) {
  double end = 0.0;
  for (const auto& s : ref) end = std::max(end, s.onset + s.duration);
  for (const auto& s : hyp) end = std::max(end, s.onset + s.duration);
  return static_cast<Eigen::Index>(std::ceil(end / resolution - 1e-9));
}

// assign[h] = ref index or -1; maximizes the summed overlap. Ties cannot
// change the DER (equal totals give equal confusion counts), but iteration
// order is fixed so the returned mapping is deterministic.
std::vector<int> max_assignment(const RowMatrix<double>& overlap) {
  const int n_hyp = static_cast<int>(overlap.rows());
  const int n_ref = static_cast<int>(overlap.cols());
  std::vector<int> best_assign(n_hyp, -1);
  if (n_ref == 0 || n_hyp == 0) return best_assign;

  if (n_hyp <= 3 && n_ref <= 3) {
    // brute force over injective partial assignments
    double best = -1.0;
    std::vector<int> cur(n_hyp, -1);
    auto recurse = [&](auto&& self, int h, int used_mask, double score) -> void {
      if (h == n_hyp) {
        if (score > best) {
          best = score;
          best_assign = cur;
        }
        return;
      }
      cur[h] = -1;
      self(self, h + 1, used_mask, score);
      for (int r = 0; r < n_ref; ++r) {
        if (used_mask & (1 << r)) continue;
        cur[h] = r;
        self(self, h + 1, used_mask | (1 << r), score + overlap(h, r));
        cur[h] = -1;
      }
    };
    recurse(recurse, 0, 0, 0.0);
    return best_assign;
  }

  if (n_ref > 22) throw std::invalid_argument("too many reference speakers to map");
  // dp over subsets of ref speakers, hyp processed in order
  const size_t n_masks = size_t{1} << n_ref;
  std::vector<double> dp(n_masks, -1.0);
  std::vector<std::vector<int>> choice(n_hyp, std::vector<int>(n_masks, -2));
  dp[0] = 0.0;
  for (int h = 0; h < n_hyp; ++h) {
    std::vector<double> next(n_masks, -1.0);
    for (size_t mask = 0; mask < n_masks; ++mask) {
      if (dp[mask] < 0) continue;
      if (dp[mask] > next[mask]) {  // leave h unmapped
        next[mask] = dp[mask];
        choice[h][mask] = -1;
      }
      for (int r = 0; r < n_ref; ++r) {
        if (mask & (size_t{1} << r)) continue;
        const size_t m2 = mask | (size_t{1} << r);
        const double cand = dp[mask] + overlap(h, r);
        if (cand > next[m2]) {
          next[m2] = cand;
          choice[h][m2] = r;
        }
      }
    }
    dp.swap(next);
  }
  size_t best_mask = 0;
  for (size_t mask = 1; mask < n_masks; ++mask) {
    if (dp[mask] > dp[best_mask]) best_mask = mask;
  }
  size_t mask = best_mask;
  for (int h = n_hyp - 1; h >= 0; --h) {
    const int r = choice[h][mask];
    best_assign[h] = (r >= 0) ? r : -1;
    if (r >= 0) mask &= ~(size_t{1} << r);
  }
  return best_assign;
}

RowMatrix<double> overlap_matrix(const FrameGrid& hyp, const FrameGrid& ref,
                                 const std::vector<char>& scored) {
  RowMatrix<double> overlap =
      RowMatrix<double>::Zero(hyp.active.cols(), ref.active.cols());
  for (Eigen::Index t = 0; t < ref.active.rows(); ++t) {
    if (!scored[t]) continue;
    for (Eigen::Index h = 0; h < hyp.active.cols(); ++h) {
      if (!hyp.active(t, h)) continue;
      for (Eigen::Index r = 0; r < ref.active.cols(); ++r) {
        if (ref.active(t, r)) overlap(h, r) += 1.0;
      }
    }
  }
  return overlap;
}

}  // namespace

std::map<std::string, std::string> optimal_speaker_map(
    const std::vector<Segment>& ref, const std::vector<Segment>& hyp) {
  const double res = 0.01;
  const Eigen::Index n = grid_frames(ref, hyp, res);
  const FrameGrid rg = rasterize(ref, n, res);
  const FrameGrid hg = rasterize(hyp, n, res);
  const std::vector<char> scored(static_cast<size_t>(n), 1);
  const RowMatrix<double> overlap = overlap_matrix(hg, rg, scored);
  const auto assign = max_assignment(overlap);
  std::map<std::string, std::string> mapping;
  for (size_t h = 0; h < assign.size(); ++h) {
    if (assign[h] >= 0 && overlap(static_cast<Eigen::Index>(h), assign[h]) > 0) {
      mapping[hg.speakers[h]] = rg.speakers[assign[h]];
    }
  }
  return mapping;
}

DerBreakdown der(const std::vector<Segment>& ref, const std::vector<Segment>& hyp,
                 const ScoringConfig& cfg) {
  cfg.validate();
  const double res = cfg.scoring_resolution;
  const Eigen::Index n = grid_frames(ref, hyp, res);
  const FrameGrid rg = rasterize(ref, n, res);
  const FrameGrid hg = rasterize(hyp, n, res);

  // scored[t] = 0 iff the frame midpoint lies strictly within `collar`
  // seconds of a reference boundary; collar 0 therefore excludes nothing
  std::vector<char> scored(static_cast<size_t>(n), 1);
  if (cfg.collar > 0) {
    for (const auto& seg : ref) {
      for (const double b : {seg.onset, seg.onset + seg.duration}) {
        const auto lo = static_cast<Eigen::Index>(
            std::floor((b - cfg.collar) / res - 0.5));
        const auto hi = static_cast<Eigen::Index>(
            std::ceil((b + cfg.collar) / res - 0.5));
        for (Eigen::Index t = std::max<Eigen::Index>(0, lo);
             t <= std::min<Eigen::Index>(n - 1, hi); ++t) {
          const double mid = (t + 0.5) * res;
          if (std::abs(mid - b) < cfg.collar) scored[t] = 0;
        }
      }
    }
  }

  const auto assign = max_assignment(overlap_matrix(hg, rg, scored));

  std::int64_t ref_frames = 0, miss_f = 0, fa_f = 0, conf_f = 0, time_f = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!scored[t]) continue;
    ++time_f;
    int n_ref = 0, n_hyp = 0, correct = 0;
    for (Eigen::Index r = 0; r < rg.active.cols(); ++r) n_ref += rg.active(t, r);
    for (Eigen::Index h = 0; h < hg.active.cols(); ++h) {
      if (!hg.active(t, h)) continue;
      ++n_hyp;
      if (assign[h] >= 0 && rg.active(t, assign[h])) ++correct;
    }
    ref_frames += n_ref;
    miss_f += std::max(0, n_ref - n_hyp);
    fa_f += std::max(0, n_hyp - n_ref);
    conf_f += std::min(n_ref, n_hyp) - correct;
  }

  DerBreakdown out;
  out.scored_speech = static_cast<double>(ref_frames) * res;
  out.scored_time = static_cast<double>(time_f) * res;
  if (ref_frames == 0) {
    if (miss_f + fa_f + conf_f > 0) {
      throw std::domain_error(
          "DER undefined: errors present but no reference speech in scored regions");
    }
    return out;
  }
  const double denom = static_cast<double>(ref_frames);
  out.miss = 100.0 * static_cast<double>(miss_f) / denom;
  out.fa = 100.0 * static_cast<double>(fa_f) / denom;
  out.conf = 100.0 * static_cast<double>(conf_f) / denom;
  out.der = out.miss + out.fa + out.conf;
  return out;
}

// ---------------------------------------------------------------------------
// Inference glue
// ---------------------------------------------------------------------------

std::vector<Segment> sap_to_segments(const SapSequence& sap,
                                     const ScoringConfig& cfg,
                                     const std::string& recording_id) {
  cfg.validate();
  LabelMatrix labels;
  labels.frame_duration = sap.frame_duration;
  labels.speakers = sap.speakers;
  labels.values =
      (sap.values.array() > static_cast<float>(cfg.threshold_logit))
          .cast<std::uint8_t>();
  if (labels.speakers.empty()) {
    labels.speakers.resize(sap.values.cols());
    for (Eigen::Index c = 0; c < sap.values.cols(); ++c) {
      labels.speakers[c] = "spk" + std::to_string(c);
    }
  }
  if (cfg.median_frames > 1) labels = median_filter(labels, cfg.median_frames);
  return labels_to_segments(labels, recording_id);
}

std::pair<std::vector<Segment>, DerBreakdown> infer_and_score(
    Model& model, const FeatureSequence& features, const SapSequence& sap,
    const std::vector<Segment>& ref, const ScoringConfig& cfg,
    const std::string& recording_id) {
  cfg.validate();
  MatrixF logits = model.forward(features.values, sap.values, /*train=*/false);
  SapSequence corrected;
  corrected.values = logits;
  corrected.frame_duration = sap.frame_duration;
  corrected.speakers = sap.speakers;
  auto segments = sap_to_segments(corrected, cfg, recording_id);
  DerBreakdown breakdown = der(ref, segments, cfg);
  return {std::move(segments), breakdown};
}

DerBreakdown aggregate_der(const std::vector<DerBreakdown>& parts) {
  DerBreakdown total;
  double denom = 0.0;
  for (const auto& p : parts) {
    denom += p.scored_speech;
    total.scored_speech += p.scored_speech;
    total.scored_time += p.scored_time;
    total.miss += p.miss * p.scored_speech;
    total.fa += p.fa * p.scored_speech;
    total.conf += p.conf * p.scored_speech;
  }
  if (denom > 0) {
    total.miss /= denom;
    total.fa /= denom;
    total.conf /= denom;
  } else {
    total.miss = total.fa = total.conf = 0.0;
  }
  total.der = total.miss + total.fa + total.conf;
  return total;
}

}  // namespace diacorrect
