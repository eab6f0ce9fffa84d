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

// Acceptance gate: ten numbered criteria, one [PASS]/[FAIL] line each.
//
//   acceptance            runs all criteria
//   acceptance 3 7        runs criteria 3 and 7
//
// Exit status is 0 iff every selected criterion passes. All tolerances and
// budgets are pinned here, next to the checks they guard.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "diacorrect/calibration.hpp"
#include "diacorrect/corpus.hpp"
#include "diacorrect/features.hpp"
#include "diacorrect/model.hpp"
#include "diacorrect/pruning.hpp"
#include "diacorrect/scoring.hpp"
#include "diacorrect/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace diacorrect;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

std::string tmp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "diacorrect_acceptance";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// One simulated recording with everything the experiments need.
struct Rec {
  std::string id;
  TrainingExample ex;
  std::vector<Segment> ref;
};

Rec build_rec(const std::string& id, std::uint64_t sim_seed, double duration,
              CorruptionConfig cc, std::uint64_t cor_seed) {
  auto conv = simulate_conversation(sim_seed, duration);
  cc.seed = cor_seed;
  Rec r;
  r.id = id;
  r.ex.labels = conv.labels;
  r.ex.sap = corrupt_oracle(conv.labels, cc);
  r.ex.features = extract_features(conv.audio);
  r.ref = std::move(conv.segments);
  return r;
}

std::vector<Rec> build_corpus(int n, double duration, std::uint64_t sim0,
                              std::uint64_t cor0, const CorruptionConfig& cc) {
  std::vector<Rec> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    out.push_back(build_rec("rec" + std::to_string(i), sim0 + u, duration, cc,
                            cor0 + u));
  }
  return out;
}

std::vector<TrainingExample> examples_of(const std::vector<Rec>& recs) {
  std::vector<TrainingExample> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(r.ex);
  return out;
}

DerBreakdown eval_uncorrected(const std::vector<Rec>& recs,
                              const ScoringConfig& cfg) {
  std::vector<DerBreakdown> parts;
  for (const auto& r : recs) {
    parts.push_back(der(r.ref, sap_to_segments(r.ex.sap, cfg, r.id), cfg));
  }
  return aggregate_der(parts);
}

DerBreakdown eval_model(Model& model, const std::vector<Rec>& recs,
                        const ScoringConfig& cfg) {
  std::vector<DerBreakdown> parts;
  for (const auto& r : recs) {
    parts.push_back(
        infer_and_score(model, r.ex.features, r.ex.sap, r.ref, cfg, r.id).second);
  }
  return aggregate_der(parts);
}

// Random RTTM-style segments on the 0.01 s grid.
std::vector<Segment> random_segments(std::mt19937& gen, int n_speakers,
                                     int n_segments, double horizon) {
  std::uniform_int_distribution<int> spk(0, n_speakers - 1);
  std::uniform_int_distribution<int> onset_cs(
      0, static_cast<int>(horizon * 100) - 50);
  std::uniform_int_distribution<int> dur_cs(20, 400);
  std::vector<Segment> out;
  for (int i = 0; i < n_segments; ++i) {
    Segment s;
    s.onset = onset_cs(gen) / 100.0;
    s.duration = std::min(dur_cs(gen) / 100.0, horizon - s.onset);
    s.speaker = "s" + std::to_string(spk(gen));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 1: PIT loss vs. brute-force enumeration. Tolerance 1e-9.
// ---------------------------------------------------------------------------
std::string criterion_1() {
  std::mt19937 gen(101);
  std::uniform_int_distribution<int> len(1, 100);
  std::uniform_real_distribution<float> logit(-8.0f, 8.0f);
  double max_dev = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index t_len = len(gen);
    MatrixF logits(t_len, 2);
    BinaryMatrix labels(t_len, 2);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      logits(t, 0) = logit(gen);
      logits(t, 1) = logit(gen);
      labels(t, 0) = gen() & 1;
      labels(t, 1) = gen() & 1;
    }
    const LossReport lib = pit_bce<float>(logits, labels);
    const auto brute = oracles::brute_pit_bce(logits, labels);
    const double dev = std::abs(lib.loss - brute.loss);
    max_dev = std::max(max_dev, dev);
    expect(dev < 1e-9, fmt("trial %d: |pit_bce - brute force| = %.3e >= 1e-9",
                           trial, dev));
  }
  return fmt("200 random pairs, max |loss - oracle| = %.2e (tolerance 1e-9)",
             max_dev);
}

// ---------------------------------------------------------------------------
// Criterion 2: DER vs. the exhaustive frame-counting oracle. Exact at
// collar 0; within one 0.01 s frame per reference boundary at collar 0.25.
// ---------------------------------------------------------------------------
std::string criterion_2() {
  std::mt19937 gen(202);
  int scored = 0;
  double max_dev0 = 0.0, max_dev25 = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = random_segments(gen, 2, 8, 60.0);
    const auto hyp = random_segments(gen, 2, 8, 60.0);

    for (const double collar : {0.0, 0.25}) {
      ScoringConfig cfg;
      cfg.collar = collar;
      bool lib_threw = false, oracle_threw = false;
      DerBreakdown lib;
      oracles::OracleDer want;
      try {
        lib = der(ref, hyp, cfg);
      } catch (const std::domain_error&) {
        lib_threw = true;
      }
      try {
        want = oracles::oracle_der(ref, hyp, collar);
      } catch (const std::domain_error&) {
        oracle_threw = true;
      }
      expect(lib_threw == oracle_threw,
             fmt("trial %d collar %.2f: undefined-DER disagreement", trial,
                 collar));
      if (lib_threw) continue;
      ++scored;

      if (collar == 0.0) {
        // same integer frame counts and the same percent arithmetic
        for (const double dev :
             {std::abs(lib.der - want.der), std::abs(lib.miss - want.miss),
              std::abs(lib.fa - want.fa), std::abs(lib.conf - want.conf),
              std::abs(lib.scored_speech - want.scored_speech)}) {
          max_dev0 = std::max(max_dev0, dev);
          expect(dev <= 1e-9,
                 fmt("trial %d collar 0: deviation %.3e > 1e-9", trial, dev));
        }
      } else {
        // allowance: one 0.01 s frame per reference boundary, in seconds
        const double tol = 0.01 * 2.0 * static_cast<double>(ref.size());
        auto secs = [](double pct, double speech) { return pct / 100.0 * speech; };
        for (const double dev :
             {std::abs(secs(lib.miss, lib.scored_speech) -
                       secs(want.miss, want.scored_speech)),
              std::abs(secs(lib.fa, lib.scored_speech) -
                       secs(want.fa, want.scored_speech)),
              std::abs(secs(lib.conf, lib.scored_speech) -
                       secs(want.conf, want.scored_speech)),
              std::abs(lib.scored_speech - want.scored_speech)}) {
          max_dev25 = std::max(max_dev25, dev);
          expect(dev <= tol, fmt("trial %d collar 0.25: deviation %.4f s "
                                 "> %.4f s", trial, dev, tol));
        }
      }
    }
  }
  expect(scored >= 150, fmt("only %d of 200 comparisons were scoreable", scored));
  return fmt("%d comparisons; max deviation %.2e%% at collar 0, %.2e s at "
             "collar 0.25", scored, max_dev0, max_dev25);
}

// ---------------------------------------------------------------------------
// Criterion 3: encoder geometry, forward shapes, analytic parameter count.
// ---------------------------------------------------------------------------
std::int64_t analytic_param_count(const ModelConfig& c) {
  const std::int64_t e = c.emb_dim, h = c.sap_hidden, k = c.dconv_kernel;
  const std::int64_t f = c.ff_dim, spk = c.n_speakers;
  const auto dims = speech_encoder_dims(c);

  // SAP encoder: input linear, pointwise1, PReLU, LN, depthwise conv,
  // PReLU, LN, pointwise2
  const std::int64_t sap = (spk * e + e) + (e * h + h) + 1 + 2 * h +
                           (h * k + h) + 1 + 2 * h + (h * e + e);
  // speech encoder: two (3,7) convs with PReLU+LN, then the projection
  const std::int64_t speech = (1 * e * 3 * 7 + e) + 1 + 2 * e +
                              (e * e * 3 * 7 + e) + 1 + 2 * e +
                              (dims.flat_dim * e + e);
  // decoder: input projection, per-layer {2 LN, 4 attention linears, FF},
  // final LN, output projection
  const std::int64_t per_layer =
      2 * (2 * e) + 4 * (e * e + e) + (e * f + f) + (f * e + e);
  const std::int64_t decoder = (3 * e * e + e) /* 768->256 proj */ +
                               c.decoder_layers * per_layer + 2 * e +
                               (e * spk + spk);
  return sap + speech + decoder;
}

std::string criterion_3() {
  ModelConfig cfg;
  const auto dims = speech_encoder_dims(cfg);
  expect(dims.freq1 == 68, fmt("freq after conv1 = %d, want 68", dims.freq1));
  expect(dims.freq2 == 13, fmt("freq after conv2 = %d, want 13", dims.freq2));
  expect(dims.flat_dim == 3328,
         fmt("projection input = %d, want 3328", dims.flat_dim));

  Model model(cfg, 3);
  std::mt19937 gen(303);
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  for (const Eigen::Index t_len : {1, 3, 50, 500}) {
    MatrixF feats(t_len, cfg.feat_dim), sap(t_len, cfg.n_speakers);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      for (Eigen::Index j = 0; j < feats.cols(); ++j) feats(t, j) = unit(gen);
      sap(t, 0) = 4.0f * unit(gen);
      sap(t, 1) = 4.0f * unit(gen);
    }
    const MatrixF out = model.forward(feats, sap, false);
    model.clear_cache();
    expect(out.rows() == t_len && out.cols() == 2,
           fmt("forward(T=%lld) returned %lldx%lld, want %lldx2",
               static_cast<long long>(t_len), static_cast<long long>(out.rows()),
               static_cast<long long>(out.cols()), static_cast<long long>(t_len)));
    expect(out.allFinite(), fmt("forward(T=%lld) produced non-finite values",
                                static_cast<long long>(t_len)));
  }

  const std::int64_t analytic = analytic_param_count(cfg);
  const std::int64_t counted = model.count_parameters();
  expect(analytic == counted, fmt("analytic %lld != implementation %lld",
                                  static_cast<long long>(analytic),
                                  static_cast<long long>(counted)));
  expect(counted == 4280582,
         fmt("parameter count %lld, want 4280582", static_cast<long long>(counted)));
  return fmt("345->68->13 (flat 3328); forward T x 2 for T in {1,3,50,500}; "
             "params analytic == counted == %lld",
             static_cast<long long>(counted));
}

// ---------------------------------------------------------------------------
// Criterion 4: analytic gradients vs. central finite differences, 64-bit.
// Relative error < 1e-3 on >= 20 sampled parameters (eps 1e-6).
// ---------------------------------------------------------------------------
std::string criterion_4() {
  ModelConfig cfg;
  cfg.dropout = 0.0f;  // finite differences need a deterministic forward
  CorrectionModel<double> model(cfg, 6);

  const Eigen::Index t_len = 6;
  std::mt19937 gen(404);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MatrixD feats(t_len, cfg.feat_dim), sap(t_len, cfg.n_speakers);
  BinaryMatrix labels(t_len, cfg.n_speakers);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < feats.cols(); ++j) feats(t, j) = unit(gen);
    for (Eigen::Index c = 0; c < sap.cols(); ++c) {
      sap(t, c) = 4.0 * unit(gen);
      labels(t, c) = gen() & 1;
    }
  }

  auto loss_at = [&]() {
    const MatrixD logits = model.forward(feats, sap, false);
    model.clear_cache();
    return pit_bce<double>(logits, labels).loss;
  };

  // analytic gradients
  model.zero_grad();
  const MatrixD logits = model.forward(feats, sap, true);
  const LossReport rep = pit_bce<double>(logits, labels);
  model.backward(pit_bce_grad<double>(logits, labels, rep.best_perm));

  auto params = model.params();
  const std::size_t n_tensors = params.size();
  const int picks = 24;
  const double eps = 1e-6;
  double max_rel = 0.0;
  int checked = 0;
  for (int i = 0; i < picks; ++i) {
    auto& p = params[(static_cast<std::size_t>(i) * n_tensors) / picks];
    const Eigen::Index idx = p.value->size() / 2;
    double* slot = p.value->data() + idx;
    const double analytic = p.grad->data()[idx];

    const double saved = *slot;
    *slot = saved + eps;
    const double up = loss_at();
    *slot = saved - eps;
    const double down = loss_at();
    *slot = saved;
    const double fd = (up - down) / (2 * eps);

    // the attention key bias has an exactly-zero gradient, hence the floor
    const double rel = std::abs(fd - analytic) /
                       std::max({std::abs(fd), std::abs(analytic), 1e-6});
    max_rel = std::max(max_rel, rel);
    ++checked;
    expect(rel < 1e-3, fmt("%s[%lld]: fd %.6e vs analytic %.6e (rel %.3e)",
                           p.name.c_str(), static_cast<long long>(idx), fd,
                           analytic, rel));
  }
  expect(checked >= 20, fmt("only %d parameters checked", checked));
  return fmt("%d sampled parameters, max relative error %.2e (< 1e-3)",
             checked, max_rel);
}

// ---------------------------------------------------------------------------
// Criterion 5: overfit sanity. 5 x 60 s recordings, PIT-BCE < 0.05 within
// 200 optimizer steps.
// ---------------------------------------------------------------------------
std::string criterion_5() {
  CorruptionConfig cc;
  cc.flip_prob = 0.08;
  cc.logit_noise_std = 1.0;
  const auto recs = build_corpus(5, 60.0, /*sim0=*/100, /*cor0=*/200, cc);

  TrainConfig tc;
  tc.epochs = 40;
  tc.max_steps = 200;
  tc.learning_rate = 1e-3;
  tc.batch_size = 1;
  tc.chunk_frames = 500;
  tc.seed = 42;
  const TrainResult res = train(examples_of(recs), tc);

  expect(res.steps <= 200, fmt("used %lld steps, budget 200",
                               static_cast<long long>(res.steps)));
  const double best =
      *std::min_element(res.step_loss.begin(), res.step_loss.end());
  expect(best < 0.05, fmt("best step loss %.4f >= 0.05 after %lld steps", best,
                          static_cast<long long>(res.steps)));
  return fmt("PIT-BCE reached %.4f (< 0.05) within %lld steps", best,
             static_cast<long long>(res.steps));
}

// ---------------------------------------------------------------------------
// Criterion 6: end-to-end correction efficacy. 40 train + 10 test x 60 s,
// flip 0.08 / noise 1.0 / scale 4; corrected test DER >= 15% better
// (relative) than the uncorrected SAPs after 5 epochs + averaging.
// ---------------------------------------------------------------------------
std::string criterion_6() {
  CorruptionConfig cc;
  cc.flip_prob = 0.08;
  cc.logit_noise_std = 1.0;
  cc.logit_scale = 4.0;
  const auto train_recs = build_corpus(40, 60.0, 1000, 5000, cc);
  const auto test_recs = build_corpus(10, 60.0, 2000, 6000, cc);

  const ScoringConfig sc;  // collar 0, median 1, threshold 0
  const DerBreakdown before = eval_uncorrected(test_recs, sc);
  expect(before.der > 0.0, "uncorrected DER is already zero; nothing to fix");

  TrainConfig tc;
  tc.epochs = 5;
  tc.learning_rate = 1e-3;
  tc.batch_size = 4;
  tc.chunk_frames = 500;
  tc.seed = 7;
  TrainResult res = train(examples_of(train_recs), tc);
  Model averaged = average_checkpoints(res.snapshots);

  const DerBreakdown after = eval_model(averaged, test_recs, sc);
  const double rel = (before.der - after.der) / before.der;
  expect(rel >= 0.15, fmt("DER %.2f%% -> %.2f%%: %.1f%% relative, need >= 15%%",
                          before.der, after.der, 100.0 * rel));
  return fmt("test DER %.2f%% -> %.2f%% (%.1f%% relative improvement)",
             before.der, after.der, 100.0 * rel);
}

// ---------------------------------------------------------------------------
// Criterion 7: calibration recovery. Inject global_bias +2.0 into the test
// corpus, sweep -3..3 step 0.25: best_bias = 2.0 +- 0.25 and calibrated DER
// strictly below the uncalibrated point.
// ---------------------------------------------------------------------------
std::string criterion_7() {
  CorruptionConfig cc;
  cc.flip_prob = 0.08;
  cc.logit_noise_std = 1.0;
  cc.logit_scale = 4.0;
  cc.global_bias = 2.0;
  const auto recs = build_corpus(10, 60.0, 2000, 6000, cc);

  std::vector<std::pair<SapSequence, std::vector<Segment>>> pairs;
  for (const auto& r : recs) pairs.emplace_back(r.ex.sap, r.ref);

  const ScoringConfig sc;
  const CalibrationCurve curve =
      sweep_bias(pairs, make_grid(-3.0, 3.0, 0.25), sc, /*jobs=*/4);

  double der_at_zero = -1.0;
  for (const auto& [bias, d] : curve.points) {
    if (bias == 0.0) der_at_zero = d;
  }
  expect(der_at_zero >= 0.0, "grid unexpectedly lacks the 0.0 point");
  expect(std::abs(curve.best_bias - 2.0) <= 0.25 + 1e-12,
         fmt("best_bias %.4f outside 2.0 +- 0.25", curve.best_bias));
  expect(curve.best_der < der_at_zero,
         fmt("calibrated DER %.4f%% not strictly below uncalibrated %.4f%%",
             curve.best_der, der_at_zero));
  return fmt("best_bias %.2f (want 2.0 +- 0.25); DER %.2f%% vs uncalibrated "
             "%.2f%%", curve.best_bias, curve.best_der, der_at_zero);
}

// ---------------------------------------------------------------------------
// Criterion 8: pruning behavior on a 200-recording graded-corruption corpus.
// select_hard windows nest across lower in {8,10,12,14}; training on the
// [12, 40] window beats (or ties) full-corpus training on held-out data
// under an equal optimizer-step budget.
// ---------------------------------------------------------------------------
std::string criterion_8() {
  // graded corruption: flip probability ramps 0 -> 0.2 across the corpus
  std::vector<Rec> corpus;
  corpus.reserve(200);
  for (int i = 0; i < 200; ++i) {
    CorruptionConfig cc;
    cc.flip_prob = 0.2 * static_cast<double>(i) / 199.0;
    cc.logit_noise_std = 1.0;
    const auto u = static_cast<std::uint64_t>(i);
    corpus.push_back(build_rec("rec" + std::to_string(i), 4000 + u, 30.0, cc,
                               8000 + u));
  }

  std::vector<ScoredRecording> scored;
  scored.reserve(corpus.size());
  for (const auto& r : corpus) {
    scored.push_back({r.id, r.ex.sap, r.ex.labels});
  }
  const PruneTable table = score_corpus(scored, /*jobs=*/4);

  // nesting: raising the lower edge can only shrink the selection
  std::vector<std::vector<std::string>> windows;
  for (const double lower : {8.0, 10.0, 12.0, 14.0}) {
    windows.push_back(select_hard(table, lower, 40.0));
  }
  for (std::size_t w = 1; w < windows.size(); ++w) {
    for (const auto& id : windows[w]) {
      expect(std::find(windows[w - 1].begin(), windows[w - 1].end(), id) !=
                 windows[w - 1].end(),
             fmt("window %zu not nested in window %zu (id %s)", w, w - 1,
                 id.c_str()));
    }
    expect(windows[w].size() <= windows[w - 1].size(),
           "higher lower bound selected more recordings");
  }
  const auto& keep = windows[2];  // lower 12, upper 40
  expect(!keep.empty(), "the [12, 40] window selected nothing");

  std::vector<TrainingExample> subset;
  for (const auto& r : corpus) {
    if (std::find(keep.begin(), keep.end(), r.id) != keep.end()) {
      subset.push_back(r.ex);
    }
  }

  // held-out evaluation corpus at mid-range corruption
  CorruptionConfig test_cc;
  test_cc.flip_prob = 0.10;
  test_cc.logit_noise_std = 1.0;
  const auto test_recs = build_corpus(20, 30.0, 9000, 9600, test_cc);

  TrainConfig tc;
  tc.epochs = 1000;  // the step budget is the binding limit
  tc.max_steps = 120;
  tc.learning_rate = 1e-3;
  tc.batch_size = 2;
  tc.chunk_frames = 300;
  tc.seed = 11;

  TrainResult full_res = train(examples_of(corpus), tc);
  TrainResult subset_res = train(subset, tc);
  Model full_model = full_res.snapshots.back();
  Model subset_model = subset_res.snapshots.back();

  const ScoringConfig sc;
  const DerBreakdown full_der = eval_model(full_model, test_recs, sc);
  const DerBreakdown subset_der = eval_model(subset_model, test_recs, sc);
  expect(subset_der.der <= full_der.der,
         fmt("subset-trained DER %.2f%% > full-corpus DER %.2f%%",
             subset_der.der, full_der.der));
  return fmt("windows nest (%zu/%zu/%zu/%zu kept); subset DER %.2f%% <= "
             "full-corpus DER %.2f%% at equal budget",
             windows[0].size(), windows[1].size(), windows[2].size(),
             windows[3].size(), subset_der.der, full_der.der);
}

// ---------------------------------------------------------------------------
// Criterion 9: threshold-shift identity, zero tolerance.
// ---------------------------------------------------------------------------
std::string criterion_9() {
  CorruptionConfig cc;
  cc.flip_prob = 0.1;
  cc.logit_noise_std = 1.5;
  const auto rec = build_rec("rec", 900, 60.0, cc, 901);

  std::mt19937 gen(909);
  std::uniform_real_distribution<double> pick(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double b = pick(gen);

    ScoringConfig at_zero;
    const DerBreakdown lhs =
        der(rec.ref, sap_to_segments(apply_bias(rec.ex.sap, b), at_zero), at_zero);

    ScoringConfig at_b;
    at_b.threshold_logit = b;
    const DerBreakdown rhs = der(rec.ref, sap_to_segments(rec.ex.sap, at_b), at_zero);

    expect(lhs.der == rhs.der && lhs.miss == rhs.miss && lhs.fa == rhs.fa &&
               lhs.conf == rhs.conf && lhs.scored_speech == rhs.scored_speech,
           fmt("b = %.6f: shifted-vs-thresholded DER differ (%.9f vs %.9f)", b,
               lhs.der, rhs.der));
  }
  return "20 random biases: DER(apply_bias(Z,b), thr 0) == DER(Z, thr b) exactly";
}

// ---------------------------------------------------------------------------
// Criterion 10: round-trips and determinism.
// ---------------------------------------------------------------------------
std::string criterion_10() {
  // RTTM round-trip: write -> read -> write is byte-identical
  auto conv = simulate_conversation(123, 30.0);
  for (auto& s : conv.segments) s.recording_id = "rec0";
  const std::string r1 = tmp_file("round.rttm"), r2 = tmp_file("round2.rttm");
  write_rttm_file(r1, conv.segments);
  write_rttm_file(r2, read_rttm_file(r1));
  expect(slurp(r1) == slurp(r2), "RTTM write/read/write not byte-identical");

  // DCSAP01 round-trip: bit-exact payload and byte-identical re-encode
  CorruptionConfig cc;
  cc.flip_prob = 0.1;
  cc.logit_noise_std = 1.0;
  cc.seed = 5;
  const SapSequence sap = corrupt_oracle(conv.labels, cc);
  const std::string s1 = tmp_file("round.sap"), s2 = tmp_file("round2.sap");
  write_sap(s1, sap);
  const SapSequence sap_back = read_sap(s1);
  expect((sap_back.values.array() == sap.values.array()).all(),
         "DCSAP01 payload not bit-exact");
  expect(sap_back.speakers == sap.speakers, "DCSAP01 speaker order changed");
  write_sap(s2, sap_back);
  expect(slurp(s1) == slurp(s2), "DCSAP01 re-encode not byte-identical");

  // checkpoint round-trip
  Model model(ModelConfig{}, 9);
  const std::string c1 = tmp_file("round.ckpt"), c2 = tmp_file("round2.ckpt");
  save_checkpoint(c1, model);
  Model loaded = load_checkpoint(c1);
  save_checkpoint(c2, loaded);
  expect(slurp(c1) == slurp(c2), "checkpoint save/load/save not byte-identical");

  // simulate determinism
  const auto conv_a = simulate_conversation(321, 20.0);
  const auto conv_b = simulate_conversation(321, 20.0);
  expect(conv_a.audio.samples == conv_b.audio.samples,
         "same-seed simulation produced different audio");
  expect((conv_a.labels.values.array() == conv_b.labels.values.array()).all(),
         "same-seed simulation produced different labels");

  // train determinism: identical losses and byte-identical checkpoints
  CorruptionConfig tcc;
  tcc.flip_prob = 0.08;
  tcc.logit_noise_std = 1.0;
  const auto recs = build_corpus(1, 20.0, 555, 556, tcc);
  TrainConfig tc;
  tc.epochs = 1;
  tc.max_steps = 3;
  tc.learning_rate = 1e-3;
  tc.batch_size = 1;
  tc.chunk_frames = 100;
  tc.seed = 5;
  TrainResult run_a = train(examples_of(recs), tc);
  TrainResult run_b = train(examples_of(recs), tc);
  expect(run_a.step_loss == run_b.step_loss,
         "same-seed training produced different loss curves");
  const std::string k1 = tmp_file("train_a.ckpt"), k2 = tmp_file("train_b.ckpt");
  save_checkpoint(k1, run_a.snapshots.back());
  save_checkpoint(k2, run_b.snapshots.back());
  expect(slurp(k1) == slurp(k2),
         "same-seed training produced different checkpoints");

  return "RTTM/DCSAP01/checkpoint round-trips byte-identical; same-seed "
         "simulate and train runs reproduce exactly";
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<std::string()>> criteria{
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
      {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
      {9, criterion_9}, {10, criterion_10},
  };
  // wall-clock budgets in seconds where the criterion pins one
  const std::map<int, double> budgets{
      {1, 10.0}, {2, 30.0}, {5, 300.0}, {6, 900.0}, {7, 120.0}};

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (criteria.count(id) == 0) {
      std::fprintf(stderr, "unknown criterion '%s' (valid: 1..10)\n", argv[i]);
      return 2;
    }
    selected.push_back(id);
  }
  if (selected.empty()) {
    for (const auto& [id, fn] : criteria) selected.push_back(id);
  }

  bool all_ok = true;
  for (const int id : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = criteria.at(id)();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const auto budget = budgets.find(id);
    if (ok && budget != budgets.end() && secs > budget->second) {
      ok = false;
      detail = fmt("finished in %.1f s, budget %.0f s", secs, budget->second);
    }
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id,
                detail.c_str(), secs);
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
