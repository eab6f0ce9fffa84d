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

// diacorrect: one binary, verb subcommands, reproducible experiments.
//
// Config precedence: flags > config file (--config or $DIACORRECT_CONFIG)
// > built-in defaults. All randomness funnels through --seed. Exit status
// is 0 iff every declared output was written; otherwise a single-line
// "error: ..." goes to stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diacorrect/calibration.hpp"
#include "diacorrect/corpus.hpp"
#include "diacorrect/features.hpp"
#include "diacorrect/model.hpp"
#include "diacorrect/pruning.hpp"
#include "diacorrect/scoring.hpp"
#include "diacorrect/training.hpp"
#include "diacorrect/wav.hpp"

namespace fs = std::filesystem;
using namespace diacorrect;

namespace {

using KV = std::map<std::string, std::string>;

// The config file must be known before CLI11 parses, so --config is found
// by a pre-scan of argv (falling back to $DIACORRECT_CONFIG).
KV load_config_kv(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
      break;
    }
    if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
      break;
    }
  }
  if (path.empty()) {
    if (const char* env = std::getenv("DIACORRECT_CONFIG")) path = env;
  }
  if (path.empty()) return {};
  return parse_config_file(path);
}

template <typename T>
void kv_set(const KV& kv, const std::string& key, T* dst) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  std::istringstream ss(it->second);
  T v{};
  if (!(ss >> v)) {
    throw std::invalid_argument("config key '" + key + "': bad value '" +
                                it->second + "'");
  }
  *dst = v;
}

void apply_scoring_kv(const KV& kv, ScoringConfig* cfg) {
  kv_set(kv, "collar", &cfg->collar);
  kv_set(kv, "median_frames", &cfg->median_frames);
  kv_set(kv, "threshold_logit", &cfg->threshold_logit);
  kv_set(kv, "scoring_resolution", &cfg->scoring_resolution);
}

void apply_corruption_kv(const KV& kv, CorruptionConfig* cfg) {
  kv_set(kv, "flip_prob", &cfg->flip_prob);
  kv_set(kv, "logit_noise_std", &cfg->logit_noise_std);
  kv_set(kv, "logit_scale", &cfg->logit_scale);
  kv_set(kv, "global_bias", &cfg->global_bias);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

void add_scoring_flags(CLI::App* cmd, ScoringConfig* sc) {
  cmd->add_option("--collar", sc->collar, "DER collar in seconds")
      ->capture_default_str();
  cmd->add_option("--median", sc->median_frames,
                  "median filter width in frames (odd, 1 = off)")
      ->capture_default_str();
  cmd->add_option("--threshold", sc->threshold_logit,
                  "decision threshold in logit units")
      ->capture_default_str();
}

std::string rec_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "rec%04d", i);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_simulate(int count, double duration, std::uint64_t seed,
                 const std::string& outdir, const CorruptionConfig& base_cc) {
  ensure_dir(outdir);
  std::vector<ManifestEntry> manifest;
  for (int i = 0; i < count; ++i) {
    const std::string id = rec_id(i);
    const std::string stem = (fs::path(outdir) / id).string();
    // independent seed lanes for rendering and corruption
    auto conv = simulate_conversation(seed + 2 * static_cast<std::uint64_t>(i),
                                      duration);
    CorruptionConfig cc = base_cc;
    cc.seed = seed + 2 * static_cast<std::uint64_t>(i) + 1;
    const SapSequence sap = corrupt_oracle(conv.labels, cc);
    const FeatureSequence feats = extract_features(conv.audio);

    write_wav(stem + ".wav", conv.audio);
    for (auto& seg : conv.segments) seg.recording_id = id;
    write_rttm_file(stem + ".rttm", conv.segments);
    write_feature_cache(stem + ".feat", feats);
    write_sap(stem + ".sap", sap);
    manifest.push_back({id, stem + ".feat", stem + ".sap", stem + ".rttm"});
  }
  const std::string mpath = (fs::path(outdir) / "manifest.tsv").string();
  write_manifest(mpath, manifest);
  std::printf("wrote %d recording(s) and %s\n", count, mpath.c_str());
  return 0;
}

std::vector<TrainingExample> load_corpus(const std::string& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  std::vector<TrainingExample> corpus;
  corpus.reserve(entries.size());
  for (const auto& e : entries) corpus.push_back(load_example(e));
  return corpus;
}

int run_training_cmd(const Model* init, const std::string& manifest_path,
                     const std::string& outdir, const TrainConfig& cfg) {
  cfg.validate();
  ensure_dir(outdir);
  const auto corpus = load_corpus(manifest_path);
  TrainResult res = init ? fine_tune(*init, corpus, cfg, &std::cout)
                         : train(corpus, cfg, &std::cout);
  for (size_t e = 0; e < res.snapshots.size(); ++e) {
    const std::string path =
        (fs::path(outdir) / ("epoch" + std::to_string(e + 1) + ".ckpt")).string();
    save_checkpoint(path, res.snapshots[e]);
  }
  Model avg = average_checkpoints(res.snapshots);
  const std::string avg_path = (fs::path(outdir) / "average.ckpt").string();
  save_checkpoint(avg_path, avg);
  std::printf("wrote %zu checkpoint(s) and %s\n", res.snapshots.size(),
              avg_path.c_str());
  return 0;
}

int cmd_prune(const std::string& manifest_path, double lower, double upper,
              const std::string& outdir, int jobs) {
  ensure_dir(outdir);
  const auto entries = read_manifest(manifest_path);
  std::vector<ScoredRecording> corpus;
  corpus.reserve(entries.size());
  for (const auto& e : entries) {
    ScoredRecording rec;
    rec.id = e.id;
    rec.sap = read_sap(e.sap_path);
    rec.labels = segments_to_labels(read_rttm_file(e.rttm_path),
                                    rec.sap.speakers, rec.sap.values.rows(),
                                    rec.sap.frame_duration);
    corpus.push_back(std::move(rec));
  }
  const PruneTable table = score_corpus(corpus, jobs);
  const auto keep = select_hard(table, lower, upper);
  write_prune_table((fs::path(outdir) / "prune_table.tsv").string(), table);

  std::vector<ManifestEntry> kept;
  for (const auto& e : entries) {
    if (std::find(keep.begin(), keep.end(), e.id) != keep.end()) kept.push_back(e);
  }
  const std::string mpath = (fs::path(outdir) / "pruned_manifest.tsv").string();
  write_manifest(mpath, kept);
  if (kept.empty()) {
    std::fprintf(stderr, "warning: pruning window [%g, %g] selected 0 recordings\n",
                 lower, upper);
  }
  std::printf("kept %zu of %zu recording(s); wrote %s\n", kept.size(),
              entries.size(), mpath.c_str());
  return 0;
}

int cmd_calibrate(const std::string& manifest_path, double lo, double hi,
                  double step, const ScoringConfig& sc, const std::string& out,
                  int jobs) {
  const auto entries = read_manifest(manifest_path);
  std::vector<std::pair<SapSequence, std::vector<Segment>>> pairs;
  for (const auto& e : entries) {
    pairs.emplace_back(read_sap(e.sap_path), read_rttm_file(e.rttm_path));
  }
  const auto curve = sweep_bias(pairs, make_grid(lo, hi, step), sc, jobs);
  write_calibration_curve(out, curve);
  std::printf("best_bias\t%.4f\nbest_der\t%.6f\n", curve.best_bias, curve.best_der);
  return 0;
}

int cmd_infer(const std::string& manifest_path, const std::string& model_path,
              const std::string& outdir, double bias, const ScoringConfig& sc,
              bool do_score) {
  ensure_dir(outdir);
  Model model = load_checkpoint(model_path);
  const auto entries = read_manifest(manifest_path);
  std::vector<DerBreakdown> parts;
  if (do_score) std::printf("recording_id\tder\tmiss\tfa\tconf\n");
  for (const auto& e : entries) {
    TrainingExample ex;
    ex.features = read_feature_cache(e.feat_path);
    ex.sap = read_sap(e.sap_path);
    if (bias != 0.0) ex.sap = apply_bias(ex.sap, bias);
    MatrixF logits = model.forward(ex.features.values, ex.sap.values, false);
    SapSequence corrected{logits, ex.sap.frame_duration, ex.sap.speakers};
    auto segments = sap_to_segments(corrected, sc, e.id);
    write_rttm_file((fs::path(outdir) / (e.id + ".rttm")).string(), segments);
    if (do_score) {
      const auto ref = read_rttm_file(e.rttm_path);
      const DerBreakdown b = der(ref, segments, sc);
      parts.push_back(b);
      std::printf("%s\t%.6f\t%.6f\t%.6f\t%.6f\n", e.id.c_str(), b.der, b.miss,
                  b.fa, b.conf);
    }
  }
  if (do_score && !parts.empty()) {
    const DerBreakdown t = aggregate_der(parts);
    std::printf("TOTAL\t%.6f\t%.6f\t%.6f\t%.6f\n", t.der, t.miss, t.fa, t.conf);
  }
  std::printf("wrote %zu hypothesis RTTM(s) to %s\n", entries.size(),
              outdir.c_str());
  return 0;
}

int cmd_score(const std::string& ref_path, const std::string& hyp_path,
              const ScoringConfig& sc, const std::string& out) {
  const auto ref_all = read_rttm_file(ref_path);
  auto hyp_all = read_rttm_file(hyp_path);

  // group per recording; hyp-only recordings cannot be scored
  std::vector<std::string> ids;
  for (const auto& s : ref_all) {
    if (std::find(ids.begin(), ids.end(), s.recording_id) == ids.end()) {
      ids.push_back(s.recording_id);
    }
  }
  for (const auto& s : hyp_all) {
    if (std::find(ids.begin(), ids.end(), s.recording_id) == ids.end()) {
      std::fprintf(stderr, "warning: hypothesis recording %s has no reference; skipped\n",
                   s.recording_id.c_str());
    }
  }

  std::ostringstream table;
  table << "recording_id\tder\tmiss\tfa\tconf\tscored_speech\tscored_time\n";
  std::vector<DerBreakdown> parts;
  char buf[160];
  for (const auto& id : ids) {
    std::vector<Segment> ref, hyp;
    for (const auto& s : ref_all) if (s.recording_id == id) ref.push_back(s);
    for (const auto& s : hyp_all) if (s.recording_id == id) hyp.push_back(s);
    if (sc.median_frames > 1 && !hyp.empty()) {
      // the filter lives on the 0.1 s grid: rasterize, filter, convert back
      std::vector<std::string> speakers;
      for (const auto& s : hyp) {
        if (std::find(speakers.begin(), speakers.end(), s.speaker) == speakers.end())
          speakers.push_back(s.speaker);
      }
      double end = 0;
      for (const auto& s : hyp) end = std::max(end, s.onset + s.duration);
      const auto frames = static_cast<Eigen::Index>(std::ceil(end / kFrameDuration));
      LabelMatrix grid = segments_to_labels(hyp, speakers, frames);
      hyp = labels_to_segments(median_filter(grid, sc.median_frames), id);
    }
    const DerBreakdown b = der(ref, hyp, sc);
    parts.push_back(b);
    std::snprintf(buf, sizeof buf, "%s\t%.6f\t%.6f\t%.6f\t%.6f\t%.2f\t%.2f",
                  id.c_str(), b.der, b.miss, b.fa, b.conf, b.scored_speech,
                  b.scored_time);
    table << buf << '\n';
  }
  const DerBreakdown t = aggregate_der(parts);
  std::snprintf(buf, sizeof buf, "TOTAL\t%.6f\t%.6f\t%.6f\t%.6f\t%.2f\t%.2f",
                t.der, t.miss, t.fa, t.conf, t.scored_speech, t.scored_time);
  table << buf << '\n';
  std::fputs(table.str().c_str(), stdout);
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open for writing: " + out);
    os << table.str();
  }
  return 0;
}

int cmd_plotdist(const std::string& manifest_path, int bins, double bias,
                 const std::string& out) {
  const auto entries = read_manifest(manifest_path);
  std::vector<std::pair<SapSequence, LabelMatrix>> pairs;
  for (const auto& e : entries) {
    SapSequence sap = read_sap(e.sap_path);
    if (bias != 0.0) sap = apply_bias(sap, bias);
    LabelMatrix labels =
        segments_to_labels(read_rttm_file(e.rttm_path), sap.speakers,
                           sap.values.rows(), sap.frame_duration);
    pairs.emplace_back(std::move(sap), std::move(labels));
  }
  const SapHistogram hist = sap_histogram(pairs, bins);
  write_sap_histogram(out, hist);
  std::int64_t total = 0;
  for (size_t b = 0; b < hist.speech_counts.size(); ++b) {
    total += hist.speech_counts[b] + hist.silence_counts[b];
  }
  std::printf("wrote %s (%lld cells in %d bins)\n", out.c_str(),
              static_cast<long long>(total), bins);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DiaCorrect: error correction for 2-speaker diarization outputs"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::simple);
  std::string config_path;  // consumed by the pre-scan; declared so CLI11 accepts it
  app.add_option("--config", config_path,
                 "key=value config file (default: $DIACORRECT_CONFIG)");

  try {
    const KV kv = load_config_kv(argc, argv);

    // ---- simulate ----
    int sim_count = 10;
    double sim_duration = 60.0;
    std::uint64_t sim_seed = 0;
    std::string sim_outdir = "corpus";
    CorruptionConfig sim_cc;
    sim_cc.flip_prob = 0.08;
    sim_cc.logit_noise_std = 1.0;
    kv_set(kv, "count", &sim_count);
    kv_set(kv, "duration", &sim_duration);
    kv_set(kv, "seed", &sim_seed);
    kv_set(kv, "outdir", &sim_outdir);
    apply_corruption_kv(kv, &sim_cc);
    auto* sim = app.add_subcommand("simulate",
                                   "generate toy conversations with corrupted oracle SAPs");
    sim->add_option("-n,--count", sim_count, "number of recordings")->capture_default_str();
    sim->add_option("--duration", sim_duration, "seconds per recording")->capture_default_str();
    sim->add_option("--seed", sim_seed, "master seed")->capture_default_str();
    sim->add_option("--outdir", sim_outdir, "output directory")->capture_default_str();
    sim->add_option("--flip-prob", sim_cc.flip_prob, "per-cell class flip probability")->capture_default_str();
    sim->add_option("--noise-std", sim_cc.logit_noise_std, "logit noise sigma")->capture_default_str();
    sim->add_option("--logit-scale", sim_cc.logit_scale, "clean logit magnitude")->capture_default_str();
    sim->add_option("--global-bias", sim_cc.global_bias, "miscalibration bias added to logits")->capture_default_str();
    sim->callback([&] { cmd_simulate(sim_count, sim_duration, sim_seed, sim_outdir, sim_cc); });

    // ---- train / finetune ----
    TrainConfig tc;
    std::string train_manifest = "corpus/manifest.tsv";
    std::string train_outdir = "exp";
    std::string init_ckpt;
    apply_config(kv, &tc);
    kv_set(kv, "manifest", &train_manifest);
    kv_set(kv, "outdir", &train_outdir);
    for (const char* verb : {"train", "finetune"}) {
      auto* cmd = app.add_subcommand(
          verb, std::string(verb) == "train"
                    ? "train a correction model from scratch"
                    : "continue training from an existing checkpoint");
      cmd->add_option("--manifest", train_manifest, "training manifest")->capture_default_str();
      cmd->add_option("--outdir", train_outdir, "checkpoint directory")->capture_default_str();
      cmd->add_option("--epochs", tc.epochs)->capture_default_str();
      cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
      cmd->add_option("--chunk", tc.chunk_frames)->capture_default_str();
      cmd->add_option("--batch", tc.batch_size)->capture_default_str();
      cmd->add_option("--seed", tc.seed)->capture_default_str();
      cmd->add_option("--max-steps", tc.max_steps)->capture_default_str();
      cmd->add_option("--grad-clip", tc.grad_clip)->capture_default_str();
      if (std::string(verb) == "finetune") {
        cmd->add_option("--init", init_ckpt, "checkpoint to start from")->required();
        cmd->callback([&] {
          Model init = load_checkpoint(init_ckpt);
          run_training_cmd(&init, train_manifest, train_outdir, tc);
        });
      } else {
        cmd->callback([&] { run_training_cmd(nullptr, train_manifest, train_outdir, tc); });
      }
    }

    // ---- prune ----
    std::string prune_manifest = "corpus/manifest.tsv";
    std::string prune_outdir = "pruned";
    double lower = 8.0, upper = 40.0;
    int prune_jobs = 1;
    kv_set(kv, "manifest", &prune_manifest);
    kv_set(kv, "lower", &lower);
    kv_set(kv, "upper", &upper);
    auto* prune = app.add_subcommand("prune", "keep recordings whose baseline DER falls in a window");
    prune->add_option("--manifest", prune_manifest)->capture_default_str();
    prune->add_option("--outdir", prune_outdir)->capture_default_str();
    prune->add_option("--lower", lower, "window lower bound, percent")->capture_default_str();
    prune->add_option("--upper", upper, "window upper bound, percent")->capture_default_str();
    prune->add_option("--jobs", prune_jobs, "parallel scoring threads")->capture_default_str();
    prune->callback([&] { cmd_prune(prune_manifest, lower, upper, prune_outdir, prune_jobs); });

    // ---- calibrate ----
    std::string cal_manifest = "corpus/manifest.tsv";
    std::string cal_out = "calibration.tsv";
    double grid_lo = -3.0, grid_hi = 3.0, grid_step = 0.25;
    int cal_jobs = 1;
    ScoringConfig cal_sc;
    kv_set(kv, "manifest", &cal_manifest);
    kv_set(kv, "grid_lo", &grid_lo);
    kv_set(kv, "grid_hi", &grid_hi);
    kv_set(kv, "grid_step", &grid_step);
    apply_scoring_kv(kv, &cal_sc);
    auto* cal = app.add_subcommand("calibrate", "sweep a SAP bias grid and report the DER-optimal bias");
    cal->add_option("--manifest", cal_manifest)->capture_default_str();
    cal->add_option("--out", cal_out, "curve output (TSV)")->capture_default_str();
    cal->add_option("--grid-lo", grid_lo)->capture_default_str();
    cal->add_option("--grid-hi", grid_hi)->capture_default_str();
    cal->add_option("--grid-step", grid_step)->capture_default_str();
    cal->add_option("--jobs", cal_jobs)->capture_default_str();
    add_scoring_flags(cal, &cal_sc);
    cal->callback([&] {
      cmd_calibrate(cal_manifest, grid_lo, grid_hi, grid_step, cal_sc, cal_out, cal_jobs);
    });

    // ---- infer ----
    std::string inf_manifest = "corpus/manifest.tsv";
    std::string inf_model = "exp/average.ckpt";
    std::string inf_outdir = "hyp";
    double inf_bias = 0.0;
    bool inf_score = false;
    ScoringConfig inf_sc;
    kv_set(kv, "manifest", &inf_manifest);
    apply_scoring_kv(kv, &inf_sc);
    auto* inf = app.add_subcommand("infer", "run the correction model and write hypothesis RTTMs");
    inf->add_option("--manifest", inf_manifest)->capture_default_str();
    inf->add_option("--model", inf_model, "checkpoint to load")->capture_default_str();
    inf->add_option("--outdir", inf_outdir)->capture_default_str();
    inf->add_option("--bias", inf_bias, "calibration bias subtracted from input SAPs")->capture_default_str();
    inf->add_flag("--score", inf_score, "also score against the manifest references");
    add_scoring_flags(inf, &inf_sc);
    inf->callback([&] {
      cmd_infer(inf_manifest, inf_model, inf_outdir, inf_bias, inf_sc, inf_score);
    });

    // ---- score ----
    std::string score_ref, score_hyp, score_out;
    ScoringConfig score_sc;
    apply_scoring_kv(kv, &score_sc);
    auto* score = app.add_subcommand("score", "DER of a hypothesis RTTM against a reference RTTM");
    score->add_option("--ref", score_ref, "reference RTTM")->required();
    score->add_option("--hyp", score_hyp, "hypothesis RTTM")->required();
    score->add_option("--out", score_out, "also write the report here");
    add_scoring_flags(score, &score_sc);
    score->callback([&] { cmd_score(score_ref, score_hyp, score_sc, score_out); });

    // ---- plotdist ----
    std::string pd_manifest = "corpus/manifest.tsv";
    std::string pd_out = "sap_hist.tsv";
    int pd_bins = 50;
    double pd_bias = 0.0;
    kv_set(kv, "manifest", &pd_manifest);
    kv_set(kv, "bins", &pd_bins);
    auto* pd = app.add_subcommand("plotdist", "class-conditional SAP logit histograms (plot-ready TSV)");
    pd->alias("plot-dist");
    pd->add_option("--manifest", pd_manifest)->capture_default_str();
    pd->add_option("--out", pd_out)->capture_default_str();
    pd->add_option("--bins", pd_bins)->capture_default_str();
    pd->add_option("--bias", pd_bias, "bias subtracted before binning")->capture_default_str();
    pd->callback([&] { cmd_plotdist(pd_manifest, pd_bins, pd_bias, pd_out); });

    // the pre-scan accepts --config before or after the verb; let CLI11 do too
    for (CLI::App* sub : app.get_subcommands({})) {
      sub->add_option("--config", config_path,
                      "key=value config file (default: $DIACORRECT_CONFIG)");
    }

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
