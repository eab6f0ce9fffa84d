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

#include "diacorrect/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "diacorrect/rng.hpp"

namespace diacorrect {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (chunk_frames < 1) throw std::invalid_argument("chunk_frames must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (grad_clip < 0) throw std::invalid_argument("grad_clip must be >= 0");
  if (max_steps < -1) throw std::invalid_argument("max_steps must be >= -1");
}

// ---------------------------------------------------------------------------
// PIT-BCE
// ---------------------------------------------------------------------------

namespace {

// BCE of a single logit cell in the stable form max(z,0) - z*y + log1p(e^-|z|).
inline double bce_cell(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

template <typename S>
LossReport pit_bce(const RowMatrix<S>& logits, const BinaryMatrix& labels) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw std::invalid_argument("pit_bce: logits/labels shape mismatch");
  }
  const Eigen::Index t_len = logits.rows();
  const Eigen::Index n_spk = logits.cols();
  // total BCE for every (label column c, logit column h) pairing
  RowMatrix<double> pair_cost = RowMatrix<double>::Zero(n_spk, n_spk);
  for (Eigen::Index c = 0; c < n_spk; ++c) {
    for (Eigen::Index h = 0; h < n_spk; ++h) {
      double acc = 0.0;
      for (Eigen::Index t = 0; t < t_len; ++t) {
        acc += bce_cell(static_cast<double>(logits(t, h)),
                        static_cast<double>(labels(t, c)));
      }
      pair_cost(c, h) = acc;
    }
  }
  std::vector<int> perm(n_spk);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index c = 0; c < n_spk; ++c) cost += pair_cost(c, perm[c]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  LossReport rep;
  rep.loss = t_len == 0 ? 0.0 : best_cost / static_cast<double>(t_len * n_spk);
  rep.best_perm = best;
  return rep;
}

template <typename S>
RowMatrix<S> pit_bce_grad(const RowMatrix<S>& logits, const BinaryMatrix& labels,
                          const std::vector<int>& perm) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    throw std::invalid_argument("pit_bce_grad: shape mismatch");
  }
  if (static_cast<Eigen::Index>(perm.size()) != logits.cols()) {
    throw std::invalid_argument("pit_bce_grad: bad permutation size");
  }
  const double inv_cells =
      1.0 / static_cast<double>(logits.rows() * logits.cols());
  RowMatrix<S> grad(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int h = perm[c];
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
      const double z = static_cast<double>(logits(t, h));
      const double sig = 1.0 / (1.0 + std::exp(-z));
      grad(t, h) = static_cast<S>((sig - static_cast<double>(labels(t, c))) *
                                  inv_cells);
    }
  }
  return grad;
}

template LossReport pit_bce<float>(const MatrixF&, const BinaryMatrix&);
template LossReport pit_bce<double>(const MatrixD&, const BinaryMatrix&);
template MatrixF pit_bce_grad<float>(const MatrixF&, const BinaryMatrix&,
                                     const std::vector<int>&);
template MatrixD pit_bce_grad<double>(const MatrixD&, const BinaryMatrix&,
                                      const std::vector<int>&);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

struct ChunkRef {
  int example;
  Eigen::Index start;
  Eigen::Index len;
};

class Adam {
 public:
  Adam(Model* model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
    for (auto& p : model_->params()) {
      m_.push_back(MatrixF::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(MatrixF::Zero(p.value->rows(), p.value->cols()));
    }
  }

  void step() {
    ++t_;
    auto params = model_->params();
    if (cfg_.grad_clip > 0) {
      double sq = 0.0;
      for (auto& p : params) sq += p.grad->template cast<double>().squaredNorm();
      const double norm = std::sqrt(sq);
      if (norm > cfg_.grad_clip) {
        const float scale = static_cast<float>(cfg_.grad_clip / norm);
        for (auto& p : params) *p.grad *= scale;
      }
    }
    const float b1 = static_cast<float>(cfg_.beta1);
    const float b2 = static_cast<float>(cfg_.beta2);
    const float corr1 = 1.0f - std::pow(b1, static_cast<float>(t_));
    const float corr2 = 1.0f - std::pow(b2, static_cast<float>(t_));
    const float lr = static_cast<float>(cfg_.learning_rate);
    const float eps = static_cast<float>(cfg_.adam_eps);
    for (size_t i = 0; i < params.size(); ++i) {
      const MatrixF& g = *params[i].grad;
      m_[i] = b1 * m_[i] + (1.0f - b1) * g;
      v_[i] = b2 * v_[i] + (1.0f - b2) * g.cwiseProduct(g);
      params[i].value->array() -=
          lr * (m_[i].array() / corr1) /
          ((v_[i].array() / corr2).sqrt() + eps);
    }
  }

 private:
  Model* model_;
  TrainConfig cfg_;
  std::vector<MatrixF> m_, v_;
  std::int64_t t_ = 0;
};

TrainResult run_training(Model model, const std::vector<TrainingExample>& corpus,
                         const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("training corpus is empty");

  std::vector<ChunkRef> chunks;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    const Eigen::Index t_len = ex.features.values.rows();
    if (ex.sap.values.rows() != t_len ||
        ex.labels.values.rows() != t_len) {
      throw std::invalid_argument("training example " + std::to_string(i) +
                                  ": feature/sap/label lengths differ");
    }
    for (Eigen::Index s = 0; s < t_len; s += cfg.chunk_frames) {
      chunks.push_back({static_cast<int>(i), s,
                        std::min<Eigen::Index>(cfg.chunk_frames, t_len - s)});
    }
  }
  if (chunks.empty()) throw std::invalid_argument("no non-empty sequences in corpus");

  TrainResult result;
  model.reseed_dropout(cfg.seed);
  Adam opt(&model, cfg);
  Rng shuffle_rng(cfg.seed);
  std::vector<size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), size_t{0});

  const int n_spk = model.config().n_speakers;
  std::int64_t steps = 0;
  bool budget_exhausted = (cfg.max_steps == 0);
  for (int epoch = 0; epoch < cfg.epochs && !budget_exhausted; ++epoch) {
    // Fisher-Yates with the run RNG; deterministic per seed.
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_cost = 0.0;
    std::int64_t epoch_cells = 0;
    for (size_t b = 0; b < order.size() && !budget_exhausted;
         b += cfg.batch_size) {
      const size_t b_end = std::min(order.size(), b + cfg.batch_size);
      // cells in this batch; per-chunk grads get cell-proportional weights so
      // the step equals a padded batch with a loss mask
      std::int64_t batch_cells = 0;
      for (size_t k = b; k < b_end; ++k) {
        batch_cells += chunks[order[k]].len * n_spk;
      }
      model.zero_grad();
      double batch_cost = 0.0;
      for (size_t k = b; k < b_end; ++k) {
        const ChunkRef& ch = chunks[order[k]];
        const auto& ex = corpus[ch.example];
        MatrixF feats = ex.features.values.middleRows(ch.start, ch.len);
        MatrixF sap = ex.sap.values.middleRows(ch.start, ch.len);
        BinaryMatrix labels = ex.labels.values.middleRows(ch.start, ch.len);
        MatrixF logits = model.forward(feats, sap, /*train=*/true);
        LossReport rep = pit_bce(logits, labels);
        if (!std::isfinite(rep.loss)) {
          throw std::runtime_error(
              "training aborted: non-finite loss at step " +
              std::to_string(steps + 1) + " (example " +
              std::to_string(ch.example) + ", frame " +
              std::to_string(ch.start) + ")");
        }
        const double cells = static_cast<double>(ch.len * n_spk);
        batch_cost += rep.loss * cells;
        const float w = static_cast<float>(cells / static_cast<double>(batch_cells));
        MatrixF grad = pit_bce_grad(logits, labels, rep.best_perm) * w;
        model.backward(grad);
      }
      opt.step();
      ++steps;
      result.step_loss.push_back(batch_cost / static_cast<double>(batch_cells));
      epoch_cost += batch_cost;
      epoch_cells += batch_cells;
      if (cfg.max_steps >= 0 && steps >= cfg.max_steps) budget_exhausted = true;
    }
    if (epoch_cells > 0) {
      result.epoch_loss.push_back(epoch_cost / static_cast<double>(epoch_cells));
    }
    Model snap = model;
    snap.clear_cache();
    result.snapshots.push_back(std::move(snap));
    if (log) {
      (*log) << "epoch " << (epoch + 1) << "/" << cfg.epochs << "  loss "
             << (result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back())
             << "  steps " << steps << "\n";
    }
  }
  if (result.snapshots.empty()) {
    // max_steps == 0: nothing ran, hand back the starting point
    model.clear_cache();
    result.snapshots.push_back(std::move(model));
  }
  result.steps = steps;
  return result;
}

}  // namespace

TrainResult train(const std::vector<TrainingExample>& corpus,
                  const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  Model model{ModelConfig{}, cfg.seed};
  return run_training(std::move(model), corpus, cfg, log);
}

TrainResult fine_tune(const Model& init, const std::vector<TrainingExample>& corpus,
                      const TrainConfig& cfg, std::ostream* log) {
  return run_training(init, corpus, cfg, log);
}

// ---------------------------------------------------------------------------
// Manifest and config files
// ---------------------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      const size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos
                                            ? std::string::npos
                                            : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() != 4) {
      throw ParseError("manifest parse error at line " + std::to_string(lineno) +
                       ": expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    entries.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& e : entries) {
    os << e.id << '\t' << e.feat_path << '\t' << e.sap_path << '\t'
       << e.rttm_path << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

TrainingExample load_example(const ManifestEntry& entry) {
  TrainingExample ex;
  ex.features = read_feature_cache(entry.feat_path);
  ex.sap = read_sap(entry.sap_path);
  const auto segments = read_rttm_file(entry.rttm_path);
  ex.labels = segments_to_labels(segments, ex.sap.speakers,
                                 ex.sap.values.rows(), ex.sap.frame_duration);
  if (ex.features.values.rows() != ex.sap.values.rows()) {
    throw std::runtime_error("recording " + entry.id + ": feature frames (" +
                             std::to_string(ex.features.values.rows()) +
                             ") != sap frames (" +
                             std::to_string(ex.sap.values.rows()) + ")");
  }
  return ex;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config parse error at line " + std::to_string(lineno) +
                       ": expected key=value");
    }
    kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return kv;
}

namespace {

template <typename T, typename Fn>
void maybe_set(const std::map<std::string, std::string>& kv,
               const std::string& key, T* dst, Fn parse) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  try {
    *dst = parse(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad value '" +
                                it->second + "'");
  }
}

int to_int(const std::string& s) { return std::stoi(s); }
double to_double(const std::string& s) { return std::stod(s); }
std::uint64_t to_u64(const std::string& s) { return std::stoull(s); }
std::int64_t to_i64(const std::string& s) { return std::stoll(s); }

}  // namespace

void apply_config(const std::map<std::string, std::string>& kv, TrainConfig* cfg) {
  maybe_set(kv, "epochs", &cfg->epochs, to_int);
  maybe_set(kv, "learning_rate", &cfg->learning_rate, to_double);
  maybe_set(kv, "beta1", &cfg->beta1, to_double);
  maybe_set(kv, "beta2", &cfg->beta2, to_double);
  maybe_set(kv, "adam_eps", &cfg->adam_eps, to_double);
  maybe_set(kv, "chunk_frames", &cfg->chunk_frames, to_int);
  maybe_set(kv, "batch_size", &cfg->batch_size, to_int);
  maybe_set(kv, "seed", &cfg->seed, to_u64);
  maybe_set(kv, "max_steps", &cfg->max_steps, to_i64);
  maybe_set(kv, "grad_clip", &cfg->grad_clip, to_double);
}

}  // namespace diacorrect
