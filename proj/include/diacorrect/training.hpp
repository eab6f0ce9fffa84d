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

#ifndef DIACORRECT_TRAINING_HPP_
#define DIACORRECT_TRAINING_HPP_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "diacorrect/corpus.hpp"
#include "diacorrect/features.hpp"
#include "diacorrect/model.hpp"

namespace diacorrect {

struct TrainConfig {
  int epochs = 5;
  double learning_rate = 1e-5;
  double beta1 = 0.9;    // Adam first-moment decay
  double beta2 = 0.999;  // Adam second-moment decay
  double adam_eps = 1e-8;
  int chunk_frames = 500;  // 50 s at the 0.1 s grid
  int batch_size = 8;      // chunks accumulated per optimizer step
  std::uint64_t seed = 0;
  std::int64_t max_steps = -1;  // optimizer-step budget; -1 = no cap
  double grad_clip = 0.0;       // global-norm clip; 0 = off

  void validate() const;  // throws std::invalid_argument
};

// PIT-BCE result: mean binary cross entropy (natural log) under the best
// column permutation. perm[c] is the logit column paired with label column c.
struct LossReport {
  double loss = 0.0;
  std::vector<int> best_perm;
};

// Mean over all T*C cells of BCE(sigmoid(logit), label), minimized over the
// C! column permutations. Stable logit form; never forms sigmoid before log.
template <typename S>
LossReport pit_bce(const RowMatrix<S>& logits, const BinaryMatrix& labels);

// d(loss)/d(logits) for a fixed permutation (normally LossReport.best_perm):
// (sigmoid(z) - y) / (T*C) routed through the permutation.
template <typename S>
RowMatrix<S> pit_bce_grad(const RowMatrix<S>& logits, const BinaryMatrix& labels,
                          const std::vector<int>& perm);

extern template LossReport pit_bce<float>(const MatrixF&, const BinaryMatrix&);
extern template LossReport pit_bce<double>(const MatrixD&, const BinaryMatrix&);
extern template MatrixF pit_bce_grad<float>(const MatrixF&, const BinaryMatrix&,
                                            const std::vector<int>&);
extern template MatrixD pit_bce_grad<double>(const MatrixD&, const BinaryMatrix&,
                                             const std::vector<int>&);

// One recording's aligned training triple.
struct TrainingExample {
  FeatureSequence features;
  SapSequence sap;
  LabelMatrix labels;
};

struct TrainResult {
  std::vector<Model> snapshots;    // one per completed (or truncated) epoch
  std::vector<double> epoch_loss;  // cell-weighted mean PIT-BCE per epoch
  std::vector<double> step_loss;   // batch loss per optimizer step
  std::int64_t steps = 0;
};

// Trains a fresh model (seeded init) on the corpus. Sequences are cut into
// chunk_frames chunks (short tail kept), shuffled per epoch with the seeded
// RNG, grouped into batches of batch_size chunks; gradients are accumulated
// across the batch with per-cell weighting and applied with Adam. A NaN/inf
// loss aborts with a diagnostic. If `log` is given, one line per epoch.
TrainResult train(const std::vector<TrainingExample>& corpus,
                  const TrainConfig& cfg, std::ostream* log = nullptr);

// Same loop, but starts from the given model. max_steps = 0 returns the
// input model unchanged (one snapshot).
TrainResult fine_tune(const Model& init, const std::vector<TrainingExample>& corpus,
                      const TrainConfig& cfg, std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Experiment file plumbing
// ---------------------------------------------------------------------------

// Manifest: one record per line, tab-separated:
//   recording_id <TAB> feature_path <TAB> sap_path <TAB> rttm_path
struct ManifestEntry {
  std::string id;
  std::string feat_path;
  std::string sap_path;
  std::string rttm_path;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// Loads one aligned triple; label frame count is taken from the SAP file and
// speaker columns follow the SAP speaker order.
TrainingExample load_example(const ManifestEntry& entry);

// Flat key=value config file: '#' comments and blank lines ignored,
// later keys win. Throws ParseError on lines without '='.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies recognized keys (epochs, learning_rate, beta1, beta2, adam_eps,
// chunk_frames, batch_size, seed, max_steps, grad_clip) onto cfg; unknown
// keys are left for other consumers. Throws on unparseable values.
void apply_config(const std::map<std::string, std::string>& kv, TrainConfig* cfg);

}  // namespace diacorrect

#endif  // DIACORRECT_TRAINING_HPP_
