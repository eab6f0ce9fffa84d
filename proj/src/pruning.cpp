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

#include "diacorrect/pruning.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "diacorrect/parallel.hpp"

namespace diacorrect {

PruneTable score_corpus(const std::vector<ScoredRecording>& corpus, int jobs) {
  // Baseline scoring is deliberately strict: exact labels need no collar,
  // and filtering would hide exactly the errors pruning looks for.
  ScoringConfig cfg;
  cfg.collar = 0.0;
  cfg.median_frames = 1;
  cfg.threshold_logit = 0.0;

  PruneTable table;
  table.rows.resize(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const ScoredRecording& rec = corpus[i];
    if (rec.sap.values.rows() != rec.labels.values.rows() ||
        rec.sap.values.cols() != rec.labels.values.cols()) {
      throw std::invalid_argument("recording " + rec.id +
                                  ": sap/label shape mismatch");
    }
    const auto ref = labels_to_segments(rec.labels, rec.id);
    const auto hyp = sap_to_segments(rec.sap, cfg, rec.id);
    const DerBreakdown b = der(ref, hyp, cfg);
    table.rows[i] = {rec.id, b.der, b.miss, b.fa, b.conf};
  });
  return table;
}

std::vector<std::string> select_hard(const PruneTable& table, double lower,
                                     double upper) {
  if (!(lower < upper)) {
    throw std::invalid_argument("pruning window requires lower < upper");
  }
  std::vector<std::string> ids;
  for (const auto& row : table.rows) {
    if (row.der >= lower && row.der <= upper) ids.push_back(row.id);
  }
  return ids;
}

void write_prune_table(const std::string& path, const PruneTable& table) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "recording_id\tder\tmiss\tfa\tconf\n";
  char buf[128];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\t%.6f", row.der, row.miss,
                  row.fa, row.conf);
    os << row.id << '\t' << buf << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

PruneTable read_prune_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  PruneTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("recording_id\t", 0) == 0) continue;
    std::istringstream ss(line);
    PruneRow row;
    if (!(ss >> row.id >> row.der >> row.miss >> row.fa >> row.conf)) {
      throw ParseError("prune table parse error at line " +
                       std::to_string(lineno));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace diacorrect
