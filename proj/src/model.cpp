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

#include "diacorrect/model.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace diacorrect {

template class CorrectionModel<float>;
template class CorrectionModel<double>;

SpeechEncoderDims speech_encoder_dims(const ModelConfig& cfg) {
  // kernel 7 / stride 5 along frequency, no padding, applied twice
  SpeechEncoderDims d;
  d.freq1 = (cfg.feat_dim - 7) / 5 + 1;
  d.freq2 = (d.freq1 - 7) / 5 + 1;
  d.flat_dim = d.freq2 * cfg.emb_dim;
  if (d.freq2 < 1) throw std::invalid_argument("feat_dim too small for conv stack");
  return d;
}

namespace {

constexpr char kCkptMagic[] = "DCCKPT1\n";

void put_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f32(std::ostream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw FormatError("checkpoint truncated");
  return v;
}
uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw FormatError("checkpoint truncated");
  return v;
}
float get_f32(std::istream& is) {
  float v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw FormatError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kCkptMagic, 8);
  const ModelConfig& c = model.config();
  put_u32(os, static_cast<uint32_t>(c.n_speakers));
  put_u32(os, static_cast<uint32_t>(c.emb_dim));
  put_u32(os, static_cast<uint32_t>(c.sap_hidden));
  put_u32(os, static_cast<uint32_t>(c.dconv_kernel));
  put_u32(os, static_cast<uint32_t>(c.feat_dim));
  put_u32(os, static_cast<uint32_t>(c.decoder_layers));
  put_u32(os, static_cast<uint32_t>(c.attn_heads));
  put_u32(os, static_cast<uint32_t>(c.ff_dim));
  put_f32(os, c.dropout);
  auto params = model.params();
  put_u64(os, params.size());
  for (const auto& p : params) {
    put_u32(os, static_cast<uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u64(os, static_cast<uint64_t>(p.value->rows()));
    put_u64(os, static_cast<uint64_t>(p.value->cols()));
    os.write(reinterpret_cast<const char*>(p.value->data()),
             static_cast<std::streamsize>(p.value->size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  ModelConfig c;
  c.n_speakers = static_cast<int>(get_u32(is));
  c.emb_dim = static_cast<int>(get_u32(is));
  c.sap_hidden = static_cast<int>(get_u32(is));
  c.dconv_kernel = static_cast<int>(get_u32(is));
  c.feat_dim = static_cast<int>(get_u32(is));
  c.decoder_layers = static_cast<int>(get_u32(is));
  c.attn_heads = static_cast<int>(get_u32(is));
  c.ff_dim = static_cast<int>(get_u32(is));
  c.dropout = get_f32(is);
  Model model(c, 0);
  auto params = model.params();
  const uint64_t n = get_u64(is);
  if (n != params.size()) throw FormatError("checkpoint parameter count mismatch");
  for (auto& p : params) {
    const uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw FormatError("checkpoint truncated");
    if (name != p.name) throw FormatError("checkpoint parameter order mismatch: " + name);
    const auto rows = static_cast<Eigen::Index>(get_u64(is));
    const auto cols = static_cast<Eigen::Index>(get_u64(is));
    if (rows != p.value->rows() || cols != p.value->cols())
      throw FormatError("checkpoint shape mismatch for " + name);
    if (!is.read(reinterpret_cast<char*>(p.value->data()),
                 static_cast<std::streamsize>(p.value->size() * sizeof(float))))
      throw FormatError("checkpoint truncated");
  }
  return model;
}

Model average_checkpoints(std::vector<Model>& snapshots) {
  if (snapshots.empty()) throw std::invalid_argument("no snapshots to average");
  for (auto& m : snapshots) {
    if (!(m.config() == snapshots.front().config()))
      throw std::invalid_argument("snapshot configs differ");
  }
  Model avg = snapshots.front();
  auto avg_params = avg.params();
  // accumulate in double so the result is order-independent enough
  std::vector<RowMatrix<double>> sums(avg_params.size());
  for (size_t i = 0; i < sums.size(); ++i) {
    sums[i] = RowMatrix<double>::Zero(avg_params[i].value->rows(),
                                      avg_params[i].value->cols());
  }
  for (auto& m : snapshots) {
    auto ps = m.params();
    for (size_t i = 0; i < ps.size(); ++i) {
      sums[i] += ps[i].value->template cast<double>();
    }
  }
  const double inv = 1.0 / static_cast<double>(snapshots.size());
  for (size_t i = 0; i < sums.size(); ++i) {
    *avg_params[i].value = (sums[i] * inv).cast<float>();
  }
  return avg;
}

}  // namespace diacorrect
