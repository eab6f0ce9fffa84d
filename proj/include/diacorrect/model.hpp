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

#ifndef DIACORRECT_MODEL_HPP_
#define DIACORRECT_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "diacorrect/common.hpp"
#include "diacorrect/nn.hpp"
#include "diacorrect/rng.hpp"

// The correction model: two parallel encoders feed a small transformer
// decoder that emits refreshed per-frame speaker logits.
//
//   speaker activities (T x 2) --> SAP encoder (shared weights, once per
//                                  speaker, input = [own, other]) --> 2x(T x 256)
//   acoustic features  (T x 345) --> speech encoder --> (T x 256)
//   concat (T x 768) --> linear --> 2 transformer layers --> linear --> (T x 2)

namespace diacorrect {

struct ModelConfig {
  int n_speakers = 2;
  int emb_dim = 256;      // embedding width shared by all branches
  int sap_hidden = 512;   // SAP encoder expansion width
  int dconv_kernel = 3;   // SAP encoder depthwise kernel
  int feat_dim = 345;     // stacked log-Mel width
  int decoder_layers = 2;
  int attn_heads = 4;
  int ff_dim = 1024;
  float dropout = 0.1f;

  bool operator==(const ModelConfig&) const = default;
};

// Frequency geometry of the speech encoder for a given input width.
// Both convs use kernel (3,7), stride (1,5), padding (1,0).
struct SpeechEncoderDims {
  int freq1;      // frequency bins after conv1
  int freq2;      // frequency bins after conv2
  int flat_dim;   // freq2 * emb_dim, input width of the projection
};
SpeechEncoderDims speech_encoder_dims(const ModelConfig& cfg);

namespace detail {

// Encodes one speaker's activity given (own, other) as the two inputs.
// The same instance runs once per speaker; weight sharing falls out of the
// layer cache stacks.
template <typename S>
class SapEncoder {
 public:
  SapEncoder() = default;
  explicit SapEncoder(const ModelConfig& cfg)
      : lin_in_(cfg.n_speakers, cfg.emb_dim),
        pw1_(cfg.emb_dim, cfg.sap_hidden),
        norm1_(cfg.sap_hidden),
        dconv_(cfg.sap_hidden, cfg.dconv_kernel),
        norm2_(cfg.sap_hidden),
        pw2_(cfg.sap_hidden, cfg.emb_dim) {}

  void init(Rng& rng) {
    lin_in_.init(rng);
    pw1_.init(rng);
    dconv_.init(rng);
    pw2_.init(rng);
  }

  nn::Mat<S> forward(const nn::Mat<S>& sap_pair, bool train) {
    nn::Mat<S> h0 = lin_in_.forward(sap_pair, train);
    nn::Mat<S> h = pw1_.forward(h0, train);
    h = prelu1_.forward(h, train);
    h = norm1_.forward(h, train);
    h = dconv_.forward(h, train);
    h = prelu2_.forward(h, train);
    h = norm2_.forward(h, train);
    h = pw2_.forward(h, train);
    return h + h0;  // skip from the input projection
  }

  // Returns the gradient w.r.t. the (own, other) input pair.
  nn::Mat<S> backward(const nn::Mat<S>& demb) {
    nn::Mat<S> dh = pw2_.backward(demb);
    dh = norm2_.backward(dh);
    dh = prelu2_.backward(dh);
    dh = dconv_.backward(dh);
    dh = norm1_.backward(dh);
    dh = prelu1_.backward(dh);
    nn::Mat<S> dh0 = pw1_.backward(dh);
    dh0 += demb;  // skip path
    return lin_in_.backward(dh0);
  }

  void collect(const std::string& prefix, std::vector<nn::ParamView<S>>* out) {
    lin_in_.collect(prefix + ".input_proj", out);
    pw1_.collect(prefix + ".pointwise1", out);
    prelu1_.collect(prefix + ".prelu1", out);
    norm1_.collect(prefix + ".norm1", out);
    dconv_.collect(prefix + ".dconv", out);
    prelu2_.collect(prefix + ".prelu2", out);
    norm2_.collect(prefix + ".norm2", out);
    pw2_.collect(prefix + ".pointwise2", out);
  }
  void clear_cache() {
    lin_in_.clear_cache();
    pw1_.clear_cache();
    prelu1_.clear_cache();
    norm1_.clear_cache();
    dconv_.clear_cache();
    prelu2_.clear_cache();
    norm2_.clear_cache();
    pw2_.clear_cache();
  }

 private:
  nn::Linear<S> lin_in_;
  nn::Linear<S> pw1_;
  nn::PReLU<S> prelu1_;
  nn::LayerNorm<S> norm1_;
  nn::DepthwiseConv1d<S> dconv_;
  nn::PReLU<S> prelu2_;
  nn::LayerNorm<S> norm2_;
  nn::Linear<S> pw2_;
};

template <typename S>
class SpeechEncoder {
 public:
  SpeechEncoder() = default;
  explicit SpeechEncoder(const ModelConfig& cfg) {
    const SpeechEncoderDims dims = speech_encoder_dims(cfg);
    conv1_ = nn::Conv2d<S>(1, cfg.emb_dim, cfg.feat_dim, 3, 7, 5, 1);
    norm1_ = nn::LayerNorm<S>(cfg.emb_dim);
    conv2_ = nn::Conv2d<S>(cfg.emb_dim, cfg.emb_dim, dims.freq1, 3, 7, 5, 1);
    norm2_ = nn::LayerNorm<S>(cfg.emb_dim);
    proj_ = nn::Linear<S>(dims.flat_dim, cfg.emb_dim);
  }

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    proj_.init(rng);
  }

  nn::Mat<S> forward(const nn::Mat<S>& feats, bool train) {
    nn::Mat<S> h = conv1_.forward(feats, train);
    h = prelu1_.forward(h, train);
    h = norm1_.forward(h, train);
    h = conv2_.forward(h, train);
    h = prelu2_.forward(h, train);
    h = norm2_.forward(h, train);
    return proj_.forward(h, train);
  }

  nn::Mat<S> backward(const nn::Mat<S>& demb) {
    nn::Mat<S> dh = proj_.backward(demb);
    dh = norm2_.backward(dh);
    dh = prelu2_.backward(dh);
    dh = conv2_.backward(dh);
    dh = norm1_.backward(dh);
    dh = prelu1_.backward(dh);
    return conv1_.backward(dh);
  }

  void collect(const std::string& prefix, std::vector<nn::ParamView<S>>* out) {
    conv1_.collect(prefix + ".conv1", out);
    prelu1_.collect(prefix + ".prelu1", out);
    norm1_.collect(prefix + ".norm1", out);
    conv2_.collect(prefix + ".conv2", out);
    prelu2_.collect(prefix + ".prelu2", out);
    norm2_.collect(prefix + ".norm2", out);
    proj_.collect(prefix + ".proj", out);
  }
  void clear_cache() {
    conv1_.clear_cache();
    prelu1_.clear_cache();
    norm1_.clear_cache();
    conv2_.clear_cache();
    prelu2_.clear_cache();
    norm2_.clear_cache();
    proj_.clear_cache();
  }

 private:
  nn::Conv2d<S> conv1_;
  nn::PReLU<S> prelu1_;
  nn::LayerNorm<S> norm1_;
  nn::Conv2d<S> conv2_;
  nn::PReLU<S> prelu2_;
  nn::LayerNorm<S> norm2_;
  nn::Linear<S> proj_;
};

template <typename S>
class Decoder {
 public:
  Decoder() = default;
  explicit Decoder(const ModelConfig& cfg)
      : lin_in_(cfg.emb_dim * (cfg.n_speakers + 1), cfg.emb_dim),
        norm_final_(cfg.emb_dim),
        lin_out_(cfg.emb_dim, cfg.n_speakers) {
    for (int i = 0; i < cfg.decoder_layers; ++i) {
      layers_.emplace_back(cfg.emb_dim, cfg.attn_heads, cfg.ff_dim,
                           cfg.dropout);
    }
  }

  void init(Rng& rng) {
    lin_in_.init(rng);
    for (auto& l : layers_) l.init(rng);
    lin_out_.init(rng);
  }

  nn::Mat<S> forward(const nn::Mat<S>& concat, bool train, Rng* rng) {
    nn::Mat<S> h = lin_in_.forward(concat, train);
    for (auto& l : layers_) h = l.forward(h, train, rng);
    h = norm_final_.forward(h, train);
    return lin_out_.forward(h, train);
  }

  nn::Mat<S> backward(const nn::Mat<S>& dlogits) {
    nn::Mat<S> dh = lin_out_.backward(dlogits);
    dh = norm_final_.backward(dh);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      dh = it->backward(dh);
    }
    return lin_in_.backward(dh);
  }

  void collect(const std::string& prefix, std::vector<nn::ParamView<S>>* out) {
    lin_in_.collect(prefix + ".input_proj", out);
    for (size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].collect(prefix + ".layer" + std::to_string(i), out);
    }
    norm_final_.collect(prefix + ".norm_final", out);
    lin_out_.collect(prefix + ".output_proj", out);
  }
  void clear_cache() {
    lin_in_.clear_cache();
    for (auto& l : layers_) l.clear_cache();
    norm_final_.clear_cache();
    lin_out_.clear_cache();
  }

 private:
  nn::Linear<S> lin_in_;
  std::vector<nn::TransformerLayer<S>> layers_;
  nn::LayerNorm<S> norm_final_;
  nn::Linear<S> lin_out_;
};

}  // namespace detail

template <typename S>
class CorrectionModel {
 public:
  CorrectionModel() = default;
  explicit CorrectionModel(const ModelConfig& cfg, uint64_t seed = 0)
      : cfg_(cfg), sap_enc_(cfg), speech_enc_(cfg), decoder_(cfg),
        dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    Rng rng(seed);
    sap_enc_.init(rng);
    speech_enc_.init(rng);
    decoder_.init(rng);
  }

  const ModelConfig& config() const { return cfg_; }

  // feats: (T x feat_dim), sap: (T x n_speakers); returns logits (T x n_speakers).
  nn::Mat<S> forward(const nn::Mat<S>& feats, const nn::Mat<S>& sap,
                     bool train = false) {
    if (feats.rows() != sap.rows()) {
      throw std::invalid_argument("feature/sap frame count mismatch");
    }
    if (sap.cols() != cfg_.n_speakers) {
      throw std::invalid_argument("sap width must equal speaker count");
    }
    const Eigen::Index t_len = feats.rows();
    nn::Mat<S> concat(t_len, cfg_.emb_dim * (cfg_.n_speakers + 1));
    for (int c = 0; c < cfg_.n_speakers; ++c) {
      nn::Mat<S> pair(t_len, 2);
      pair.col(0) = sap.col(c);          // own activity first,
      pair.col(1) = sap.col(1 - c);      // the other speaker second
      concat.middleCols(c * cfg_.emb_dim, cfg_.emb_dim) =
          sap_enc_.forward(pair, train);
    }
    concat.middleCols(cfg_.n_speakers * cfg_.emb_dim, cfg_.emb_dim) =
        speech_enc_.forward(feats, train);
    return decoder_.forward(concat, train, &dropout_rng_);
  }

  // Accumulates parameter gradients for the most recent train-mode forward.
  void backward(const nn::Mat<S>& dlogits) {
    nn::Mat<S> dconcat = decoder_.backward(dlogits);
    speech_enc_.backward(
        dconcat.middleCols(cfg_.n_speakers * cfg_.emb_dim, cfg_.emb_dim));
    // SAP encoder caches are stacked, so unwind speakers in reverse.
    for (int c = cfg_.n_speakers - 1; c >= 0; --c) {
      sap_enc_.backward(dconcat.middleCols(c * cfg_.emb_dim, cfg_.emb_dim));
    }
  }

  std::vector<nn::ParamView<S>> params() {
    std::vector<nn::ParamView<S>> out;
    sap_enc_.collect("sap_encoder", &out);
    speech_enc_.collect("speech_encoder", &out);
    decoder_.collect("decoder", &out);
    return out;
  }

  int64_t count_parameters() {
    int64_t n = 0;
    for (const auto& p : params()) n += p.value->size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params()) p.grad->setZero();
  }
  void clear_cache() {
    sap_enc_.clear_cache();
    speech_enc_.clear_cache();
    decoder_.clear_cache();
  }

  void reseed_dropout(uint64_t seed) {
    dropout_rng_ = Rng(seed ^ 0x9e3779b97f4a7c15ULL);
  }

 private:
  ModelConfig cfg_;
  detail::SapEncoder<S> sap_enc_;
  detail::SpeechEncoder<S> speech_enc_;
  detail::Decoder<S> decoder_;
  Rng dropout_rng_{0};
};

extern template class CorrectionModel<float>;
extern template class CorrectionModel<double>;

using Model = CorrectionModel<float>;

// Checkpoints hold the config and all named parameters as float32
// ("DCCKPT1\n" magic). Round-trips are bit exact.
void save_checkpoint(const std::string& path, Model& model);
Model load_checkpoint(const std::string& path);

// Element-wise parameter mean across snapshots of the same architecture.
Model average_checkpoints(std::vector<Model>& snapshots);

}  // namespace diacorrect

#endif  // DIACORRECT_MODEL_HPP_
