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

#ifndef DIACORRECT_NN_HPP_
#define DIACORRECT_NN_HPP_

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "diacorrect/common.hpp"
#include "diacorrect/rng.hpp"

// Minimal reverse-mode layer library backing the correction model.
//
// Layers store parameters plus accumulated gradients and keep a stack of
// forward contexts: forward(train=true) pushes one, backward() pops one.
// The stack makes weight sharing work — apply the same layer twice, then
// call backward twice in reverse order and the gradients accumulate.
// Everything is time-major: row t of a matrix is frame t.

namespace diacorrect::nn {

template <typename S>
using Mat = RowMatrix<S>;

template <typename S>
struct ParamView {
  std::string name;
  Mat<S>* value;
  Mat<S>* grad;
};

template <typename S>
inline void init_uniform(Mat<S>& m, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------------------

template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out)
      : W_(Mat<S>::Zero(in, out)),
        b_(Mat<S>::Zero(1, out)),
        Wg_(Mat<S>::Zero(in, out)),
        bg_(Mat<S>::Zero(1, out)) {}

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(W_.rows()));
    init_uniform(W_, rng, bound);
    init_uniform(b_, rng, bound);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    if (train) inputs_.push_back(x);
    Mat<S> y = x * W_;
    y.rowwise() += b_.row(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const Mat<S>& x = inputs_.back();
    Wg_.noalias() += x.transpose() * dy;
    bg_.row(0) += dy.colwise().sum();
    Mat<S> dx = dy * W_.transpose();
    inputs_.pop_back();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    out->push_back({prefix + ".weight", &W_, &Wg_});
    out->push_back({prefix + ".bias", &b_, &bg_});
  }
  void clear_cache() { inputs_.clear(); }

  Mat<S>& weight() { return W_; }
  Mat<S>& bias() { return b_; }

 private:
  Mat<S> W_, b_, Wg_, bg_;
  std::vector<Mat<S>> inputs_;
};

// ---------------------------------------------------------------------------

// Parametric ReLU with a single learnable slope (Conv-TasNet style).
template <typename S>
class PReLU {
 public:
  PReLU() : a_(Mat<S>::Constant(1, 1, S(0.25))), ag_(Mat<S>::Zero(1, 1)) {}

  Mat<S> forward(const Mat<S>& x, bool train) {
    if (train) inputs_.push_back(x);
    const S a = a_(0, 0);
    return x.array().max(S(0)).matrix() + a * x.array().min(S(0)).matrix();
  }

  Mat<S> backward(const Mat<S>& dy) {
    const Mat<S>& x = inputs_.back();
    const S a = a_(0, 0);
    auto neg = (x.array() <= S(0)).template cast<S>();
    ag_(0, 0) += (dy.array() * x.array() * neg).sum();
    Mat<S> dx = (dy.array() * ((S(1) - neg) + a * neg)).matrix();
    inputs_.pop_back();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    out->push_back({prefix + ".slope", &a_, &ag_});
  }
  void clear_cache() { inputs_.clear(); }

 private:
  Mat<S> a_, ag_;
  std::vector<Mat<S>> inputs_;
};

template <typename S>
class ReLU {
 public:
  Mat<S> forward(const Mat<S>& x, bool train) {
    if (train) inputs_.push_back(x);
    return x.array().max(S(0)).matrix();
  }
  Mat<S> backward(const Mat<S>& dy) {
    const Mat<S>& x = inputs_.back();
    Mat<S> dx = (dy.array() * (x.array() > S(0)).template cast<S>()).matrix();
    inputs_.pop_back();
    return dx;
  }
  void clear_cache() { inputs_.clear(); }

 private:
  std::vector<Mat<S>> inputs_;
};

// ---------------------------------------------------------------------------

// Normalizes contiguous groups of `channels` entries within each row, with a
// per-channel gain/bias shared across groups. For (T x C) sequence data the
// row is one group; for conv2d activations laid out (T x F*C, channel
// fastest) every (t, f) position is one group.
template <typename S>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int channels, double eps = 1e-5)
      : channels_(channels),
        eps_(static_cast<S>(eps)),
        g_(Mat<S>::Ones(1, channels)),
        b_(Mat<S>::Zero(1, channels)),
        gg_(Mat<S>::Zero(1, channels)),
        bg_(Mat<S>::Zero(1, channels)) {}

  Mat<S> forward(const Mat<S>& x, bool train) {
    const Eigen::Index groups = x.cols() / channels_;
    Mat<S> xhat(x.rows(), x.cols());
    Mat<S> istd(x.rows(), groups);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      for (Eigen::Index gidx = 0; gidx < groups; ++gidx) {
        auto seg = x.row(t).segment(gidx * channels_, channels_);
        const S m = seg.mean();
        const S var = (seg.array() - m).square().sum() / static_cast<S>(channels_);
        const S is = S(1) / std::sqrt(var + eps_);
        istd(t, gidx) = is;
        xhat.row(t).segment(gidx * channels_, channels_) = (seg.array() - m) * is;
      }
    }
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index gidx = 0; gidx < groups; ++gidx) {
      y.middleCols(gidx * channels_, channels_) =
          (xhat.middleCols(gidx * channels_, channels_).array().rowwise() *
           g_.row(0).array()).rowwise() + b_.row(0).array();
    }
    if (train) ctx_.push_back({std::move(xhat), std::move(istd)});
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const Mat<S>& xhat = ctx_.back().xhat;
    const Mat<S>& istd = ctx_.back().istd;
    const Eigen::Index groups = dy.cols() / channels_;
    Mat<S> dx(dy.rows(), dy.cols());
    const S inv_c = S(1) / static_cast<S>(channels_);
    for (Eigen::Index gidx = 0; gidx < groups; ++gidx) {
      auto dyb = dy.middleCols(gidx * channels_, channels_);
      auto xhb = xhat.middleCols(gidx * channels_, channels_);
      gg_.row(0) += (dyb.array() * xhb.array()).colwise().sum().matrix();
      bg_.row(0) += dyb.colwise().sum();
      // dx = istd * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
      Mat<S> dxhat = (dyb.array().rowwise() * g_.row(0).array()).matrix();
      Eigen::Array<S, Eigen::Dynamic, 1> m1 = dxhat.rowwise().mean().array();
      Eigen::Array<S, Eigen::Dynamic, 1> m2 =
          (dxhat.array() * xhb.array()).rowwise().sum() * inv_c;
      dx.middleCols(gidx * channels_, channels_) =
          ((dxhat.array().colwise() - m1) - (xhb.array().colwise() * m2))
              .colwise() * istd.col(gidx).array();
    }
    ctx_.pop_back();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    out->push_back({prefix + ".gain", &g_, &gg_});
    out->push_back({prefix + ".bias", &b_, &bg_});
  }
  void clear_cache() { ctx_.clear(); }

 private:
  struct Ctx {
    Mat<S> xhat, istd;
  };
  int channels_ = 0;
  S eps_ = S(1e-5);
  Mat<S> g_, b_, gg_, bg_;
  std::vector<Ctx> ctx_;
};

// ---------------------------------------------------------------------------

// Per-channel temporal convolution, zero padding keeps the length.
template <typename S>
class DepthwiseConv1d {
 public:
  DepthwiseConv1d() = default;
  DepthwiseConv1d(int channels, int kernel)
      : kernel_(kernel),
        W_(Mat<S>::Zero(kernel, channels)),
        b_(Mat<S>::Zero(1, channels)),
        Wg_(Mat<S>::Zero(kernel, channels)),
        bg_(Mat<S>::Zero(1, channels)) {}

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(kernel_));
    init_uniform(W_, rng, bound);
    init_uniform(b_, rng, bound);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    if (train) inputs_.push_back(x);
    const Eigen::Index t_len = x.rows();
    const int pad = kernel_ / 2;
    Mat<S> y = b_.row(0).replicate(t_len, 1);
    for (int k = 0; k < kernel_; ++k) {
      const int off = k - pad;
      const Eigen::Index dst0 = std::max(0, -off);
      const Eigen::Index src0 = std::max(0, off);
      const Eigen::Index n = t_len - std::abs(off);
      if (n <= 0) continue;
      y.middleRows(dst0, n).array() +=
          x.middleRows(src0, n).array().rowwise() * W_.row(k).array();
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const Mat<S>& x = inputs_.back();
    const Eigen::Index t_len = x.rows();
    const int pad = kernel_ / 2;
    bg_.row(0) += dy.colwise().sum();
    Mat<S> dx = Mat<S>::Zero(t_len, x.cols());
    for (int k = 0; k < kernel_; ++k) {
      const int off = k - pad;
      const Eigen::Index dst0 = std::max(0, -off);
      const Eigen::Index src0 = std::max(0, off);
      const Eigen::Index n = t_len - std::abs(off);
      if (n <= 0) continue;
      Wg_.row(k) += (x.middleRows(src0, n).array() * dy.middleRows(dst0, n).array())
                        .colwise().sum().matrix();
      dx.middleRows(src0, n).array() +=
          dy.middleRows(dst0, n).array().rowwise() * W_.row(k).array();
    }
    inputs_.pop_back();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    out->push_back({prefix + ".weight", &W_, &Wg_});
    out->push_back({prefix + ".bias", &b_, &bg_});
  }
  void clear_cache() { inputs_.clear(); }

 private:
  int kernel_ = 0;
  Mat<S> W_, b_, Wg_, bg_;
  std::vector<Mat<S>> inputs_;
};

// ---------------------------------------------------------------------------

// 2-D convolution over (time, freq) with activations laid out as one row
// per frame, columns = freq * channels with the channel index fastest.
// Time stride is 1. Runs as im2col + GEMM; the (T*F_out, C_out) GEMM
// result is the (T, F_out*C_out) output in the same memory order.
template <typename S>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int in_freq, int kt, int kf, int sf, int pt)
      : in_ch_(in_ch), out_ch_(out_ch), in_freq_(in_freq), kt_(kt), kf_(kf),
        sf_(sf), pt_(pt), out_freq_((in_freq - kf) / sf + 1),
        W_(Mat<S>::Zero(kt * kf * in_ch, out_ch)),
        b_(Mat<S>::Zero(1, out_ch)),
        Wg_(Mat<S>::Zero(kt * kf * in_ch, out_ch)),
        bg_(Mat<S>::Zero(1, out_ch)) {}

  int out_freq() const { return out_freq_; }

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(W_.rows()));
    init_uniform(W_, rng, bound);
    init_uniform(b_, rng, bound);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    if (x.cols() != static_cast<Eigen::Index>(in_freq_) * in_ch_) {
      throw std::invalid_argument("conv2d input width mismatch");
    }
    if (train) inputs_.push_back(x);
    gather(x);
    Mat<S> flat = cols_ * W_;  // (T*F_out, C_out)
    flat.rowwise() += b_.row(0);
    const Eigen::Index t_len = x.rows();
    Mat<S> y(t_len, static_cast<Eigen::Index>(out_freq_) * out_ch_);
    std::copy(flat.data(), flat.data() + flat.size(), y.data());
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const Mat<S>& x = inputs_.back();
    const Eigen::Index t_len = x.rows();
    Eigen::Map<const Mat<S>> dflat(dy.data(), t_len * out_freq_, out_ch_);
    gather(x);  // rebuilt rather than cached: the gather is cheap, the buffer is not
    Wg_.noalias() += cols_.transpose() * dflat;
    bg_.row(0) += dflat.colwise().sum();

    Mat<S> dcols = dflat * W_.transpose();
    Mat<S> dx = Mat<S>::Zero(t_len, x.cols());
    const int span = kf_ * in_ch_;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      for (int f = 0; f < out_freq_; ++f) {
        const S* src = dcols.data() + (t * out_freq_ + f) * dcols.cols();
        for (int dt = 0; dt < kt_; ++dt) {
          const Eigen::Index tt = t + dt - pt_;
          if (tt < 0 || tt >= t_len) continue;
          S* dst = dx.data() + tt * dx.cols() +
                   static_cast<Eigen::Index>(f) * sf_ * in_ch_;
          const S* s = src + dt * span;
          for (int i = 0; i < span; ++i) dst[i] += s[i];
        }
      }
    }
    inputs_.pop_back();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    out->push_back({prefix + ".weight", &W_, &Wg_});
    out->push_back({prefix + ".bias", &b_, &bg_});
  }
  void clear_cache() { inputs_.clear(); }

 private:
  // im2col: one row per (t, f_out) with layout [dt][df][c_in].
  void gather(const Mat<S>& x) {
    const Eigen::Index t_len = x.rows();
    cols_.resize(t_len * out_freq_, static_cast<Eigen::Index>(kt_) * kf_ * in_ch_);
    const int span = kf_ * in_ch_;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      for (int f = 0; f < out_freq_; ++f) {
        S* dst = cols_.data() + (t * out_freq_ + f) * cols_.cols();
        for (int dt = 0; dt < kt_; ++dt) {
          const Eigen::Index tt = t + dt - pt_;
          S* seg = dst + dt * span;
          if (tt < 0 || tt >= t_len) {
            std::fill(seg, seg + span, S(0));
          } else {
            const S* src = x.data() + tt * x.cols() +
                           static_cast<Eigen::Index>(f) * sf_ * in_ch_;
            std::copy(src, src + span, seg);
          }
        }
      }
    }
  }

  int in_ch_ = 0, out_ch_ = 0, in_freq_ = 0, kt_ = 0, kf_ = 0, sf_ = 0, pt_ = 0;
  int out_freq_ = 0;
  Mat<S> W_, b_, Wg_, bg_;
  Mat<S> cols_;  // reused workspace
  std::vector<Mat<S>> inputs_;
};

// ---------------------------------------------------------------------------

template <typename S>
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double p) : p_(static_cast<S>(p)) {}

  Mat<S> forward(const Mat<S>& x, bool train, Rng* rng) {
    if (!train || p_ <= S(0)) {
      if (train) masks_.push_back(Mat<S>());  // empty mask = identity
      return x;
    }
    Mat<S> mask(x.rows(), x.cols());
    const S scale = S(1) / (S(1) - p_);
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      mask.data()[i] = rng->uniform() < static_cast<double>(p_) ? S(0) : scale;
    }
    masks_.push_back(mask);
    return x.cwiseProduct(mask);
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> dx = masks_.back().size() == 0 ? dy : dy.cwiseProduct(masks_.back());
    masks_.pop_back();
    return dx;
  }
  void clear_cache() { masks_.clear(); }

 private:
  S p_ = S(0);
  std::vector<Mat<S>> masks_;
};

// ---------------------------------------------------------------------------

template <typename S>
class MultiheadSelfAttention {
 public:
  MultiheadSelfAttention() = default;
  MultiheadSelfAttention(int dim, int heads)
      : dim_(dim), heads_(heads), dk_(dim / heads),
        wq_(dim, dim), wk_(dim, dim), wv_(dim, dim), wo_(dim, dim) {
    if (dim % heads != 0) throw std::invalid_argument("dim must divide by heads");
  }

  void init(Rng& rng) {
    wq_.init(rng);
    wk_.init(rng);
    wv_.init(rng);
    wo_.init(rng);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    Ctx ctx;
    ctx.q = wq_.forward(x, train);
    ctx.k = wk_.forward(x, train);
    ctx.v = wv_.forward(x, train);
    const S scale = S(1) / std::sqrt(static_cast<S>(dk_));
    Mat<S> out(x.rows(), dim_);
    ctx.probs.resize(heads_);
    for (int h = 0; h < heads_; ++h) {
      auto qh = ctx.q.middleCols(h * dk_, dk_);
      auto kh = ctx.k.middleCols(h * dk_, dk_);
      auto vh = ctx.v.middleCols(h * dk_, dk_);
      Mat<S> scores = qh * kh.transpose() * scale;
      // row softmax, max-shifted
      for (Eigen::Index t = 0; t < scores.rows(); ++t) {
        auto row = scores.row(t).array();
        const S m = row.maxCoeff();
        scores.row(t) = (row - m).exp();
        scores.row(t) /= scores.row(t).sum();
      }
      out.middleCols(h * dk_, dk_) = scores * vh;
      ctx.probs[h] = std::move(scores);
    }
    ctx.concat = out;
    Mat<S> y = wo_.forward(out, train);
    if (train) {
      ctx_.push_back(std::move(ctx));
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Ctx& ctx = ctx_.back();
    Mat<S> dconcat = wo_.backward(dy);
    Mat<S> dq(dy.rows(), dim_), dk(dy.rows(), dim_), dv(dy.rows(), dim_);
    const S scale = S(1) / std::sqrt(static_cast<S>(dk_));
    for (int h = 0; h < heads_; ++h) {
      auto doh = dconcat.middleCols(h * dk_, dk_);
      const Mat<S>& p = ctx.probs[h];
      auto qh = ctx.q.middleCols(h * dk_, dk_);
      auto kh = ctx.k.middleCols(h * dk_, dk_);
      auto vh = ctx.v.middleCols(h * dk_, dk_);
      Mat<S> dp = doh * vh.transpose();
      dv.middleCols(h * dk_, dk_) = p.transpose() * doh;
      // softmax backward: ds = p .* (dp - rowsum(dp .* p))
      Eigen::Array<S, Eigen::Dynamic, 1> rowdot =
          (dp.array() * p.array()).rowwise().sum();
      Mat<S> ds = (p.array() * (dp.array().colwise() - rowdot)).matrix() * scale;
      dq.middleCols(h * dk_, dk_) = ds * kh;
      dk.middleCols(h * dk_, dk_) = ds.transpose() * qh;
    }
    Mat<S> dx = wq_.backward(dq);
    dx += wk_.backward(dk);
    dx += wv_.backward(dv);
    ctx_.pop_back();
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    wq_.collect(prefix + ".query", out);
    wk_.collect(prefix + ".key", out);
    wv_.collect(prefix + ".value", out);
    wo_.collect(prefix + ".out", out);
  }
  void clear_cache() {
    wq_.clear_cache();
    wk_.clear_cache();
    wv_.clear_cache();
    wo_.clear_cache();
    ctx_.clear();
  }

 private:
  struct Ctx {
    Mat<S> q, k, v, concat;
    std::vector<Mat<S>> probs;
  };
  int dim_ = 0, heads_ = 0, dk_ = 0;
  Linear<S> wq_, wk_, wv_, wo_;
  std::vector<Ctx> ctx_;
};

// ---------------------------------------------------------------------------

// Pre-norm transformer block: x + Drop(Attn(LN(x))), then x + Drop(FF(LN(x))).
template <typename S>
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(int dim, int heads, int ff_dim, double dropout)
      : norm1_(dim), attn_(dim, heads), drop1_(dropout), norm2_(dim),
        ff1_(dim, ff_dim), ff2_(ff_dim, dim), drop2_(dropout) {}

  void init(Rng& rng) {
    attn_.init(rng);
    ff1_.init(rng);
    ff2_.init(rng);
  }

  Mat<S> forward(const Mat<S>& x, bool train, Rng* rng) {
    Mat<S> a = drop1_.forward(attn_.forward(norm1_.forward(x, train), train),
                              train, rng);
    Mat<S> x1 = x + a;
    Mat<S> f = drop2_.forward(
        ff2_.forward(relu_.forward(ff1_.forward(norm2_.forward(x1, train), train),
                                   train), train),
        train, rng);
    return x1 + f;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> df = drop2_.backward(dy);
    Mat<S> dx1 = dy + norm2_.backward(ff1_.backward(
                          relu_.backward(ff2_.backward(df))));
    Mat<S> da = drop1_.backward(dx1);
    return dx1 + norm1_.backward(attn_.backward(da));
  }

  void collect(const std::string& prefix, std::vector<ParamView<S>>* out) {
    norm1_.collect(prefix + ".norm1", out);
    attn_.collect(prefix + ".attn", out);
    norm2_.collect(prefix + ".norm2", out);
    ff1_.collect(prefix + ".ff1", out);
    ff2_.collect(prefix + ".ff2", out);
  }
  void clear_cache() {
    norm1_.clear_cache();
    attn_.clear_cache();
    drop1_.clear_cache();
    norm2_.clear_cache();
    ff1_.clear_cache();
    relu_.clear_cache();
    ff2_.clear_cache();
    drop2_.clear_cache();
  }

 private:
  LayerNorm<S> norm1_;
  MultiheadSelfAttention<S> attn_;
  Dropout<S> drop1_;
  LayerNorm<S> norm2_;
  Linear<S> ff1_;
  ReLU<S> relu_;
  Linear<S> ff2_;
  Dropout<S> drop2_;
};

}  // namespace diacorrect::nn

#endif  // DIACORRECT_NN_HPP_
