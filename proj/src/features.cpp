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

#include "diacorrect/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <vector>

namespace diacorrect {

namespace {

constexpr int kNfft = 256;  // next power of two above the 200-sample window

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// In-place iterative radix-2 FFT.
void fft_radix2(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Triangular filterbank over FFT bins, HTK Mel scale, rows = filters.
MatrixD build_filterbank(int n_mels, int sample_rate, double f_lo, double f_hi) {
  const int n_bins = kNfft / 2 + 1;
  const double mel_lo = hz_to_mel(f_lo);
  const double mel_hi = hz_to_mel(f_hi);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  MatrixD fb = MatrixD::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / kNfft;
      if (f > left && f < center) {
        fb(m, k) = (f - left) / (center - left);
      } else if (f >= center && f < right) {
        fb(m, k) = (right - f) / (right - center);
      }
    }
  }
  return fb;
}

}  // namespace

std::vector<double> mel_filter_centers(int n_mels, int sample_rate, double f_lo,
                                       double f_hi) {
  (void)sample_rate;
  const double mel_lo = hz_to_mel(f_lo);
  const double mel_hi = hz_to_mel(f_hi);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    centers[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) / (n_mels + 1));
  }
  return centers;
}

MelFrames compute_logmel(const AudioClip& audio, int n_mels, double win, double hop) {
  if (audio.sample_rate != kCorpusSampleRate) {
    throw std::invalid_argument("unsupported sample rate: " +
                                std::to_string(audio.sample_rate));
  }
  const int win_samples = static_cast<int>(std::lround(win * audio.sample_rate));
  const int hop_samples = static_cast<int>(std::lround(hop * audio.sample_rate));
  const std::int64_t n = static_cast<std::int64_t>(audio.samples.size());
  if (n < win_samples) throw std::invalid_argument("audio too short");
  if (win_samples > kNfft) throw std::invalid_argument("analysis window exceeds FFT size");

  const std::int64_t num_frames = (n - win_samples) / hop_samples + 1;

  std::vector<double> window(win_samples);
  for (int i = 0; i < win_samples; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (win_samples - 1));
  }
  const MatrixD fb = build_filterbank(n_mels, audio.sample_rate, 0.0, 4000.0);
  const int n_bins = kNfft / 2 + 1;

  MelFrames out;
  out.frame_hop = hop;
  out.frame_len = win;
  out.values.resize(num_frames, n_mels);

  std::vector<std::complex<double>> buf(kNfft);
  Eigen::VectorXd mag(n_bins);
  for (std::int64_t t = 0; t < num_frames; ++t) {
    const float* frame = audio.samples.data() + t * hop_samples;
    for (int i = 0; i < win_samples; ++i) {
      buf[i] = std::complex<double>(static_cast<double>(frame[i]) * window[i], 0.0);
    }
    for (int i = win_samples; i < kNfft; ++i) buf[i] = 0.0;
    fft_radix2(buf);
    for (int k = 0; k < n_bins; ++k) mag(k) = std::abs(buf[k]);
    Eigen::VectorXd mel = fb * mag;
    for (int m = 0; m < n_mels; ++m) {
      out.values(t, m) = static_cast<float>(std::log(std::max(mel(m), 1e-10)));
    }
  }
  return out;
}

FeatureSequence stack_and_subsample(const MelFrames& mel, int context, int factor) {
  const Eigen::Index t0 = mel.values.rows();
  if (t0 == 0) throw std::invalid_argument("empty mel input");
  const Eigen::Index dim = mel.values.cols();
  const Eigen::Index frames_out = (t0 + factor - 1) / factor;
  const int width = 2 * context + 1;

  FeatureSequence out;
  out.values.resize(frames_out, width * dim);
  for (Eigen::Index t = 0; t < frames_out; ++t) {
    const Eigen::Index center = t * factor;
    for (int k = -context; k <= context; ++k) {
      Eigen::Index src = std::clamp<Eigen::Index>(center + k, 0, t0 - 1);
      out.values.block(t, (k + context) * dim, 1, dim) = mel.values.row(src);
    }
  }
  return out;
}

FeatureSequence extract_features(const AudioClip& audio) {
  return stack_and_subsample(compute_logmel(audio));
}

namespace {
constexpr char kFeatMagic[8] = {'D', 'C', 'F', 'E', 'A', 'T', '1', '\n'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw FormatError("truncated feature cache");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_feature_cache(const std::string& path, const FeatureSequence& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write feature cache: " + path);
  out.write(kFeatMagic, 8);
  put_u64(out, static_cast<std::uint64_t>(features.values.rows()));
  put_u64(out, static_cast<std::uint64_t>(features.values.cols()));
  out.write(reinterpret_cast<const char*>(features.values.data()),
            static_cast<std::streamsize>(sizeof(float) * features.values.size()));
  if (!out) throw FormatError("short write to feature cache: " + path);
}

FeatureSequence read_feature_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature cache: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kFeatMagic, 8) != 0) {
    throw FormatError("bad feature cache magic: " + path);
  }
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  FeatureSequence out;
  out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(out.values.data()),
          static_cast<std::streamsize>(sizeof(float) * rows * cols));
  if (!in) throw FormatError("truncated feature cache: " + path);
  return out;
}

}  // namespace diacorrect
