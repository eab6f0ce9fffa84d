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

#include "diacorrect/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "diacorrect/rng.hpp"

namespace diacorrect {

// ---------------------------------------------------------------------------
// RTTM
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) fields.push_back(tok);
  return fields;
}

bool parse_double(const std::string& s, double* out) {
  try {
    std::size_t used = 0;
    *out = std::stod(s, &used);
    return used == s.size() && std::isfinite(*out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::vector<Segment> parse_rttm(const std::string& text) {
  std::vector<Segment> segments;
  std::istringstream iss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(iss, line)) {
    ++line_no;
    const std::vector<std::string> f = split_ws(line);
    if (f.empty() || f[0] != "SPEAKER") continue;
    if (f.size() < 8) {
      throw ParseError("rttm parse error at line " + std::to_string(line_no) +
                       ": expected at least 8 fields");
    }
    Segment seg;
    seg.recording_id = f[1];
    if (!parse_double(f[3], &seg.onset) || !parse_double(f[4], &seg.duration)) {
      throw ParseError("rttm parse error at line " + std::to_string(line_no) +
                       ": non-numeric onset/duration");
    }
    seg.speaker = f[7];
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::string write_rttm(const std::vector<Segment>& segments) {
  std::string out;
  char buf[512];
  for (const Segment& seg : segments) {
    if (seg.duration < 0.0) {
      throw std::invalid_argument("negative segment duration for speaker " +
                                  seg.speaker);
    }
    // an empty field would shift the whitespace-delimited columns on re-parse
    if (seg.recording_id.empty()) {
      throw std::invalid_argument("segment without recording_id cannot be "
                                  "written to RTTM (speaker " + seg.speaker + ")");
    }
    std::snprintf(buf, sizeof(buf), "SPEAKER %s 1 %.2f %.2f <NA> <NA> %s <NA> <NA>\n",
                  seg.recording_id.c_str(), seg.onset, seg.duration,
                  seg.speaker.c_str());
    out += buf;
  }
  return out;
}

std::vector<Segment> read_rttm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open rttm file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rttm(ss.str());
}

void write_rttm_file(const std::string& path, const std::vector<Segment>& segments) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write rttm file: " + path);
  out << write_rttm(segments);
}

// ---------------------------------------------------------------------------
// Label grids
// ---------------------------------------------------------------------------

LabelMatrix segments_to_labels(const std::vector<Segment>& segments,
                               const std::vector<std::string>& speakers,
                               Eigen::Index num_frames, double frame_duration) {
  LabelMatrix labels;
  labels.frame_duration = frame_duration;
  labels.speakers = speakers;
  labels.values = BinaryMatrix::Zero(num_frames, static_cast<Eigen::Index>(speakers.size()));
  for (const Segment& seg : segments) {
    auto it = std::find(speakers.begin(), speakers.end(), seg.speaker);
    if (it == speakers.end()) {
      throw std::invalid_argument("unknown speaker in segment: " + seg.speaker);
    }
    const Eigen::Index c = it - speakers.begin();
    // Frame t is active iff its midpoint lies in [onset, onset+duration).
    Eigen::Index first =
        static_cast<Eigen::Index>(std::ceil(seg.onset / frame_duration - 0.5));
    Eigen::Index last = static_cast<Eigen::Index>(
        std::ceil((seg.onset + seg.duration) / frame_duration - 0.5));
    first = std::max<Eigen::Index>(first, 0);
    last = std::min(last, num_frames);
    for (Eigen::Index t = first; t < last; ++t) {
      const double mid = (static_cast<double>(t) + 0.5) * frame_duration;
      if (mid >= seg.onset && mid < seg.onset + seg.duration) labels.values(t, c) = 1;
    }
  }
  return labels;
}

std::vector<Segment> labels_to_segments(const LabelMatrix& labels,
                                        const std::string& recording_id) {
  std::vector<Segment> segments;
  const Eigen::Index frames = labels.values.rows();
  for (Eigen::Index c = 0; c < labels.values.cols(); ++c) {
    Eigen::Index run_start = -1;
    for (Eigen::Index t = 0; t <= frames; ++t) {
      const bool active = t < frames && labels.values(t, c) != 0;
      if (active && run_start < 0) {
        run_start = t;
      } else if (!active && run_start >= 0) {
        Segment seg;
        seg.recording_id = recording_id;
        seg.onset = static_cast<double>(run_start) * labels.frame_duration;
        seg.duration = static_cast<double>(t - run_start) * labels.frame_duration;
        seg.speaker = labels.speakers.empty() ? "spk" + std::to_string(c)
                                              : labels.speakers[c];
        segments.push_back(std::move(seg));
        run_start = -1;
      }
    }
  }
  return segments;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace {

// Windowed-sinc bandpass FIR. Cutoffs are inset from the nominal band so the
// transition skirts stay inside it.
std::vector<double> design_bandpass(double f_lo, double f_hi, int sample_rate,
                                    int taps) {
  std::vector<double> h(taps);
  const double nyq = sample_rate / 2.0;
  const double lo = f_lo / nyq;  // normalized [0,1]
  const double hi = f_hi / nyq;
  const int mid = taps / 2;
  for (int i = 0; i < taps; ++i) {
    const int k = i - mid;
    double lp_hi, lp_lo;
    if (k == 0) {
      lp_hi = hi;
      lp_lo = lo;
    } else {
      lp_hi = std::sin(M_PI * hi * k) / (M_PI * k);
      lp_lo = std::sin(M_PI * lo * k) / (M_PI * k);
    }
    const double w = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (taps - 1));  // Hamming
    h[i] = (lp_hi - lp_lo) * w;
  }
  return h;
}

// Bandpassed noise burst with a slow syllabic amplitude envelope.
void render_voice(Rng& rng, const std::vector<double>& fir, double env_rate_hz,
                  int sample_rate, std::size_t start, std::size_t len,
                  std::vector<float>* out) {
  const int taps = static_cast<int>(fir.size());
  std::vector<double> noise(len + taps);
  for (double& v : noise) v = rng.gauss();
  const double phase0 = rng.uniform() * 2.0 * M_PI;
  for (std::size_t i = 0; i < len; ++i) {
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) acc += fir[k] * noise[i + k];
    const double tsec = static_cast<double>(i) / sample_rate;
    const double env = 0.55 + 0.45 * std::sin(2.0 * M_PI * env_rate_hz * tsec + phase0);
    // Short fade at burst edges avoids clicks at turn boundaries.
    const double edge = std::min({1.0, i / 80.0, (len - 1 - i) / 80.0});
    (*out)[start + i] += static_cast<float>(0.25 * env * std::max(edge, 0.0) * acc);
  }
}

}  // namespace

SimulatedConversation simulate_conversation(std::uint64_t seed,
                                            double target_duration,
                                            const SimulationStats& stats) {
  if (target_duration < 10.0) {
    throw std::invalid_argument("target_duration must be at least 10 s");
  }
  Rng rng(seed ^ 0x5eedc0de5eedc0deULL);

  // Period identity: silence and overlap fractions scale with the expected
  // pause/overlap lengths relative to the turn cycle. The correction factors
  // compensate mass lost to truncation against short turns, same-speaker
  // unions and frame snapping (measured over 40 seeds at 60 s).
  const double period =
      stats.mean_turn / (1.0 - stats.silence_frac + stats.overlap_frac);
  const double mean_overlap =
      1.36 * stats.overlap_frac * period / stats.overlap_prob;
  const double mean_gap =
      0.92 * stats.silence_frac * period / (1.0 - stats.overlap_prob);

  const Eigen::Index num_frames =
      static_cast<Eigen::Index>(std::llround(target_duration / kFrameDuration));
  const double duration = static_cast<double>(num_frames) * kFrameDuration;

  // Sample alternating turns on the frame grid.
  struct Turn {
    int speaker;
    Eigen::Index start, len;  // frames
  };
  std::vector<Turn> turns;
  int speaker = static_cast<int>(rng.below(2));
  double cursor = rng.exponential(mean_gap * 0.5);  // lead-in silence
  while (true) {
    double turn_len = std::clamp(0.5 + rng.exponential(stats.mean_turn - 0.5), 0.5, 8.0);
    const double u = rng.uniform();
    Eigen::Index start = static_cast<Eigen::Index>(std::llround(cursor / kFrameDuration));
    Eigen::Index len = static_cast<Eigen::Index>(std::llround(turn_len / kFrameDuration));
    if (start >= num_frames) break;
    len = std::min<Eigen::Index>(len, num_frames - start);
    if (len >= 1) turns.push_back({speaker, start, len});

    double advance;
    if (u < stats.overlap_prob) {
      double ov = std::min(rng.exponential(mean_overlap), 0.8 * turn_len);
      advance = turn_len - ov;
    } else {
      advance = turn_len + rng.exponential(mean_gap);
    }
    cursor += std::max(advance, 0.1);
    speaker = 1 - speaker;
  }

  SimulatedConversation conv;
  conv.labels.frame_duration = kFrameDuration;
  conv.labels.speakers = {"spk0", "spk1"};
  conv.labels.values = BinaryMatrix::Zero(num_frames, 2);

  const std::size_t num_samples =
      static_cast<std::size_t>(std::llround(duration * kCorpusSampleRate));
  conv.stems[0].assign(num_samples, 0.0f);
  conv.stems[1].assign(num_samples, 0.0f);

  const int taps = 129;
  // Inset cutoffs by ~120 Hz so the FIR transition bands stay inside the
  // nominal per-speaker band.
  std::array<std::vector<double>, 2> firs = {
      design_bandpass(stats.bands[0][0] + 120.0, stats.bands[0][1] - 120.0,
                      kCorpusSampleRate, taps),
      design_bandpass(stats.bands[1][0] + 120.0, stats.bands[1][1] - 120.0,
                      kCorpusSampleRate, taps)};
  const std::array<double, 2> env_rates = {3.1, 4.3};

  const std::size_t samples_per_frame =
      static_cast<std::size_t>(std::llround(kFrameDuration * kCorpusSampleRate));
  for (const Turn& turn : turns) {
    for (Eigen::Index t = turn.start; t < turn.start + turn.len; ++t) {
      conv.labels.values(t, turn.speaker) = 1;
    }
    const std::size_t s0 = static_cast<std::size_t>(turn.start) * samples_per_frame;
    const std::size_t slen = static_cast<std::size_t>(turn.len) * samples_per_frame;
    render_voice(rng, firs[turn.speaker], env_rates[turn.speaker], kCorpusSampleRate,
                 s0, slen, &conv.stems[turn.speaker]);
  }

  conv.audio.sample_rate = kCorpusSampleRate;
  conv.audio.samples.resize(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    conv.audio.samples[i] =
        std::clamp(conv.stems[0][i] + conv.stems[1][i], -1.0f, 1.0f);
  }
  conv.segments = labels_to_segments(conv.labels);
  return conv;
}

// ---------------------------------------------------------------------------
// Corruption oracle
// ---------------------------------------------------------------------------

SapSequence corrupt_oracle(const LabelMatrix& labels, const CorruptionConfig& cfg) {
  if (cfg.flip_prob < 0.0 || cfg.flip_prob > 1.0) {
    throw std::invalid_argument("flip_prob must be in [0,1]");
  }
  if (cfg.logit_scale <= 0.0) {
    throw std::invalid_argument("logit_scale must be positive");
  }
  if (cfg.logit_noise_std < 0.0) {
    throw std::invalid_argument("logit_noise_std must be non-negative");
  }
  SapSequence sap;
  sap.frame_duration = labels.frame_duration;
  sap.speakers = labels.speakers;
  sap.values.resize(labels.values.rows(), labels.values.cols());
  Rng rng(cfg.seed ^ 0x0badc0ffee0ddf00ULL);
  for (Eigen::Index t = 0; t < labels.values.rows(); ++t) {
    for (Eigen::Index c = 0; c < labels.values.cols(); ++c) {
      double base = labels.values(t, c) != 0 ? cfg.logit_scale : -cfg.logit_scale;
      if (rng.uniform() < cfg.flip_prob) base = -base;
      const double noise = rng.gauss() * cfg.logit_noise_std;
      // bias is added in float so that a biased oracle equals the unbiased
      // one shifted by exactly the float bias (the calibration model)
      sap.values(t, c) = static_cast<float>(base + noise) +
                         static_cast<float>(cfg.global_bias);
    }
  }
  return sap;
}

// ---------------------------------------------------------------------------
// DCSAP01
// ---------------------------------------------------------------------------

namespace {
constexpr char kSapMagic[8] = {'D', 'C', 'S', 'A', 'P', '0', '1', '\n'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw FormatError("truncated sap file: " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("truncated sap file: " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_sap(const std::string& path, const SapSequence& sap) {
  if (static_cast<Eigen::Index>(sap.speakers.size()) != sap.values.cols()) {
    throw std::invalid_argument("speaker list does not match sap column count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write sap file: " + path);
  out.write(kSapMagic, 8);
  put_u64(out, static_cast<std::uint64_t>(sap.values.rows()));
  put_u64(out, static_cast<std::uint64_t>(sap.values.cols()));
  for (const std::string& name : sap.speakers) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  out.write(reinterpret_cast<const char*>(sap.values.data()),
            static_cast<std::streamsize>(sizeof(float) * sap.values.size()));
  if (!out) throw FormatError("short write to sap file: " + path);
}

SapSequence read_sap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open sap file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kSapMagic, 8) != 0) {
    throw FormatError("bad sap magic: " + path);
  }
  const std::uint64_t rows = get_u64(in, path);
  const std::uint64_t cols = get_u64(in, path);
  SapSequence sap;
  sap.speakers.resize(cols);
  for (std::uint64_t c = 0; c < cols; ++c) {
    const std::uint32_t len = get_u32(in, path);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw FormatError("truncated sap file: " + path);
    sap.speakers[c] = std::move(name);
  }
  sap.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(sap.values.data()),
          static_cast<std::streamsize>(sizeof(float) * rows * cols));
  if (!in) throw FormatError("truncated sap file: " + path);
  return sap;
}

}  // namespace diacorrect
