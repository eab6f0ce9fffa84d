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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "diacorrect/calibration.hpp"
#include "diacorrect/corpus.hpp"
#include "diacorrect/features.hpp"
#include "diacorrect/model.hpp"
#include "diacorrect/pruning.hpp"
#include "diacorrect/scoring.hpp"
#include "diacorrect/training.hpp"
#include "diacorrect/wav.hpp"

namespace py = pybind11;
using namespace diacorrect;

PYBIND11_MODULE(_core, m) {
  m.doc() = "DiaCorrect core: diarization error correction primitives";
  m.attr("FRAME_DURATION") = kFrameDuration;
  m.attr("SAMPLE_RATE") = kCorpusSampleRate;

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  // ---- plain data ----
  py::class_<Segment>(m, "Segment")
      .def(py::init([](std::string recording_id, double onset, double duration,
                       std::string speaker) {
             return Segment{std::move(recording_id), onset, duration,
                            std::move(speaker)};
           }),
           py::arg("recording_id") = "", py::arg("onset") = 0.0,
           py::arg("duration") = 0.0, py::arg("speaker") = "")
      .def_readwrite("recording_id", &Segment::recording_id)
      .def_readwrite("onset", &Segment::onset)
      .def_readwrite("duration", &Segment::duration)
      .def_readwrite("speaker", &Segment::speaker)
      .def("__repr__", [](const Segment& s) {
        std::ostringstream os;
        os << "Segment('" << s.recording_id << "', " << s.onset << ", "
           << s.duration << ", '" << s.speaker << "')";
        return os.str();
      });

  py::class_<LabelMatrix>(m, "LabelMatrix")
      .def(py::init([](BinaryMatrix values, double frame_duration,
                       std::vector<std::string> speakers) {
             return LabelMatrix{std::move(values), frame_duration,
                                std::move(speakers)};
           }),
           py::arg("values"), py::arg("frame_duration") = kFrameDuration,
           py::arg("speakers") = std::vector<std::string>{})
      .def_readwrite("values", &LabelMatrix::values)
      .def_readwrite("frame_duration", &LabelMatrix::frame_duration)
      .def_readwrite("speakers", &LabelMatrix::speakers);

  py::class_<SapSequence>(m, "SapSequence")
      .def(py::init([](MatrixF values, double frame_duration,
                       std::vector<std::string> speakers) {
             return SapSequence{std::move(values), frame_duration,
                                std::move(speakers)};
           }),
           py::arg("values"), py::arg("frame_duration") = kFrameDuration,
           py::arg("speakers") = std::vector<std::string>{})
      .def_readwrite("values", &SapSequence::values)
      .def_readwrite("frame_duration", &SapSequence::frame_duration)
      .def_readwrite("speakers", &SapSequence::speakers);

  py::class_<FeatureSequence>(m, "FeatureSequence")
      .def(py::init([](MatrixF values, double frame_duration) {
             return FeatureSequence{std::move(values), frame_duration};
           }),
           py::arg("values"), py::arg("frame_duration") = kFrameDuration)
      .def_readwrite("values", &FeatureSequence::values)
      .def_readwrite("frame_duration", &FeatureSequence::frame_duration);

  py::class_<AudioClip>(m, "AudioClip")
      .def(py::init([](std::vector<float> samples, int sample_rate) {
             return AudioClip{std::move(samples), sample_rate};
           }),
           py::arg("samples"), py::arg("sample_rate") = kCorpusSampleRate)
      .def_readwrite("samples", &AudioClip::samples)
      .def_readwrite("sample_rate", &AudioClip::sample_rate)
      .def("duration", &AudioClip::duration);

  py::class_<SimulatedConversation>(m, "SimulatedConversation")
      .def_readonly("audio", &SimulatedConversation::audio)
      .def_readonly("labels", &SimulatedConversation::labels)
      .def_readonly("segments", &SimulatedConversation::segments);

  py::class_<CorruptionConfig>(m, "CorruptionConfig")
      .def(py::init<>())
      .def_readwrite("flip_prob", &CorruptionConfig::flip_prob)
      .def_readwrite("logit_noise_std", &CorruptionConfig::logit_noise_std)
      .def_readwrite("logit_scale", &CorruptionConfig::logit_scale)
      .def_readwrite("global_bias", &CorruptionConfig::global_bias)
      .def_readwrite("seed", &CorruptionConfig::seed);

  // ---- features / io ----
  m.def("extract_features", &extract_features, py::arg("audio"),
        "Stacked log-Mel features (T x 345) on the 0.1 s grid");
  m.def("read_wav", &read_wav, py::arg("path"));
  m.def("write_wav", &write_wav, py::arg("path"), py::arg("audio"));
  m.def("parse_rttm", &parse_rttm, py::arg("text"));
  m.def("write_rttm", &write_rttm, py::arg("segments"));
  m.def("read_rttm_file", &read_rttm_file, py::arg("path"));
  m.def("write_rttm_file", &write_rttm_file, py::arg("path"), py::arg("segments"));
  m.def("read_sap", &read_sap, py::arg("path"));
  m.def("write_sap", &write_sap, py::arg("path"), py::arg("sap"));
  m.def("read_feature_cache", &read_feature_cache, py::arg("path"));
  m.def("write_feature_cache", &write_feature_cache, py::arg("path"),
        py::arg("features"));

  // ---- corpus ----
  m.def("segments_to_labels", &segments_to_labels, py::arg("segments"),
        py::arg("speakers"), py::arg("num_frames"),
        py::arg("frame_duration") = kFrameDuration);
  m.def("labels_to_segments", &labels_to_segments, py::arg("labels"),
        py::arg("recording_id") = "");
  m.def(
      "simulate_conversation",
      [](std::uint64_t seed, double duration) {
        return simulate_conversation(seed, duration);
      },
      py::arg("seed"), py::arg("duration"),
      py::call_guard<py::gil_scoped_release>());
  m.def("corrupt_oracle", &corrupt_oracle, py::arg("labels"), py::arg("config"));

  // ---- model ----
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("n_speakers", &ModelConfig::n_speakers)
      .def_readwrite("emb_dim", &ModelConfig::emb_dim)
      .def_readwrite("sap_hidden", &ModelConfig::sap_hidden)
      .def_readwrite("dconv_kernel", &ModelConfig::dconv_kernel)
      .def_readwrite("feat_dim", &ModelConfig::feat_dim)
      .def_readwrite("decoder_layers", &ModelConfig::decoder_layers)
      .def_readwrite("attn_heads", &ModelConfig::attn_heads)
      .def_readwrite("ff_dim", &ModelConfig::ff_dim)
      .def_readwrite("dropout", &ModelConfig::dropout);

  py::class_<Model>(m, "Model")
      .def(py::init<const ModelConfig&, std::uint64_t>(),
           py::arg("config") = ModelConfig{}, py::arg("seed") = 0)
      .def_property_readonly("config", &Model::config)
      .def(
          "forward",
          [](Model& self, const MatrixF& feats, const MatrixF& sap, bool train) {
            py::gil_scoped_release release;
            MatrixF out = self.forward(feats, sap, train);
            if (!train) self.clear_cache();
            return out;
          },
          py::arg("features"), py::arg("sap"), py::arg("train") = false)
      .def("count_parameters", &Model::count_parameters)
      .def("parameters", [](Model& self) {
        py::dict out;
        for (const auto& p : self.params()) out[py::str(p.name)] = *p.value;
        return out;
      });
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def(
      "average_checkpoints",
      [](std::vector<Model> models) { return average_checkpoints(models); },
      py::arg("models"), "Parameter mean of in-memory models");
  m.def(
      "average_checkpoint_files",
      [](const std::vector<std::string>& paths) {
        std::vector<Model> models;
        models.reserve(paths.size());
        for (const auto& p : paths) models.push_back(load_checkpoint(p));
        return average_checkpoints(models);
      },
      py::arg("paths"), "Parameter mean of checkpoints saved on disk");

  // ---- training ----
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("adam_eps", &TrainConfig::adam_eps)
      .def_readwrite("chunk_frames", &TrainConfig::chunk_frames)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("max_steps", &TrainConfig::max_steps)
      .def_readwrite("grad_clip", &TrainConfig::grad_clip);

  py::class_<TrainingExample>(m, "TrainingExample")
      .def(py::init([](FeatureSequence features, SapSequence sap,
                       LabelMatrix labels) {
             return TrainingExample{std::move(features), std::move(sap),
                                    std::move(labels)};
           }),
           py::arg("features"), py::arg("sap"), py::arg("labels"))
      .def_readwrite("features", &TrainingExample::features)
      .def_readwrite("sap", &TrainingExample::sap)
      .def_readwrite("labels", &TrainingExample::labels);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("epoch_loss", &TrainResult::epoch_loss)
      .def_readonly("step_loss", &TrainResult::step_loss)
      .def_readonly("steps", &TrainResult::steps)
      .def_property_readonly("snapshots",
                             [](TrainResult& r) { return r.snapshots; });

  m.def(
      "pit_bce",
      [](const MatrixF& logits, const BinaryMatrix& labels) {
        const LossReport r = pit_bce(logits, labels);
        return py::make_tuple(r.loss, r.best_perm);
      },
      py::arg("logits"), py::arg("labels"),
      "Permutation-invariant BCE; returns (loss, best_permutation)");
  m.def("pit_bce_grad", &pit_bce_grad<float>, py::arg("logits"),
        py::arg("labels"), py::arg("perm"));
  m.def(
      "train",
      [](const std::vector<TrainingExample>& corpus, const TrainConfig& cfg) {
        py::gil_scoped_release release;
        return train(corpus, cfg);
      },
      py::arg("corpus"), py::arg("config") = TrainConfig{});
  m.def(
      "fine_tune",
      [](const Model& init, const std::vector<TrainingExample>& corpus,
         const TrainConfig& cfg) {
        py::gil_scoped_release release;
        return fine_tune(init, corpus, cfg);
      },
      py::arg("init"), py::arg("corpus"), py::arg("config") = TrainConfig{});

  py::class_<ManifestEntry>(m, "ManifestEntry")
      .def(py::init([](std::string id, std::string feat_path,
                       std::string sap_path, std::string rttm_path) {
             return ManifestEntry{std::move(id), std::move(feat_path),
                                  std::move(sap_path), std::move(rttm_path)};
           }),
           py::arg("id"), py::arg("feat_path"), py::arg("sap_path"),
           py::arg("rttm_path"))
      .def_readwrite("id", &ManifestEntry::id)
      .def_readwrite("feat_path", &ManifestEntry::feat_path)
      .def_readwrite("sap_path", &ManifestEntry::sap_path)
      .def_readwrite("rttm_path", &ManifestEntry::rttm_path);
  m.def("read_manifest", &read_manifest, py::arg("path"));
  m.def("write_manifest", &write_manifest, py::arg("path"), py::arg("entries"));
  m.def("load_example", &load_example, py::arg("entry"));

  // ---- scoring ----
  py::class_<ScoringConfig>(m, "ScoringConfig")
      .def(py::init<>())
      .def_readwrite("collar", &ScoringConfig::collar)
      .def_readwrite("median_frames", &ScoringConfig::median_frames)
      .def_readwrite("threshold_logit", &ScoringConfig::threshold_logit)
      .def_readwrite("scoring_resolution", &ScoringConfig::scoring_resolution);

  py::class_<DerBreakdown>(m, "DerBreakdown")
      .def_readonly("der", &DerBreakdown::der)
      .def_readonly("miss", &DerBreakdown::miss)
      .def_readonly("fa", &DerBreakdown::fa)
      .def_readonly("conf", &DerBreakdown::conf)
      .def_readonly("scored_speech", &DerBreakdown::scored_speech)
      .def_readonly("scored_time", &DerBreakdown::scored_time)
      .def("__repr__", [](const DerBreakdown& b) {
        std::ostringstream os;
        os << "DerBreakdown(der=" << b.der << ", miss=" << b.miss
           << ", fa=" << b.fa << ", conf=" << b.conf << ")";
        return os.str();
      });

  m.def("median_filter", &median_filter, py::arg("labels"), py::arg("width"));
  m.def("optimal_speaker_map", &optimal_speaker_map, py::arg("ref"),
        py::arg("hyp"));
  m.def("der", &der, py::arg("ref"), py::arg("hyp"),
        py::arg("config") = ScoringConfig{});
  m.def("sap_to_segments", &sap_to_segments, py::arg("sap"),
        py::arg("config") = ScoringConfig{}, py::arg("recording_id") = "");
  m.def(
      "infer_and_score",
      [](Model& model, const FeatureSequence& features, const SapSequence& sap,
         const std::vector<Segment>& ref, const ScoringConfig& cfg,
         const std::string& recording_id) {
        auto [segments, breakdown] =
            infer_and_score(model, features, sap, ref, cfg, recording_id);
        return py::make_tuple(segments, breakdown);
      },
      py::arg("model"), py::arg("features"), py::arg("sap"), py::arg("ref"),
      py::arg("config") = ScoringConfig{}, py::arg("recording_id") = "");
  m.def("aggregate_der", &aggregate_der, py::arg("parts"));

  // ---- pruning ----
  py::class_<ScoredRecording>(m, "ScoredRecording")
      .def(py::init([](std::string id, SapSequence sap, LabelMatrix labels) {
             return ScoredRecording{std::move(id), std::move(sap),
                                    std::move(labels)};
           }),
           py::arg("id"), py::arg("sap"), py::arg("labels"))
      .def_readwrite("id", &ScoredRecording::id)
      .def_readwrite("sap", &ScoredRecording::sap)
      .def_readwrite("labels", &ScoredRecording::labels);
  py::class_<PruneRow>(m, "PruneRow")
      .def_readonly("id", &PruneRow::id)
      .def_readonly("der", &PruneRow::der)
      .def_readonly("miss", &PruneRow::miss)
      .def_readonly("fa", &PruneRow::fa)
      .def_readonly("conf", &PruneRow::conf);
  py::class_<PruneTable>(m, "PruneTable")
      .def_readonly("rows", &PruneTable::rows);
  m.def("score_corpus", &score_corpus, py::arg("corpus"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("select_hard", &select_hard, py::arg("table"), py::arg("lower"),
        py::arg("upper"));
  m.def("write_prune_table", &write_prune_table, py::arg("path"),
        py::arg("table"));
  m.def("read_prune_table", &read_prune_table, py::arg("path"));

  // ---- calibration ----
  py::class_<CalibrationCurve>(m, "CalibrationCurve")
      .def_readonly("points", &CalibrationCurve::points)
      .def_readonly("best_bias", &CalibrationCurve::best_bias)
      .def_readonly("best_der", &CalibrationCurve::best_der);
  py::class_<SapHistogram>(m, "SapHistogram")
      .def_readonly("bin_edges", &SapHistogram::bin_edges)
      .def_readonly("speech_counts", &SapHistogram::speech_counts)
      .def_readonly("silence_counts", &SapHistogram::silence_counts);
  m.def("apply_bias", &apply_bias, py::arg("sap"), py::arg("bias"));
  m.def("make_grid", &make_grid, py::arg("lo"), py::arg("hi"), py::arg("step"));
  m.def("sweep_bias", &sweep_bias, py::arg("pairs"), py::arg("grid"),
        py::arg("config") = ScoringConfig{}, py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("sap_histogram", &sap_histogram, py::arg("pairs"), py::arg("bins"));
  m.def("write_calibration_curve", &write_calibration_curve, py::arg("path"),
        py::arg("curve"));
  m.def("write_sap_histogram", &write_sap_histogram, py::arg("path"),
        py::arg("histogram"));
}
