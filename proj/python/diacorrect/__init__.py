# Copyright 2026 The DiaCorrect-CPP Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Error correction for 2-speaker diarization outputs.

Thin Python surface over the C++ core: simulation, feature extraction,
the correction model, training, scoring, pruning and calibration.
"""

from diacorrect._core import (  # noqa: F401
    FRAME_DURATION,
    SAMPLE_RATE,
    AudioClip,
    CalibrationCurve,
    CorruptionConfig,
    DerBreakdown,
    FeatureSequence,
    FormatError,
    LabelMatrix,
    ManifestEntry,
    Model,
    ModelConfig,
    ParseError,
    PruneRow,
    PruneTable,
    SapHistogram,
    SapSequence,
    ScoredRecording,
    ScoringConfig,
    Segment,
    SimulatedConversation,
    TrainConfig,
    TrainingExample,
    TrainResult,
    aggregate_der,
    apply_bias,
    average_checkpoint_files,
    average_checkpoints,
    corrupt_oracle,
    der,
    extract_features,
    fine_tune,
    infer_and_score,
    labels_to_segments,
    load_checkpoint,
    load_example,
    make_grid,
    median_filter,
    optimal_speaker_map,
    parse_rttm,
    pit_bce,
    pit_bce_grad,
    read_feature_cache,
    read_manifest,
    read_prune_table,
    read_rttm_file,
    read_sap,
    read_wav,
    sap_histogram,
    sap_to_segments,
    save_checkpoint,
    score_corpus,
    segments_to_labels,
    select_hard,
    simulate_conversation,
    sweep_bias,
    train,
    write_calibration_curve,
    write_feature_cache,
    write_manifest,
    write_prune_table,
    write_rttm,
    write_rttm_file,
    write_sap,
    write_sap_histogram,
    write_wav,
)

__version__ = "0.1.0"
