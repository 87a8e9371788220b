"""EEG emotion recognition with knowledge distillation.

Pipeline: 32-channel EEG -> band differential-entropy 9x9 grid features
-> teacher CNN pretraining -> temperature-scaled distillation into a
lightweight student -> thresholded valence/arousal/dominance bits ->
one of eight emotions -> an avatar identifier. Ships with a small
autodiff engine, computational benchmarking, a CLI, and an NDJSON
streaming inference service.
"""

from .tensor import (
    Adam,
    AdamState,
    ComputeGraph,
    Prng,
    Tensor,
    adam_step,
    backward,
    bce_with_logits,
    conv2d,
    kaiming_init,
    linear,
    relu,
    same_padding,
    sigmoid,
)
from .preprocess import (
    BAND_EDGES_HZ,
    BAND_NAMES,
    GENEVA_ORDER,
    FeatureGrid,
    TrialRecording,
    average_reference,
    band_variance,
    differential_entropy,
    extract_features,
    grid_position,
    threshold_labels,
)
from .container import DatasetManifest, read_container, write_container
from .synth import synth_dataset
from .dataset import WindowDataset, load_windows, write_feature_dataset
from .models import (
    StudentConfig,
    TeacherConfig,
    build_student,
    build_teacher,
    count_flops,
    count_params,
    load_checkpoint,
    save_checkpoint,
)
from .distill import (
    DistillConfig,
    FoldReport,
    distill_loss,
    distill_student,
    hard_loss,
    kfold_split,
    soft_target_loss,
    sweep,
    temperature_sigmoid,
    train_teacher,
)
from .metrics import (
    MetricReport,
    aggregate_folds,
    binarize_predictions,
    format_metric_table,
    multilabel_metrics,
)
from .bench import BenchReport, compare, measure, measure_multiworker
from .emotions import (
    AvatarManifest,
    EmotionRecord,
    EmotionTable,
    bits_to_emotion,
    classify_window,
    emotion_to_avatar,
)
from .server import InferenceServer

__version__ = "0.1.0"
