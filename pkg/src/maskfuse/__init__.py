"""Post-inference toolkit for single-class instance masks: geometric
test-time augmentation fusion, detection-threshold sweeps, and the leaf
segmentation/counting metrics (Symmetric Best Dice, difference in count),
with a built-in synthetic rosette generator for end-to-end verification.
"""

from .maskcore import (
    PredictionSet,
    ScoredInstance,
    area,
    canonicalize_label_map,
    connected_components,
    dice,
    instances_to_label_map,
    intersection_area,
    iou,
    label_map_to_instances,
)
from .metrics import EvalReport, EvalResult, best_dice, dic, evaluate_corpus, evaluate_pair, sbd
from .synthgen import NoiseConfig, RosetteConfig, ScoreModel, corrupt, derive_seed, generate_corpus, generate_rosette, simulate_versions
from .threshold import SweepConfig, SweepTable, filter_by_score, sweep
from .transforms import Transform, apply, apply_set, invert, invert_set
from .tta_fusion import AlignedInstance, FusionConfig, align, fuse, select_reference, tta_pipeline

__version__ = "0.1.0"

__all__ = [
    "AlignedInstance",
    "EvalReport",
    "EvalResult",
    "FusionConfig",
    "NoiseConfig",
    "PredictionSet",
    "RosetteConfig",
    "ScoreModel",
    "ScoredInstance",
    "SweepConfig",
    "SweepTable",
    "Transform",
    "align",
    "apply",
    "apply_set",
    "area",
    "best_dice",
    "canonicalize_label_map",
    "connected_components",
    "corrupt",
    "derive_seed",
    "dic",
    "dice",
    "evaluate_corpus",
    "evaluate_pair",
    "filter_by_score",
    "fuse",
    "generate_corpus",
    "generate_rosette",
    "instances_to_label_map",
    "intersection_area",
    "invert",
    "invert_set",
    "iou",
    "label_map_to_instances",
    "sbd",
    "select_reference",
    "simulate_versions",
    "sweep",
    "tta_pipeline",
]
