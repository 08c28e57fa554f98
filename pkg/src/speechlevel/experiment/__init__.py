"""Experiment harness: manifests, splits, conditions, reports."""

from .conditions import (CONDITION_NAMES, RunReport, export_attention,
                         run_condition, weighted_feature_aggregate)
from .data import (LABEL_NAMES, ManifestRecord, SplitPlan, accuracy, bin_score,
                   confusion_matrix, make_splits, pad_or_crop, read_manifest)

__all__ = [
    "CONDITION_NAMES",
    "LABEL_NAMES",
    "ManifestRecord",
    "RunReport",
    "SplitPlan",
    "accuracy",
    "bin_score",
    "confusion_matrix",
    "export_attention",
    "make_splits",
    "pad_or_crop",
    "read_manifest",
    "run_condition",
    "weighted_feature_aggregate",
]
