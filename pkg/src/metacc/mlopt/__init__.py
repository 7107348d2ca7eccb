"""Feature construction, labeling, and the per-loop optimizer classifier."""

from .dataset import format_dataset, read_dataset, synthetic_dataset
from .features import (PARALLEL_TARGETS, SERIAL_TARGETS, TARGETS, FeatureVector, NoAllowedTarget,
                       SchemaMismatch, TrainingInstance, ZeroInstructions, argmin_backend,
                       label_and_relabel, normalize_pki, schema_hash)
from .forest import ForestModel, ForestParams, Node, predict, train, vote
from .modelfile import CorruptModel, VersionMismatch, dumps, load_model, loads, save_model

__all__ = [
    "CorruptModel", "FeatureVector", "ForestModel", "ForestParams", "NoAllowedTarget", "Node",
    "PARALLEL_TARGETS", "SERIAL_TARGETS", "SchemaMismatch", "TARGETS", "TrainingInstance",
    "VersionMismatch", "ZeroInstructions", "argmin_backend", "dumps", "format_dataset",
    "label_and_relabel", "load_model", "loads", "normalize_pki", "predict", "read_dataset",
    "save_model", "schema_hash", "synthetic_dataset", "train", "vote",
]
