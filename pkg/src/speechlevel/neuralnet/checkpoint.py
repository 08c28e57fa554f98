"""Model checkpoints: config + provenance in the JSON header, weights as
float32 tensors."""

from dataclasses import asdict

from ..errors import DataError
from ..tensorfile import CHECKPOINT_MAGIC, read_tensors, write_tensors
from .config import NetConfig
from .model import SequenceModel


def save_checkpoint(path, model: SequenceModel, seed: int | None = None,
                    epoch: int | None = None, metrics: dict | None = None) -> None:
    header = {
        "kind": "sequence-classifier",
        "config": asdict(model.config),
        "seed": seed,
        "epoch": epoch,
        "metrics": metrics or {},
    }
    write_tensors(path, CHECKPOINT_MAGIC, header, model.params)


def load_checkpoint(path):
    """Returns (model, header). Weights come back as float64."""
    header, tensors = read_tensors(path, CHECKPOINT_MAGIC)
    if header.get("kind") != "sequence-classifier":
        raise DataError(f"{path}: not a sequence-classifier checkpoint")
    cfg = NetConfig(**header["config"])
    expected = {"dense1_w", "dense1_b", "lstm_wx", "lstm_uh", "lstm_b",
                "dense2_w", "dense2_b", "out_w", "out_b"}
    if cfg.pooling == "attention":
        expected.add("attn_u")
    missing = expected - set(tensors)
    if missing:
        raise DataError(f"{path}: checkpoint missing tensors {sorted(missing)}")
    return SequenceModel(cfg, tensors), header
