"""Manifest records, score binning, speaker-disjoint splits, padding."""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..seeding import stream

LABEL_NAMES = ("L", "M", "H")
PARTITIONS = ("train", "valid", "test")
DEFAULT_FRACTIONS = (0.50, 0.15, 0.35)


def bin_score(score) -> int:
    """0-33 -> 0 (low), 34-66 -> 1 (medium), 67-100 -> 2 (high)."""
    s = int(score)
    if s != score or not 0 <= s <= 100:
        raise DataError(f"score must be an integer in [0, 100], got {score!r}")
    if s <= 33:
        return 0
    if s <= 66:
        return 1
    return 2


@dataclass(frozen=True)
class ManifestRecord:
    path: Path
    speaker_id: str
    score: int

    @property
    def label(self) -> int:
        return bin_score(self.score)


def read_manifest(path) -> list:
    """CSV with columns path,speaker_id,score; paths resolve relative to it."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such manifest: {path}")
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = {"path", "speaker_id", "score"} - set(fields)
        if missing:
            raise DataError(f"{path}: manifest missing columns {sorted(missing)}")
        for ln, row in enumerate(reader, start=2):
            try:
                score = int(row["score"])
            except (TypeError, ValueError):
                raise DataError(f"{path}:{ln}: bad score {row['score']!r}") from None
            bin_score(score)            # range check
            rel = Path(row["path"])
            full = rel if rel.is_absolute() else path.parent / rel
            records.append(ManifestRecord(full, row["speaker_id"], score))
    if not records:
        raise DataError(f"{path}: empty manifest")
    return records


@dataclass(frozen=True)
class SplitPlan:
    assignment: dict                    # speaker_id -> partition name
    seed: int
    fractions: tuple = DEFAULT_FRACTIONS

    def partition_of(self, speaker_id: str) -> str:
        return self.assignment[speaker_id]

    def select(self, records, partition: str) -> list:
        if partition not in PARTITIONS:
            raise ValueError(f"unknown partition {partition!r}")
        return [r for r in records if self.assignment[r.speaker_id] == partition]

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "fractions": list(self.fractions),
                           "assignment": self.assignment}, indent=2,
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        d = json.loads(text)
        return cls(dict(d["assignment"]), int(d["seed"]),
                   tuple(d["fractions"]))


def make_splits(records, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> SplitPlan:
    """Greedy speaker-disjoint partitioning.

    First a coverage pass hands one speaker of every class to each partition
    (shuffled order, so different seeds give different splits); remaining
    speakers go to the partition whose share of their class falls furthest
    below the target fractions, ties broken by the file-count deficit.
    A speaker never straddles partitions.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or \
            abs(sum(fractions) - 1.0) > 1e-6:
        raise DataError(f"fractions must be 3 non-negatives summing to 1, "
                        f"got {fractions}")
    by_speaker = {}
    for r in records:
        by_speaker.setdefault(r.speaker_id, []).append(r)
    if not by_speaker:
        raise DataError("no speakers in manifest")

    def speaker_class(recs):
        votes = np.zeros(3, dtype=int)
        for r in recs:
            votes[r.label] += 1
        return int(np.argmax(votes))    # ties to the lower class

    info = {spk: (speaker_class(recs), len(recs))
            for spk, recs in by_speaker.items()}
    total = sum(n for _, n in info.values())
    rng = stream(seed, "split")

    assigned = {}
    counts = {p: 0 for p in PARTITIONS}
    speakers_in = {p: 0 for p in PARTITIONS}
    class_in = {p: [0, 0, 0] for p in PARTITIONS}
    for cls in range(3):
        spks = sorted(s for s, (c, _) in info.items() if c == cls)
        if not spks:
            continue
        order = [spks[i] for i in rng.permutation(len(spks))]
        # one speaker per partition where possible, always topping up the
        # partition with the fewest speakers so none starves
        for spk in order[:len(PARTITIONS)]:
            part = min(PARTITIONS,
                       key=lambda p: (speakers_in[p], PARTITIONS.index(p)))
            assigned[spk] = part
            counts[part] += info[spk][1]
            speakers_in[part] += 1
            class_in[part][cls] += 1

    remaining = sorted(s for s in info if s not in assigned)
    remaining = [remaining[i] for i in rng.permutation(len(remaining))]
    remaining.sort(key=lambda s: -info[s][1])   # stable: ties keep shuffled order
    targets = dict(zip(PARTITIONS, fractions))
    class_totals = [sum(1 for c, _ in info.values() if c == cls)
                    for cls in range(3)]
    for spk in remaining:
        # balance the class's speakers against the target fractions first
        # (a partition that is short a class distorts both snapshot
        # selection and the test metric), then the file counts
        cls = info[spk][0]
        part = max(PARTITIONS,
                   key=lambda p: (targets[p] * class_totals[cls]
                                  - class_in[p][cls],
                                  targets[p] * total - counts[p]))
        assigned[spk] = part
        counts[part] += info[spk][1]
        speakers_in[part] += 1
        class_in[part][cls] += 1
    empty = [p for p in PARTITIONS if speakers_in[p] == 0]
    if empty:
        raise DataError(f"not enough speakers to fill every partition "
                        f"(empty: {', '.join(empty)})")
    return SplitPlan(assigned, seed, tuple(fractions))


def pad_or_crop(values: np.ndarray, length: int):
    """Fix the frame axis to `length`; returns (matrix, valid_length).

    Short inputs are zero-padded, long ones keep their first `length` frames.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"expected (frames, features), got shape {v.shape}")
    t = v.shape[0]
    if t >= length:
        return v[:length].copy(), length
    out = np.zeros((length, v.shape[1]))
    out[:t] = v
    return out, t


def accuracy(predicted, true) -> float:
    predicted = np.asarray(predicted).reshape(-1)
    true = np.asarray(true).reshape(-1)
    if predicted.shape != true.shape:
        raise ValueError("prediction/label length mismatch")
    if predicted.size == 0:
        raise ValueError("empty prediction set")
    return float(np.mean(predicted == true))


def confusion_matrix(predicted, true, n_classes: int = 3) -> np.ndarray:
    """Rows are true labels, columns predictions."""
    out = np.zeros((n_classes, n_classes), dtype=int)
    for p, t in zip(np.asarray(predicted).reshape(-1),
                    np.asarray(true).reshape(-1)):
        out[int(t), int(p)] += 1
    return out
