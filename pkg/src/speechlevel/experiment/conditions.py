"""The thirteen experimental conditions and their runner.

SVM rows: {plain, VAD-trimmed, attention-weighted} x {MFCC, modulation,
prosody/LP}. Recurrent rows: last-frame pooling with and without VAD, mean
pooling, attention pooling. Recurrent rows and the attention-weighted SVM
rows repeat n_runs times with seed base+run; plain SVM rows are
deterministic and run once.

Attention weighting of the SVM features is an interpretation (the weights
live on 10 ms frames, the modulation windows do not); reports carry a note
saying so.
"""

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..audio import FrameGrid, Waveform, load_wav
from ..errors import DataError
from ..features import (falk_features, falk_intermediates, log_mel,
                        mfcc_delta, modulation_windows, power_spectrogram)
from ..features.modulation import HOP_S, WIN_S
from ..neuralnet import (NetConfig, TrainConfig, SequenceModel,
                         attention_weights, evaluate_accuracy, forward, train)
from ..vad import VadConfig, trim_waveform, vad_decide
from .data import (LABEL_NAMES, SplitPlan, accuracy, confusion_matrix,
                   make_splits, pad_or_crop, read_manifest)


@dataclass(frozen=True)
class Condition:
    name: str
    family: str                         # "svm" | "lstm"
    feature: str | None = None          # svm feature kind
    vad: bool = False
    attnw: bool = False
    pooling: str | None = None          # lstm pooling kind


_ALL_CONDITIONS = [
    Condition("svm-vad-mfcc", "svm", "mfcc", vad=True),
    Condition("svm-vad-modspec", "svm", "modspec", vad=True),
    Condition("svm-vad-falk", "svm", "falk", vad=True),
    Condition("svm-mfcc", "svm", "mfcc"),
    Condition("svm-modspec", "svm", "modspec"),
    Condition("svm-falk", "svm", "falk"),
    Condition("svm-attnw-mfcc", "svm", "mfcc", attnw=True),
    Condition("svm-attnw-modspec", "svm", "modspec", attnw=True),
    Condition("svm-attnw-falk", "svm", "falk", attnw=True),
    Condition("lstm-basic-vad", "lstm", vad=True, pooling="last"),
    Condition("lstm-basic", "lstm", pooling="last"),
    Condition("lstm-mean", "lstm", pooling="mean"),
    Condition("lstm-attn", "lstm", pooling="attention"),
]
CONDITIONS = {c.name: c for c in _ALL_CONDITIONS}
CONDITION_NAMES = tuple(CONDITIONS)


@dataclass
class RunReport:
    condition: str
    seed: int
    n_runs: int
    accuracies: list
    confusions: list                    # one (3,3) int list-of-lists per run
    per_run: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    split_sizes: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))    # population std over runs

    def to_json_dict(self) -> dict:
        total = np.sum([np.asarray(c) for c in self.confusions], axis=0)
        return _round_floats({
            "condition": self.condition,
            "seed": self.seed,
            "n_runs": self.n_runs,
            "label_order": list(LABEL_NAMES),
            "accuracies": list(self.accuracies),
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "confusion_total": total.tolist(),
            "per_run": self.per_run,
            "config": self.config,
            "split_sizes": self.split_sizes,
            "notes": self.notes,
        })

    def write_json(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json_dict(), indent=2,
                                   sort_keys=True) + "\n")


def _round_floats(obj):
    """9 significant digits on every float, recursively."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def weighted_feature_aggregate(frame_features: np.ndarray,
                               weights: np.ndarray) -> np.ndarray:
    """sum_t w_t f_t with defensively renormalized weights."""
    f = np.asarray(frame_features, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if f.ndim != 2 or f.shape[0] != w.shape[0]:
        raise DataError(f"weight length {w.shape[0]} does not match "
                        f"{f.shape[0]} feature frames")
    s = w.sum()
    if s <= 0.0:
        raise DataError("attention weights sum to zero")
    return (w / s) @ f


def _weighted_std(values, weights):
    w = weights / weights.sum()
    mu = float(w @ values)
    return float(np.sqrt(w @ (values - mu) ** 2)), mu


# ---------------------------------------------------------------------------
# per-utterance feature computation

def _maybe_trim(w: Waveform, use_vad: bool, vad_cfg: VadConfig) -> Waveform:
    if not use_vad:
        return w
    grid = FrameGrid.from_ms(w.sample_rate)
    decision = vad_decide(power_spectrogram(w, grid), vad_cfg)
    return trim_waveform(w, decision, grid)


def _svm_vector(w: Waveform, kind: str) -> np.ndarray:
    if kind == "mfcc":
        return mfcc_delta(w).mean(axis=0)
    if kind == "modspec":
        energies, _ = modulation_windows(w)
        return energies.mean(axis=0).reshape(-1)
    if kind == "falk":
        return falk_features(w).values
    raise ValueError(f"unknown feature kind {kind!r}")


def _svm_vector_weighted(w: Waveform, kind: str, alpha: np.ndarray) -> np.ndarray:
    """Attention-weighted variant; alpha sits on the 10 ms log-mel grid."""
    if kind == "mfcc":
        frames = mfcc_delta(w)
        n = min(frames.shape[0], alpha.shape[0])
        return weighted_feature_aggregate(frames[:n], alpha[:n])
    if kind == "modspec":
        energies, starts = modulation_windows(w)
        centers = 0.01 * np.arange(alpha.shape[0]) + 0.01
        weights = np.zeros(len(starts))
        for m, t0 in enumerate(starts):
            inside = (centers >= t0) & (centers < t0 + WIN_S)
            weights[m] = alpha[inside].sum()
        if weights.sum() <= 0.0:
            weights = np.ones(len(starts))
        weights = weights / weights.sum()
        return np.tensordot(weights, energies, axes=1).reshape(-1)
    if kind == "falk":
        parts = falk_intermediates(w)
        dc0 = parts["dc0"]
        n = min(dc0.shape[0], alpha.shape[0])
        dc0_std, _ = _weighted_std(dc0[:n], alpha[:n])
        voiced = parts["voiced"]
        np_frames = min(voiced.shape[0], alpha.shape[0])
        wv = alpha[:np_frames] / max(alpha[:np_frames].sum(), 1e-300)
        pct = float(wv @ voiced[:np_frames])
        f0 = parts["f0"][:np_frames]
        vmask = voiced[:np_frames]
        f0v = f0[vmask]
        wf = wv[vmask]
        if f0v.size >= 2 and wf.sum() > 0:
            f0_std, _ = _weighted_std(f0v, wf)
            f0_range = float(np.max(f0v) - np.min(f0v))
        else:
            f0_std = f0_range = 0.0
        return np.array([dc0_std, parts["kurtosis"], parts["lhmr"], pct,
                         f0_std, f0_range])
    raise ValueError(f"unknown feature kind {kind!r}")


# ---------------------------------------------------------------------------
# the runner

def _load_all(records):
    return {r.path: load_wav(r.path) for r in records}


def _sequence_tensors(records, seqs, input_len):
    x = np.zeros((len(records), input_len, seqs[records[0].path][0].shape[1]))
    valid = np.zeros(len(records), dtype=np.int64)
    labels = np.zeros(len(records), dtype=np.int64)
    for i, r in enumerate(records):
        mat, vl = seqs[r.path]
        x[i] = mat
        valid[i] = vl
        labels[i] = r.label
    return x, valid, labels


def _alphas_for(model: SequenceModel, records, seqs, batch: int = 64):
    out = {}
    for lo in range(0, len(records), batch):
        chunk = records[lo:lo + batch]
        x = np.stack([seqs[r.path][0] for r in chunk])
        valid = np.array([seqs[r.path][1] for r in chunk])
        for r, a in zip(chunk, attention_weights(model, x, valid)):
            out[r.path] = a
    return out


def run_condition(condition: str, manifest, seed: int = 0,
                  n_runs: int | None = None,
                  net_cfg: NetConfig | None = None,
                  train_cfg: TrainConfig | None = None,
                  vad_cfg: VadConfig | None = None,
                  out_dir=None) -> RunReport:
    """Execute one condition end to end and report test accuracy.

    manifest: path to a manifest CSV or a list of ManifestRecord. Waveforms
    and frame features are computed once and shared across the repeats; only
    things that depend on the run seed (network init, batch order, dropout,
    and for attention-weighted rows the attention model itself) vary.
    """
    cond = CONDITIONS.get(condition)
    if cond is None:
        raise DataError(f"unknown condition {condition!r}; "
                        f"choose from {', '.join(CONDITION_NAMES)}")
    records = manifest if isinstance(manifest, list) else read_manifest(manifest)
    net_cfg = net_cfg or NetConfig()
    train_cfg = train_cfg or TrainConfig()
    vad_cfg = vad_cfg or VadConfig()
    if n_runs is None:
        n_runs = 20 if (cond.family == "lstm" or cond.attnw) else 1
    if cond.family == "svm" and not cond.attnw:
        n_runs = 1

    plan = make_splits(records, seed=seed)
    parts = {p: plan.select(records, p) for p in ("train", "valid", "test")}
    for p, recs in parts.items():
        if not recs:
            raise DataError(f"empty {p} partition; corpus too small")
    waves = _load_all(records)

    report = RunReport(condition=cond.name, seed=seed, n_runs=n_runs,
                       accuracies=[], confusions=[],
                       split_sizes={p: len(v) for p, v in parts.items()})
    y_test = np.array([r.label for r in parts["test"]])

    if cond.family == "lstm":
        cfg = replace(net_cfg, pooling=cond.pooling)
        seqs = {}
        for r in records:
            w = _maybe_trim(waves[r.path], cond.vad, vad_cfg)
            seqs[r.path] = pad_or_crop(log_mel(w).values, cfg.input_len)
        data = {p: _sequence_tensors(parts[p], seqs, cfg.input_len)
                for p in parts}
        report.config = {"net": asdict(cfg), "train": asdict(train_cfg)}
        for run in range(n_runs):
            res = train(cfg, train_cfg, data["train"], data["valid"],
                        seed=seed + run)
            probs, _ = forward(res.model, data["test"][0], data["test"][1])
            pred = np.argmax(probs, axis=1)
            acc = accuracy(pred, y_test)
            report.accuracies.append(acc)
            report.confusions.append(confusion_matrix(pred, y_test).tolist())
            report.per_run.append({"accuracy": acc,
                                   "best_epoch": res.best_epoch,
                                   "best_valid_acc": res.best_valid_acc})
    else:
        from ..svm import svm_train_ova
        if cond.attnw:
            # attention weights come from a freshly trained attention model
            acfg = replace(net_cfg, pooling="attention")
            seqs = {r.path: pad_or_crop(log_mel(waves[r.path]).values,
                                        acfg.input_len) for r in records}
            data = {p: _sequence_tensors(parts[p], seqs, acfg.input_len)
                    for p in parts}
            report.notes["attn_weighting"] = "interpretation"
            report.config = {"net": asdict(acfg), "train": asdict(train_cfg)}
            for run in range(n_runs):
                res = train(acfg, train_cfg, data["train"], data["valid"],
                            seed=seed + run)
                alphas = _alphas_for(res.model, records, seqs)
                feats = {r.path: _svm_vector_weighted(waves[r.path],
                                                      cond.feature,
                                                      alphas[r.path])
                         for r in records}
                x_tr = np.stack([feats[r.path] for r in parts["train"]])
                y_tr = np.array([r.label for r in parts["train"]])
                model = svm_train_ova(x_tr, y_tr)
                pred = model.predict(np.stack([feats[r.path]
                                               for r in parts["test"]]))
                acc = accuracy(pred, y_test)
                report.accuracies.append(acc)
                report.confusions.append(confusion_matrix(pred, y_test).tolist())
                report.per_run.append({"accuracy": acc, "c": model.c,
                                       "gamma": model.gamma,
                                       "cv_accuracy": model.cv_accuracy,
                                       "attn_valid_acc": res.best_valid_acc})
        else:
            feats = {}
            for r in records:
                w = _maybe_trim(waves[r.path], cond.vad, vad_cfg)
                feats[r.path] = _svm_vector(w, cond.feature)
            x_tr = np.stack([feats[r.path] for r in parts["train"]])
            y_tr = np.array([r.label for r in parts["train"]])
            model = svm_train_ova(x_tr, y_tr)
            pred = model.predict(np.stack([feats[r.path]
                                           for r in parts["test"]]))
            acc = accuracy(pred, y_test)
            report.accuracies.append(acc)
            report.confusions.append(confusion_matrix(pred, y_test).tolist())
            report.per_run.append({"accuracy": acc, "c": model.c,
                                   "gamma": model.gamma,
                                   "cv_accuracy": model.cv_accuracy})
            report.config = {"feature": cond.feature}

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.write_json(out_dir / f"report-{cond.name}.json")
        (out_dir / "splits.json").write_text(plan.to_json() + "\n")
    return report


def export_attention(model: SequenceModel, w: Waveform, csv_path,
                     wave_csv_path=None) -> int:
    """Write frame_time_s,alpha,mean_weight rows; optionally a waveform
    `time_s,amplitude` overlay (5 ms peak envelope). Returns rows written."""
    lm = log_mel(w)
    mat, valid = pad_or_crop(lm.values, model.config.input_len)
    alphas = attention_weights(model, mat[None], [valid])[0]
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    hop_s = 1.0 / lm.frame_rate
    with open(csv_path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["frame_time_s", "alpha", "mean_weight"])
        mean_w = 1.0 / valid
        for t in range(valid):
            out.writerow([f"{(t + 1) * hop_s:.9g}", f"{alphas[t]:.9g}",
                          f"{mean_w:.9g}"])
    if wave_csv_path is not None:
        wave_csv_path = Path(wave_csv_path)
        wave_csv_path.parent.mkdir(parents=True, exist_ok=True)
        bin_len = max(1, w.sample_rate // 200)
        x = np.abs(w.samples)
        n_bins = int(np.ceil(len(x) / bin_len))
        with open(wave_csv_path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["time_s", "amplitude"])
            for b in range(n_bins):
                seg = x[b * bin_len:(b + 1) * bin_len]
                out.writerow([f"{b * bin_len / w.sample_rate:.9g}",
                              f"{float(seg.max()):.9g}"])
    return int(valid)
