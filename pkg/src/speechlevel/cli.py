"""Command-line entry point.

Nine subcommands cover the pipeline: synth-data, featurize, vad, split,
train, evaluate, run-condition, export-attention, grad-check. Every knob can
come from a flat key=value config file (--config); command-line flags win
over the file. Unknown config keys are rejected. Each run prints a
resolved-config block that reproduces it exactly.

Exit codes: 0 ok, 1 usage, 2 bad data, 3 numeric failure. Errors go to
stderr with an ERROR:<code>: prefix.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .audio import FrameGrid, load_wav, synth_corpus
from .errors import DataError, NumericError, UsageError
from .experiment import (CONDITION_NAMES, export_attention, make_splits,
                         pad_or_crop, read_manifest, run_condition)
from .features import (falk_features, log_mel, mfcc_delta, modulation_windows,
                       power_spectrogram, write_matrix)
from .neuralnet import (NetConfig, TrainConfig, grad_check, init_model,
                        load_checkpoint, save_checkpoint, train)
from .neuralnet.model import forward
from .seeding import stream
from .vad import VadConfig, trim_waveform, vad_decide


def _cast_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {s!r}")


# every key a config file may set: name -> caster
CONFIG_KEYS = {
    # network
    "input_len": int, "n_input": int, "n_dense1": int, "n_lstm": int,
    "n_dense2": int, "n_classes": int, "pooling": str, "dropout": float,
    # optimizer
    "learning_rate": float, "batch_size": int, "max_epochs": int,
    "beta1": float, "beta2": float, "eps": float, "clip_norm": float,
    # vad
    "noise_init_frames": int, "lrt_threshold": float, "hangover_frames": int,
    "a_priori_smooth": float, "noise_floor": float,
    # general
    "seed": int, "jobs": int, "format": str, "feature": str,
    "use_vad": _cast_bool, "partition": str, "condition": str, "runs": int,
    "speakers": int, "utts": int, "sample_rate": int,
    "manifest": str, "out": str, "model": str, "wav": str, "wave_out": str,
}

_NET_KEYS = ("input_len", "n_input", "n_dense1", "n_lstm", "n_dense2",
             "n_classes", "pooling", "dropout")
_TRAIN_KEYS = ("learning_rate", "batch_size", "max_epochs", "beta1", "beta2",
               "eps", "clip_norm")
_VAD_KEYS = ("noise_init_frames", "lrt_threshold", "hangover_frames",
             "a_priori_smooth", "noise_floor")


def read_config_file(path) -> dict:
    """key=value lines; blank lines and # comments ignored; keys validated."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"no such config file: {path}")
    out = {}
    for ln, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{ln}: unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except (ValueError, TypeError):
            raise UsageError(f"{path}:{ln}: bad value for {key}: "
                             f"{value!r}") from None
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):            # argparse default exits with code 2
        raise UsageError(message)


def _resolve(args, keys) -> dict:
    """defaults <- config file <- explicit flags, restricted to keys."""
    file_cfg = read_config_file(args.config) if args.config else {}
    defaults = {**{k: getattr(NetConfig(), k) for k in _NET_KEYS},
                **{k: getattr(TrainConfig(), k) for k in _TRAIN_KEYS},
                **{k: getattr(VadConfig(), k) for k in _VAD_KEYS},
                "seed": 0, "jobs": 1, "format": "json", "feature": "mfcc",
                "use_vad": False, "partition": "test", "runs": None,
                "speakers": 4, "utts": 10, "sample_rate": 16000,
                "wave_out": None}
    cfg = {}
    for key in keys:
        value = defaults.get(key)
        if key in file_cfg:
            value = file_cfg[key]
        flag = getattr(args, key, None)
        if flag is not None:
            value = flag
        cfg[key] = value
    return cfg


def _require(cfg, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _print_config(cfg: dict) -> None:
    print("# resolved-config")
    for key in sorted(cfg):
        if cfg[key] is not None:
            print(f"{key} = {_format_value(cfg[key])}")
    print("# end resolved-config")


def _net_config(cfg) -> NetConfig:
    try:
        return NetConfig(**{k: cfg[k] for k in _NET_KEYS})
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(**{k: cfg[k] for k in _TRAIN_KEYS})


def _vad_config(cfg) -> VadConfig:
    return VadConfig(**{k: cfg[k] for k in _VAD_KEYS})


# ---------------------------------------------------------------------------
# per-file feature work (module level so it pickles for --jobs)

FEATURE_KINDS = ("logmel", "mfcc", "modspec", "falk")


def _featurize_one(task):
    wav_path, out_path, feature, use_vad, vad_fields = task
    w = load_wav(wav_path)
    duration = w.duration_s
    if use_vad:
        grid = FrameGrid.from_ms(w.sample_rate)
        decision = vad_decide(power_spectrogram(w, grid), VadConfig(*vad_fields))
        w = trim_waveform(w, decision, grid)
    if feature == "logmel":
        mat = log_mel(w).values
    elif feature == "mfcc":
        mat = mfcc_delta(w)
    elif feature == "modspec":
        energies, _ = modulation_windows(w)
        mat = energies.reshape(energies.shape[0], -1)
    elif feature == "falk":
        mat = falk_features(w).values[None, :]
    else:
        raise UsageError(f"unknown feature {feature!r}; "
                         f"choose from {', '.join(FEATURE_KINDS)}")
    write_matrix(out_path, mat)
    return mat.mean(axis=0), duration, mat.shape


def _vad_one(task):
    wav_path, out_path, vad_fields = task
    w = load_wav(wav_path)
    decision = vad_decide(power_spectrogram(w, FrameGrid.from_ms(w.sample_rate)),
                          VadConfig(*vad_fields))
    with open(out_path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["frame_index", "decision", "llr"])
        for t, (d, llr) in enumerate(zip(decision.speech, decision.llr)):
            out.writerow([t, int(d), f"{llr:.9g}"])
    return int(decision.speech.sum()), len(decision.speech)


def _map_jobs(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_synth_data(args):
    cfg = _resolve(args, ("out", "speakers", "utts", "seed", "sample_rate"))
    _require(cfg, "out")
    _print_config(cfg)
    rows = synth_corpus(cfg["out"], n_speakers=cfg["speakers"],
                        utt_per_speaker=cfg["utts"], seed=cfg["seed"],
                        sample_rate=cfg["sample_rate"])
    print(f"wrote {len(rows)} utterances under {cfg['out']}")
    return 0


def _cmd_featurize(args):
    cfg = _resolve(args, ("manifest", "out", "feature", "use_vad", "jobs",
                          "seed") + _VAD_KEYS)
    _require(cfg, "manifest", "out")
    if cfg["feature"] not in FEATURE_KINDS:
        raise UsageError(f"unknown feature {cfg['feature']!r}; "
                         f"choose from {', '.join(FEATURE_KINDS)}")
    _print_config(cfg)
    records = read_manifest(cfg["manifest"])
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    vad_fields = tuple(cfg[k] for k in _VAD_KEYS)
    tasks, out_paths = [], []
    for r in records:
        out_path = out_dir / f"{r.path.stem}.{cfg['feature']}.feat"
        out_paths.append(out_path)
        tasks.append((r.path, out_path, cfg["feature"], cfg["use_vad"],
                      vad_fields))
    results = _map_jobs(_featurize_one, tasks, cfg["jobs"])
    sidecar = out_dir / "features.csv"
    dim = len(results[0][0])
    with open(sidecar, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["path", "speaker_id", "score", "label", "duration_s",
                      "n_rows", "n_cols"] + [f"f{i}" for i in range(dim)])
        for r, out_path, (vec, duration, shape) in zip(records, out_paths,
                                                       results):
            out.writerow([out_path.name, r.speaker_id, r.score, r.label,
                          f"{duration:.9g}", shape[0], shape[1]]
                         + [f"{v:.9g}" for v in vec])
    print(f"wrote {len(records)} containers and {sidecar}")
    return 0


def _cmd_vad(args):
    cfg = _resolve(args, ("wav", "manifest", "out", "jobs", "seed") + _VAD_KEYS)
    _require(cfg, "out")
    if (cfg["wav"] is None) == (cfg["manifest"] is None):
        raise UsageError("give exactly one of --wav or --manifest")
    _print_config(cfg)
    vad_fields = tuple(cfg[k] for k in _VAD_KEYS)
    if cfg["wav"] is not None:
        n_speech, n = _vad_one((cfg["wav"], cfg["out"], vad_fields))
        print(f"{cfg['out']}: {n_speech}/{n} frames speech")
    else:
        records = read_manifest(cfg["manifest"])
        out_dir = Path(cfg["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        tasks = [(r.path, out_dir / f"{r.path.stem}.vad.csv", vad_fields)
                 for r in records]
        results = _map_jobs(_vad_one, tasks, cfg["jobs"])
        total = sum(n for _, n in results)
        speech = sum(s for s, _ in results)
        print(f"wrote {len(records)} decision files; "
              f"{speech}/{total} frames speech overall")
    return 0


def _cmd_split(args):
    cfg = _resolve(args, ("manifest", "out", "seed"))
    _require(cfg, "manifest", "out")
    _print_config(cfg)
    records = read_manifest(cfg["manifest"])
    plan = make_splits(records, seed=cfg["seed"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(plan.to_json() + "\n")
    for part in ("train", "valid", "test"):
        n = len(plan.select(records, part))
        print(f"{part}: {n} files")
    return 0


def _load_sequences(records, net_cfg, use_vad, vad_cfg):
    x = np.zeros((len(records), net_cfg.input_len, net_cfg.n_input))
    valid = np.zeros(len(records), dtype=np.int64)
    labels = np.zeros(len(records), dtype=np.int64)
    for i, r in enumerate(records):
        w = load_wav(r.path)
        if use_vad:
            grid = FrameGrid.from_ms(w.sample_rate)
            decision = vad_decide(power_spectrogram(w, grid), vad_cfg)
            w = trim_waveform(w, decision, grid)
        mat, vl = pad_or_crop(log_mel(w).values, net_cfg.input_len)
        x[i], valid[i], labels[i] = mat, vl, r.label
    return x, valid, labels


def _cmd_train(args):
    cfg = _resolve(args, ("manifest", "out", "seed", "use_vad")
                   + _NET_KEYS + _TRAIN_KEYS + _VAD_KEYS)
    _require(cfg, "manifest", "out")
    _print_config(cfg)
    records = read_manifest(cfg["manifest"])
    net_cfg = _net_config(cfg)
    plan = make_splits(records, seed=cfg["seed"])
    data = {p: _load_sequences(plan.select(records, p), net_cfg,
                               cfg["use_vad"], _vad_config(cfg))
            for p in ("train", "valid")}
    result = train(net_cfg, _train_config(cfg), data["train"], data["valid"],
                   seed=cfg["seed"])
    save_checkpoint(cfg["out"], result.model, seed=cfg["seed"],
                    epoch=result.best_epoch,
                    metrics={"valid_acc": result.best_valid_acc})
    print(f"best epoch {result.best_epoch}: "
          f"valid accuracy {result.best_valid_acc:.9g}")
    print(f"saved {cfg['out']}")
    return 0


def _cmd_evaluate(args):
    cfg = _resolve(args, ("model", "manifest", "partition", "seed", "format",
                          "use_vad") + _VAD_KEYS)
    _require(cfg, "model", "manifest")
    if cfg["partition"] not in ("train", "valid", "test", "all"):
        raise UsageError(f"bad partition {cfg['partition']!r}")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"bad format {cfg['format']!r}")
    _print_config(cfg)
    model, header = load_checkpoint(cfg["model"])
    records = read_manifest(cfg["manifest"])
    if cfg["partition"] != "all":
        plan = make_splits(records, seed=cfg["seed"])
        records = plan.select(records, cfg["partition"])
    if not records:
        raise DataError("no files selected")
    x, valid, labels = _load_sequences(records, model.config, cfg["use_vad"],
                                       _vad_config(cfg))
    probs, _ = forward(model, x, valid)
    pred = np.argmax(probs, axis=1)
    acc = float(np.mean(pred == labels))
    conf = np.zeros((model.config.n_classes,) * 2, dtype=int)
    for p, t in zip(pred, labels):
        conf[t, p] += 1
    if cfg["format"] == "json":
        print(json.dumps({"accuracy": float(f"{acc:.9g}"),
                          "n_files": len(records),
                          "partition": cfg["partition"],
                          "confusion": conf.tolist()}, indent=2))
    else:
        out = csv.writer(sys.stdout)
        out.writerow(["metric", "value"])
        out.writerow(["accuracy", f"{acc:.9g}"])
        out.writerow(["n_files", len(records)])
        for t in range(conf.shape[0]):
            out.writerow([f"confusion_row_{t}"] + conf[t].tolist())
    return 0


def _cmd_run_condition(args):
    cfg = _resolve(args, ("condition", "manifest", "out", "seed", "runs",
                          "format") + _NET_KEYS + _TRAIN_KEYS + _VAD_KEYS)
    _require(cfg, "condition", "manifest")
    if cfg["condition"] not in CONDITION_NAMES:
        raise UsageError(f"unknown condition {cfg['condition']!r}; "
                         f"choose from {', '.join(CONDITION_NAMES)}")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"bad format {cfg['format']!r}")
    _print_config(cfg)
    report = run_condition(cfg["condition"], cfg["manifest"], seed=cfg["seed"],
                           n_runs=cfg["runs"], net_cfg=_net_config(cfg),
                           train_cfg=_train_config(cfg),
                           vad_cfg=_vad_config(cfg), out_dir=cfg["out"])
    if cfg["format"] == "json":
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    else:
        out = csv.writer(sys.stdout)
        out.writerow(["condition", "run", "accuracy"])
        for i, acc in enumerate(report.accuracies):
            out.writerow([report.condition, i, f"{acc:.9g}"])
        out.writerow([report.condition, "mean", f"{report.mean_accuracy:.9g}"])
        out.writerow([report.condition, "std", f"{report.std_accuracy:.9g}"])
    return 0


def _cmd_export_attention(args):
    cfg = _resolve(args, ("model", "wav", "out", "wave_out", "seed"))
    _require(cfg, "model", "wav", "out")
    _print_config(cfg)
    model, _ = load_checkpoint(cfg["model"])
    if model.config.pooling != "attention":
        raise DataError(f"{cfg['model']}: pooling is {model.config.pooling!r}, "
                        "need an attention model")
    w = load_wav(cfg["wav"])
    n = export_attention(model, w, cfg["out"], cfg["wave_out"])
    print(f"wrote {n} frame weights to {cfg['out']}")
    return 0


def _cmd_grad_check(args):
    cfg = _resolve(args, ("seed",))
    pooling = getattr(args, "pooling", None)
    if pooling is None and args.config:
        pooling = read_config_file(args.config).get("pooling")
    cfg["pooling"] = pooling or "all"
    if cfg["pooling"] not in ("all", "last", "mean", "attention"):
        raise UsageError(f"bad pooling {cfg['pooling']!r}")
    _print_config(cfg)
    poolings = (("last", "mean", "attention") if cfg["pooling"] == "all"
                else (cfg["pooling"],))
    worst = 0.0
    for pooling in poolings:
        net_cfg = NetConfig(input_len=7, n_input=5, n_dense1=6, n_lstm=4,
                            n_dense2=5, n_classes=3, pooling=pooling,
                            dropout=0.0)
        model = init_model(net_cfg, seed=cfg["seed"])
        rng = stream(cfg["seed"], "grad-check", pooling)
        x = rng.standard_normal((3, 7, 5))
        valid = np.array([7, 5, 3])
        labels = rng.integers(0, 3, size=3)
        err = grad_check(model, x, valid, labels)
        worst = max(worst, err)
        print(f"{pooling}: max relative error {err:.3e}")
    print(f"max relative error {worst:.3e}")
    if not worst < 1e-4:
        raise NumericError(f"gradient check failed: {worst:.3e} >= 1e-4")
    return 0


_SUBCOMMANDS = {
    "synth-data": _cmd_synth_data,
    "featurize": _cmd_featurize,
    "vad": _cmd_vad,
    "split": _cmd_split,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "run-condition": _cmd_run_condition,
    "export-attention": _cmd_export_attention,
    "grad-check": _cmd_grad_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="speechlevel",
                     description="speech intelligibility level pipeline")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, *, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int)
        return p

    p = add("synth-data", help="generate the synthetic corpus")
    p.add_argument("--out")
    p.add_argument("--speakers", type=int, help="speakers per class")
    p.add_argument("--utts", type=int, help="utterances per speaker")
    p.add_argument("--sample-rate", dest="sample_rate", type=int)

    p = add("featurize", help="write feature containers plus a sidecar CSV")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--feature", help="|".join(FEATURE_KINDS))
    p.add_argument("--vad", dest="use_vad", action="store_const", const=True)
    p.add_argument("--jobs", type=int)

    p = add("vad", help="per-frame speech decisions as CSV")
    p.add_argument("--wav")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.add_argument("--lrt-threshold", dest="lrt_threshold", type=float)
    p.add_argument("--hangover-frames", dest="hangover_frames", type=int)

    p = add("split", help="speaker-disjoint partition plan as JSON")
    p.add_argument("--manifest")
    p.add_argument("--out")

    p = add("train", help="train a sequence classifier, save a checkpoint")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--vad", dest="use_vad", action="store_const", const=True)
    p.add_argument("--pooling")
    p.add_argument("--input-len", dest="input_len", type=int)
    p.add_argument("--n-lstm", dest="n_lstm", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)

    p = add("evaluate", help="accuracy of a checkpoint on a partition")
    p.add_argument("--model")
    p.add_argument("--manifest")
    p.add_argument("--partition", help="train|valid|test|all")
    p.add_argument("--vad", dest="use_vad", action="store_const", const=True)
    p.add_argument("--format", help="json|csv")

    p = add("run-condition", help="one experimental condition end to end")
    p.add_argument("--condition", help="|".join(CONDITION_NAMES))
    p.add_argument("--manifest")
    p.add_argument("--out", help="directory for report and splits JSON")
    p.add_argument("--runs", type=int)
    p.add_argument("--format", help="json|csv")
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--input-len", dest="input_len", type=int)
    p.add_argument("--n-lstm", dest="n_lstm", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)

    p = add("export-attention", help="attention weights for one utterance")
    p.add_argument("--model")
    p.add_argument("--wav")
    p.add_argument("--out")
    p.add_argument("--wave-out", dest="wave_out",
                   help="also write a waveform envelope CSV")

    p = add("grad-check", help="finite-difference gradient verification")
    p.add_argument("--pooling", help="last|mean|attention|all")

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no subcommand given (see --help)")
        return _SUBCOMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ERROR:1:{exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"ERROR:2:{exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"ERROR:3:{exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
