"""The four figure kinds and the render entry point.

Figures are deterministic: fixed size, fixed dpi, the Agg backend, and a
pinned hash salt for SVG output. Inputs are validated before the output
path is touched, and an existing output is only replaced with force=True.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

from .readers import (SchemaError, read_attention_csv, read_feature_container,
                      read_report_json, read_sidecar_csv, read_wave_csv)

FIGURE_KINDS = ("attention", "modspec", "durations", "accuracy")
MODSPEC_SHAPE = (23, 8)         # acoustic bands x modulation bands
FIG_SIZE = (7.0, 4.0)
DPI = 120


class OutputExists(Exception):
    """Refusing to overwrite an existing figure without force."""


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple = field(default_factory=tuple)
    out: str = "figure.png"
    force: bool = False


def _expect_inputs(job, lo, hi=None):
    hi = lo if hi is None else hi
    n = len(job.inputs)
    if not lo <= n <= hi:
        span = str(lo) if lo == hi else f"{lo}..{hi}"
        raise SchemaError(f"figure kind {job.kind!r} takes {span} "
                          f"input file(s), got {n}")


def modspec_matrix(values):
    """Window-averaged modulation energies as (acoustic, modulation) axes."""
    values = np.asarray(values, dtype=np.float64)
    want = MODSPEC_SHAPE[0] * MODSPEC_SHAPE[1]
    if values.ndim != 2 or values.shape[1] != want:
        raise SchemaError(f"modulation container must have {want} columns "
                          f"({MODSPEC_SHAPE[0]}x{MODSPEC_SHAPE[1]}), got "
                          f"shape {values.shape}")
    return values.mean(axis=0).reshape(MODSPEC_SHAPE)


def accuracy_table(reports):
    """(condition names, mean accuracies, standard deviations)."""
    names, means, stds = [], [], []
    for doc in reports:
        names.append(str(doc["condition"]))
        means.append(float(doc["mean_accuracy"]))
        stds.append(float(doc["std_accuracy"]))
    return names, np.array(means), np.array(stds)


def _fig_attention(job):
    _expect_inputs(job, 1, 2)
    att = read_attention_csv(job.inputs[0])
    wave = read_wave_csv(job.inputs[1]) if len(job.inputs) == 2 else None
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    if wave is not None:
        ax_w = ax.twinx()
        ax_w.plot(wave["time_s"], wave["amplitude"], color="0.8",
                  linewidth=0.6, zorder=1)
        ax_w.set_ylabel("amplitude")
        ax_w.set_zorder(1)
        ax.set_zorder(2)
        ax.patch.set_visible(False)
    ax.plot(att["frame_time_s"], att["mean_weight"], color="red",
            linewidth=1.0, label="uniform (mean pooling)")
    ax.plot(att["frame_time_s"], att["alpha"], color="black",
            linewidth=1.2, label="attention")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frame weight")
    ax.legend(loc="upper right", fontsize=8)
    return fig


def _fig_modspec(job):
    _expect_inputs(job, 1)
    mat = modspec_matrix(read_feature_container(job.inputs[0]))
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    im = ax.imshow(mat, aspect="auto", origin="lower", cmap="viridis")
    ax.set_xlabel("modulation frequency band")
    ax.set_ylabel("acoustic frequency band")
    fig.colorbar(im, ax=ax, label="mean energy")
    return fig


def _fig_durations(job):
    _expect_inputs(job, 1)
    durations = read_sidecar_csv(job.inputs[0])
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.hist(durations, bins=np.arange(0.0, 7.25, 0.25), color="steelblue",
            edgecolor="white")
    ax.set_xlabel("duration (s)")
    ax.set_ylabel("utterances")
    return fig


def _fig_accuracy(job):
    _expect_inputs(job, 1, 32)
    names, means, stds = accuracy_table(
        read_report_json(p) for p in job.inputs)
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    pos = np.arange(len(names))
    ax.bar(pos, means, yerr=stds, capsize=3, color="steelblue")
    ax.set_xticks(pos)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean test accuracy")
    ax.set_ylim(0.0, 1.0)
    return fig


_RENDERERS = {
    "attention": _fig_attention,
    "modspec": _fig_modspec,
    "durations": _fig_durations,
    "accuracy": _fig_accuracy,
}


def render(job: PlotJob) -> Path:
    """Validate inputs, draw the figure, write the image; returns the path."""
    if job.kind not in _RENDERERS:
        raise SchemaError(f"unknown figure kind {job.kind!r}; choose from "
                          f"{', '.join(FIGURE_KINDS)}")
    out = Path(job.out)
    fig = _RENDERERS[job.kind](job)
    try:
        if out.exists() and not job.force:
            raise OutputExists(f"{out} exists (pass force to replace)")
        out.parent.mkdir(parents=True, exist_ok=True)
        with matplotlib.rc_context({"svg.hashsalt": "speechlevel-plots"}):
            fig.savefig(out, dpi=DPI)
    finally:
        plt.close(fig)
    return out
