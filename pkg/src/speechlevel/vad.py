"""Statistical likelihood-ratio voice activity detection.

Per frame, complex-Gaussian hypotheses for noise vs speech+noise give a
per-bin likelihood ratio driven by the a-posteriori SNR (power over the noise
PSD estimated from the first frames) and a decision-directed a-priori SNR.
The frame statistic is the geometric mean of the per-bin ratios, compared in
the log domain against a threshold, followed by a hangover step that closes
short non-speech gaps so utterances are not chopped mid-word.

The gap-closing form of hangover is idempotent (after one pass every
remaining gap is longer than the hangover), which a plain run-end extension
is not.
"""

from dataclasses import dataclass

import numpy as np

from .audio import FrameGrid, Waveform
from .errors import DataError


@dataclass(frozen=True)
class VadConfig:
    noise_init_frames: int = 10
    lrt_threshold: float = 0.1          # log-domain
    hangover_frames: int = 8
    a_priori_smooth: float = 0.98
    noise_floor: float = 1e-10


@dataclass(frozen=True)
class VadDecision:
    speech: np.ndarray                  # bool (T,)
    llr: np.ndarray                     # float (T,), mean log likelihood ratio

    @property
    def n_frames(self) -> int:
        return self.speech.shape[0]


def close_gaps(raw: np.ndarray, max_gap: int) -> np.ndarray:
    """Mark non-speech runs of length <= max_gap bounded by speech on both sides."""
    out = np.asarray(raw, dtype=bool).copy()
    if max_gap <= 0 or not out.any():
        return out
    t = len(out)
    i = 0
    while i < t:
        if out[i]:
            i += 1
            continue
        j = i
        while j < t and not out[j]:
            j += 1
        if i > 0 and j < t and (j - i) <= max_gap:
            out[i:j] = True
        i = j
    return out


def vad_decide(spectra: np.ndarray, cfg: VadConfig = VadConfig()) -> VadDecision:
    """Frame decisions from a power spectrogram (T, n_bins)."""
    p = np.asarray(spectra, dtype=np.float64)
    if p.ndim != 2:
        raise DataError(f"expected a (frames, bins) power spectrogram, got {p.shape}")
    t = p.shape[0]
    if t <= cfg.noise_init_frames:
        raise DataError(
            f"{t} frames but noise estimation needs more than "
            f"{cfg.noise_init_frames}")
    lam = np.maximum(p[:cfg.noise_init_frames].mean(axis=0), cfg.noise_floor)

    alpha = cfg.a_priori_smooth
    llr = np.zeros(t)
    prev = np.ones_like(lam)            # carried G^2 * gamma term
    for i in range(t):
        gamma = p[i] / lam
        xi = alpha * prev + (1.0 - alpha) * np.maximum(gamma - 1.0, 0.0)
        llr[i] = float(np.mean(gamma * xi / (1.0 + xi) - np.log1p(xi)))
        gain = xi / (1.0 + xi)
        prev = gain * gain * gamma
    raw = llr > cfg.lrt_threshold
    return VadDecision(close_gaps(raw, cfg.hangover_frames), llr)


def apply_vad(features: np.ndarray, decision: VadDecision) -> np.ndarray:
    """Keep rows of a frame-feature matrix where speech was flagged."""
    feats = np.asarray(features)
    if feats.shape[0] != decision.n_frames:
        raise DataError(
            f"feature rows ({feats.shape[0]}) != VAD frames ({decision.n_frames})")
    if not decision.speech.any():
        raise DataError("VAD flagged no speech frames; empty utterance")
    return feats[decision.speech]


def trim_waveform(w: Waveform, decision: VadDecision, grid: FrameGrid) -> Waveform:
    """Concatenate the samples covered by speech-flagged frames.

    Each frame owns its hop span; the final speech frame also keeps the frame
    tail so the last burst is not cut short.
    """
    n = len(w.samples)
    keep = np.zeros(n, dtype=bool)
    speech_idx = np.flatnonzero(decision.speech)
    if speech_idx.size == 0:
        raise DataError("VAD flagged no speech frames; empty utterance")
    for fi in speech_idx:
        start = fi * grid.hop_length
        keep[start:min(start + grid.hop_length, n)] = True
    tail_start = speech_idx[-1] * grid.hop_length
    keep[tail_start:min(tail_start + grid.frame_length, n)] = True
    return Waveform(w.samples[keep], w.sample_rate)
