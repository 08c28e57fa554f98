"""Autocorrelation pitch tracking.

40 ms frames every 10 ms, candidate lags spanning 60-400 Hz, voicing decided
by the normalized autocorrelation peak (threshold 0.45), and the winning lag
refined by parabolic interpolation before conversion to Hz.
"""

from dataclasses import dataclass

import numpy as np

from ..audio import Waveform

VOICING_THRESHOLD = 0.45
F_MIN = 60.0
F_MAX = 400.0


@dataclass(frozen=True)
class PitchTrack:
    """f0_hz is 0.0 wherever voiced is False."""

    f0_hz: np.ndarray
    voiced: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.f0_hz.shape[0]

    def voiced_f0(self) -> np.ndarray:
        return self.f0_hz[self.voiced]


def pitch_track(w: Waveform, frame_ms: float = 40.0, hop_ms: float = 10.0,
                threshold: float = VOICING_THRESHOLD) -> PitchTrack:
    sr = w.sample_rate
    flen = int(round(sr * frame_ms / 1000.0))
    hop = int(round(sr * hop_ms / 1000.0))
    x = np.asarray(w.samples, dtype=np.float64)
    if len(x) < flen:
        return PitchTrack(np.zeros(0), np.zeros(0, dtype=bool))
    t = 1 + (len(x) - flen) // hop
    idx = np.arange(flen)[None, :] + (np.arange(t) * hop)[:, None]
    frames = x[idx]
    frames = frames - frames.mean(axis=1, keepdims=True)

    lag_min = int(sr / F_MAX)
    lag_max = int(sr / F_MIN)
    nfft = 1
    while nfft < 2 * flen:
        nfft *= 2
    spec = np.abs(np.fft.rfft(frames, n=nfft, axis=1)) ** 2
    ac = np.fft.irfft(spec, n=nfft, axis=1)

    f0 = np.zeros(t)
    voiced = np.zeros(t, dtype=bool)
    for i in range(t):
        r0 = ac[i, 0]
        if r0 < 1e-12:
            continue
        rn = ac[i, :lag_max + 2] / r0
        seg = rn[lag_min:lag_max + 1]
        p = int(np.argmax(seg)) + lag_min
        if rn[p] <= threshold:
            continue
        # parabolic refinement around the peak
        lag = float(p)
        if 0 < p < lag_max + 1:
            y0, y1, y2 = rn[p - 1], rn[p], rn[p + 1]
            denom = y0 - 2.0 * y1 + y2
            if abs(denom) > 1e-12:
                delta = 0.5 * (y0 - y2) / denom
                if -1.0 < delta < 1.0:
                    lag = p + delta
        voiced[i] = True
        f0[i] = sr / lag
    return PitchTrack(f0, voiced)
