"""Mel-scale spectrogram and cepstral features.

Frames are 20 ms Hamming every 10 ms, zero-padded to a 512-point FFT. The
recurrent models consume 32 log-mel bands with per-utterance normalization;
the SVM path uses 13 orthonormal-DCT cepstra plus delta regressions (26 per
frame) from a 40-band bank.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from ..audio import FrameGrid, Waveform, frame_signal

N_FFT = 512
LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, n_fft: int = N_FFT, sample_rate: int = 16_000,
                   f_lo: float = 0.0, f_hi: float | None = None) -> np.ndarray:
    """Triangular filters on the mel scale, shape (n_filters, n_fft//2 + 1).

    Centers are equally spaced in mel; each triangle rises from the previous
    center to its own and falls to the next, unit peak, evaluated at the FFT
    bin frequencies.
    """
    if f_hi is None:
        f_hi = sample_rate / 2.0
    mels = np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_filters + 2)
    edges = mel_to_hz(mels)                       # n_filters + 2 edge/center freqs
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    fb = np.zeros((n_filters, bin_freqs.size))
    for m in range(n_filters):
        left, center, right = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def power_spectrogram(w: Waveform, grid: FrameGrid | None = None,
                      n_fft: int = N_FFT) -> np.ndarray:
    """|FFT|^2 of each windowed frame, shape (T, n_fft//2 + 1)."""
    if grid is None:
        grid = FrameGrid.from_ms(w.sample_rate)
    frames = frame_signal(w, grid)
    spec = np.fft.rfft(frames, n=n_fft, axis=1)
    return np.abs(spec) ** 2


@dataclass(frozen=True)
class LogMelSpectrogram:
    """values: (T, n_bands) float64; frame_rate in frames per second."""

    values: np.ndarray
    frame_rate: float = 100.0

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]

    def frame_times(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.frame_rate


def _log_mel_matrix(w: Waveform, n_bands: int) -> np.ndarray:
    spec = power_spectrogram(w)
    fb = mel_filterbank(n_bands, sample_rate=w.sample_rate)
    energies = spec @ fb.T
    return np.log(np.maximum(energies, LOG_FLOOR))


def log_mel(w: Waveform, n_bands: int = 32, normalize: bool = True) -> LogMelSpectrogram:
    """Log mel-band energies; normalized per band over the utterance by default.

    Bands with (near-)zero variance pass through the normalization unscaled.
    """
    lm = _log_mel_matrix(w, n_bands)
    if normalize:
        mean = lm.mean(axis=0)
        std = lm.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        lm = (lm - mean) / std
    rate = w.sample_rate / FrameGrid.from_ms(w.sample_rate).hop_length
    return LogMelSpectrogram(lm, frame_rate=rate)


def _delta(c: np.ndarray, reach: int = 2) -> np.ndarray:
    """Regression deltas over +-reach frames with edge replication."""
    padded = np.concatenate([np.repeat(c[:1], reach, axis=0), c,
                             np.repeat(c[-1:], reach, axis=0)], axis=0)
    t = c.shape[0]
    num = np.zeros_like(c)
    for k in range(1, reach + 1):
        num += k * (padded[reach + k:reach + k + t] - padded[reach - k:reach - k + t])
    return num / (2.0 * sum(k * k for k in range(1, reach + 1)))


def mfcc_delta(w: Waveform, n_ceps: int = 13, n_filters: int = 40) -> np.ndarray:
    """Cepstra plus deltas, shape (T, 2*n_ceps).

    Orthonormal DCT-II over the (unnormalized) 40-band log-mel rows, truncated
    to n_ceps, then delta regressions appended.
    """
    lm = _log_mel_matrix(w, n_filters)
    ceps = dct(lm, type=2, norm="ortho", axis=1)[:, :n_ceps]
    return np.concatenate([ceps, _delta(ceps)], axis=1)
