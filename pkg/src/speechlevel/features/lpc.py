"""Linear-prediction residual statistics.

Frame-wise LPC (order 18) via Levinson-Durbin on the Hamming-windowed
autocorrelation; the prediction residual is taken on the raw frame and pooled
across the utterance, summarized by Pearson kurtosis. Windowing the residual
itself would shape its variance across the frame and bias the kurtosis of
even white Gaussian input well above 3, so only the autocorrelation sees the
window.
"""

import numpy as np
from scipy import signal as sps

from ..audio import FrameGrid, Waveform
from ..errors import NumericError

LPC_ORDER = 18


def levinson(r: np.ndarray, order: int):
    """Solve the Toeplitz normal equations for A(z) = 1 + a_1 z^-1 + ...

    Returns (a, err): a has length order + 1 with a[0] = 1, err is the final
    prediction error power. r must start with r[0] > 0.
    """
    r = np.asarray(r, dtype=np.float64)
    if r[0] <= 0.0:
        raise NumericError("autocorrelation r[0] <= 0; degenerate frame")
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1:0:-1])
        k = -acc / err
        a[1:i + 1] = a[1:i + 1] + k * a[i - 1::-1][:i]
        err *= (1.0 - k * k)
        if err <= 0.0:
            # perfectly predictable frame; residual is identically ~0
            err = 1e-30
            break
    return a, err


def _frame_autocorr(frames_windowed: np.ndarray, order: int) -> np.ndarray:
    n = frames_windowed.shape[1]
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    spec = np.abs(np.fft.rfft(frames_windowed, n=nfft, axis=1)) ** 2
    ac = np.fft.irfft(spec, n=nfft, axis=1)
    return ac[:, :order + 1]


def lp_residual_kurtosis(w: Waveform, order: int = LPC_ORDER) -> float:
    """Pearson kurtosis of pooled frame-wise LP residuals.

    White Gaussian input comes out near 3; peaky excitation (glottal pulses)
    pushes it higher. Degenerate input (constant / silent) raises NumericError.
    """
    grid = FrameGrid.from_ms(w.sample_rate)
    x = np.asarray(w.samples, dtype=np.float64)
    t = grid.n_frames(len(x))
    idx = np.arange(grid.frame_length)[None, :] + \
        (np.arange(t) * grid.hop_length)[:, None]
    raw = x[idx]
    ac = _frame_autocorr(raw * grid.window[None, :], order)

    pooled = []
    for i in range(t):
        if ac[i, 0] <= 1e-20:
            continue                      # silent frame, nothing to predict
        a, _ = levinson(ac[i], order)
        pooled.append(sps.lfilter(a, [1.0], raw[i]))
    if not pooled:
        raise NumericError("no analyzable frames (signal silent?)")
    e = np.concatenate(pooled)
    e = e - e.mean()
    m2 = np.mean(e ** 2)
    if m2 < 1e-24:
        raise NumericError("degenerate signal: residual variance ~ 0")
    return float(np.mean(e ** 4) / m2 ** 2)
