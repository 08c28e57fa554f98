"""Auditory modulation energies.

The signal passes a 23-band gammatone bank (ERB-spaced centers, 125 Hz to
7.5 kHz). Each band's temporal envelope (magnitude of the analytic signal,
decimated to 500 Hz) is split by eight second-order band-pass filters whose
centers climb from 4 to 128.4 Hz at Q = 2. Energies are taken on 256 ms
windows every 64 ms and averaged, giving a 23 x 8 matrix per utterance. The
low-to-high modulation ratio (LHMR) condenses that matrix into one scalar.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from ..audio import Waveform
from ..errors import DataError, SpeechLevelWarning

N_BANDS = 23
F_LO = 125.0
F_HI = 7500.0
GAMMATONE_ORDER = 4
MOD_CENTERS_HZ = (4.0, 6.5, 10.7, 17.6, 28.9, 47.5, 78.1, 128.4)
MOD_Q = 2.0
ENV_RATE = 500.0          # envelope sample rate after decimation
WIN_S = 0.256
HOP_S = 0.064


def erb_hz(f):
    """Equivalent rectangular bandwidth at center frequency f (Hz)."""
    return 24.7 * (4.37 * np.asarray(f, dtype=np.float64) / 1000.0 + 1.0)


def erbrate(f):
    return 21.4 * np.log10(4.37 * np.asarray(f, dtype=np.float64) / 1000.0 + 1.0)


def erbrate_inv(r):
    return (10.0 ** (np.asarray(r, dtype=np.float64) / 21.4) - 1.0) * 1000.0 / 4.37


def gammatone_centers(n_bands: int = N_BANDS, f_lo: float = F_LO,
                      f_hi: float = F_HI) -> np.ndarray:
    return erbrate_inv(np.linspace(erbrate(f_lo), erbrate(f_hi), n_bands))


@lru_cache(maxsize=4)
def gammatone_bank(sample_rate: int, n_bands: int = N_BANDS, f_lo: float = F_LO,
                   f_hi: float = F_HI, ir_len: int = 1024) -> np.ndarray:
    """FIR gammatone impulse responses, shape (n_bands, ir_len).

    g(t) = t^(order-1) exp(-2 pi b t) cos(2 pi f t), b = 1.019 ERB(f), each
    row scaled to unit magnitude response at its center frequency.
    """
    centers = gammatone_centers(n_bands, f_lo, f_hi)
    t = np.arange(ir_len) / sample_rate
    bank = np.zeros((n_bands, ir_len))
    for j, fc in enumerate(centers):
        b = 1.019 * erb_hz(fc)
        ir = t ** (GAMMATONE_ORDER - 1) * np.exp(-2 * np.pi * b * t) * \
            np.cos(2 * np.pi * fc * t)
        h = np.fft.rfft(ir, n=4 * ir_len)
        freqs = np.fft.rfftfreq(4 * ir_len, d=1.0 / sample_rate)
        gain = np.abs(h[np.argmin(np.abs(freqs - fc))])
        bank[j] = ir / (gain + 1e-30)
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=4)
def _mod_filter_sos(env_rate: float = ENV_RATE):
    """Second-order Butterworth band-passes, geometrically symmetric, Q = 2."""
    sos = []
    for fc in MOD_CENTERS_HZ:
        bw = fc / MOD_Q
        f1 = fc * (math.sqrt(1.0 + 1.0 / (4.0 * MOD_Q ** 2)) - 1.0 / (2.0 * MOD_Q))
        f2 = f1 + bw
        sos.append(sps.butter(2, [f1, f2], btype="bandpass", fs=env_rate,
                              output="sos"))
    return tuple(sos)


def band_envelopes(w: Waveform, sample_rate_check: bool = True) -> np.ndarray:
    """Decimated (500 Hz) temporal envelopes per gammatone band, (n_bands, n)."""
    x = np.asarray(w.samples, dtype=np.float64)
    bank = gammatone_bank(w.sample_rate)
    banded = sps.fftconvolve(x[None, :], bank, mode="full", axes=1)[:, :x.size]
    env = np.abs(sps.hilbert(banded, axis=1))
    down = int(round(w.sample_rate / ENV_RATE))
    return sps.resample_poly(env, up=1, down=down, axis=1)


@dataclass(frozen=True)
class ModulationSpectrum:
    """values: (n_bands, n_mod) window-averaged energies."""

    values: np.ndarray
    band_centers_hz: np.ndarray
    mod_centers_hz: np.ndarray

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


def modulation_windows(w: Waveform):
    """Per-window modulation energies.

    Returns (energies, window_times): energies has shape
    (n_windows, n_bands, n_mod); window_times holds window start seconds.
    """
    env = band_envelopes(w)
    n = env.shape[1]
    win = int(round(WIN_S * ENV_RATE))
    hop = int(round(HOP_S * ENV_RATE))
    if n < win:
        raise DataError(
            f"signal too short for modulation analysis: {n / ENV_RATE:.3f} s of "
            f"envelope, need at least {WIN_S} s")
    n_windows = 1 + (n - win) // hop
    filtered = np.empty((len(MOD_CENTERS_HZ), env.shape[0], n))
    for k, sos in enumerate(_mod_filter_sos()):
        filtered[k] = sps.sosfilt(sos, env, axis=1)
    energies = np.empty((n_windows, env.shape[0], len(MOD_CENTERS_HZ)))
    for m in range(n_windows):
        seg = filtered[:, :, m * hop:m * hop + win]
        energies[m] = (seg ** 2).sum(axis=2).T
    times = np.arange(n_windows) * HOP_S
    return energies, times


def modulation_spectrum(w: Waveform) -> ModulationSpectrum:
    """Window-averaged 23 x 8 modulation energy matrix."""
    energies, _ = modulation_windows(w)
    return ModulationSpectrum(energies.mean(axis=0), gammatone_centers(),
                              np.array(MOD_CENTERS_HZ))


def lhmr(ms: ModulationSpectrum, n_low: int = 1) -> float:
    """Ratio of energy in the lowest n_low modulation filters to the rest.

    The first filter (4 Hz center) is the slow side by default. A zero
    high-side sum yields +inf with a warning.
    """
    low = float(ms.values[:, :n_low].sum())
    high = float(ms.values[:, n_low:].sum())
    if high == 0.0:
        warnings.warn("zero high-modulation energy; LHMR is infinite",
                      SpeechLevelWarning, stacklevel=2)
        return math.inf
    return low / high
