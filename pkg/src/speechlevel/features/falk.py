"""Composite prosody / linear-prediction feature vector.

Six utterance-level statistics: variability of the first-cepstrum delta
track, LP residual kurtosis, low-to-high modulation ratio, voiced-frame
fraction, and the standard deviation and range of voiced F0.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ..audio import Waveform
from ..errors import SpeechLevelWarning
from .lpc import lp_residual_kurtosis
from .mel import mfcc_delta
from .modulation import lhmr, modulation_spectrum
from .pitch import pitch_track

FALK_FEATURE_NAMES = ("dc0_std", "lp_kurtosis", "lhmr", "pct_voiced",
                      "f0_std", "f0_range")


@dataclass(frozen=True)
class FalkVector:
    values: np.ndarray            # (6,) ordered as FALK_FEATURE_NAMES

    def as_dict(self) -> dict:
        return dict(zip(FALK_FEATURE_NAMES, self.values.tolist()))


def falk_intermediates(w: Waveform) -> dict:
    """Frame tracks and scalars the vector is built from.

    Exposed separately so attention-weighted aggregation can reweight the
    frame-level tracks without recomputing the expensive parts.
    """
    mfcc = mfcc_delta(w)
    dc0 = mfcc[:, 13]                        # delta of cepstrum 0
    track = pitch_track(w)
    return {
        "dc0": dc0,
        "kurtosis": lp_residual_kurtosis(w),
        "lhmr": lhmr(modulation_spectrum(w)),
        "voiced": track.voiced,
        "f0": track.f0_hz,
    }


def _vector_from_parts(dc0_std, kurtosis, lhmr_value, pct_voiced, f0_voiced):
    if f0_voiced.size >= 2:
        f0_std = float(np.std(f0_voiced))
        f0_range = float(np.max(f0_voiced) - np.min(f0_voiced))
    else:
        warnings.warn("fewer than 2 voiced frames; F0 statistics set to 0",
                      SpeechLevelWarning, stacklevel=3)
        f0_std = 0.0
        f0_range = 0.0
    return FalkVector(np.array([dc0_std, kurtosis, lhmr_value, pct_voiced,
                                f0_std, f0_range]))


def falk_features(w: Waveform) -> FalkVector:
    parts = falk_intermediates(w)
    voiced = parts["voiced"]
    pct = float(np.mean(voiced)) if voiced.size else 0.0
    return _vector_from_parts(float(np.std(parts["dc0"])), parts["kurtosis"],
                              parts["lhmr"], pct, parts["f0"][voiced])
