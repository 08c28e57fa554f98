"""Acoustic feature families.

Four extractors feed the classifiers: 32-band log-mel sequences (recurrent
models), 13 cepstra + deltas (frame features for the reference SVM), auditory
modulation energies (23 acoustic x 8 modulation bands), and a six-dimensional
prosody/LP statistic vector.
"""

from .container import read_matrix, write_matrix
from .falk import FALK_FEATURE_NAMES, FalkVector, falk_features, falk_intermediates
from .lpc import levinson, lp_residual_kurtosis
from .mel import (LogMelSpectrogram, log_mel, mel_filterbank, mel_to_hz,
                  hz_to_mel, mfcc_delta, power_spectrogram)
from .modulation import (MOD_CENTERS_HZ, ModulationSpectrum, gammatone_bank,
                         lhmr, modulation_spectrum, modulation_windows)
from .pitch import PitchTrack, pitch_track

__all__ = [
    "FALK_FEATURE_NAMES",
    "FalkVector",
    "LogMelSpectrogram",
    "MOD_CENTERS_HZ",
    "ModulationSpectrum",
    "PitchTrack",
    "falk_features",
    "falk_intermediates",
    "gammatone_bank",
    "hz_to_mel",
    "levinson",
    "lhmr",
    "log_mel",
    "lp_residual_kurtosis",
    "mel_filterbank",
    "mel_to_hz",
    "mfcc_delta",
    "modulation_spectrum",
    "modulation_windows",
    "pitch_track",
    "power_spectrogram",
    "read_matrix",
    "write_matrix",
]
