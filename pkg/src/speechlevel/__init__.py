"""Non-intrusive classification of speech intelligibility level (low/medium/high).

Waveforms go through voice-activity detection and four acoustic feature
families (log-mel, MFCC+deltas, auditory modulation energies, prosody/LP
statistics), then into either a reference SVM or one of three recurrent
sequence classifiers, the strongest of which pools LSTM outputs with a
learned attention vector.
"""

__version__ = "0.1.0"

from .errors import DataError, NumericError, SpeechLevelWarning, UsageError

__all__ = [
    "DataError",
    "NumericError",
    "SpeechLevelWarning",
    "UsageError",
    "__version__",
]
