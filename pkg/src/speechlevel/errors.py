"""Exception and warning types shared across the package.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericError -> 3.
"""


class UsageError(Exception):
    """Bad invocation: unknown config key, malformed flag value, missing argument."""


class DataError(Exception):
    """Unreadable or inconsistent input data (missing file, bad WAV, empty manifest)."""


class NumericError(Exception):
    """Numerical failure such as divergence (NaN loss) or a degenerate signal."""


class SpeechLevelWarning(UserWarning):
    """Non-fatal data oddity (unexpected sample rate, too few voiced frames, ...)."""
