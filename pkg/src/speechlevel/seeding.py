"""Labeled RNG stream derivation.

Every random choice in the package flows from one integer seed. Subcomponents
ask for a stream by label ("corpus", "split", "train/3", ...) so adding a new
consumer never perturbs existing streams.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    """Map (seed, labels...) to a 64-bit integer via SHA-256."""
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("ascii"))
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def stream(seed: int, *labels) -> np.random.Generator:
    """A Generator whose state depends only on (seed, labels...)."""
    return np.random.default_rng(derive_seed(seed, *labels))
