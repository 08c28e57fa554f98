"""Adam with bias correction, operating on parameter dicts."""

from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(m={k: np.zeros_like(p) for k, p in params.items()},
                   v={k: np.zeros_like(p) for k, p in params.items()},
                   t=0)


def adam_step(params: dict, grads: dict, state: AdamState,
              cfg: TrainConfig) -> None:
    """One update, in place. state.t counts completed steps."""
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for k, g in grads.items():
        m = state.m[k]
        v = state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[k] -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
