"""Central finite-difference verification of the analytic gradients."""

import numpy as np

from .backprop import cross_entropy, loss_and_grad
from .model import SequenceModel, forward


def _loss_only(model, x, valid, labels):
    probs, _ = forward(model, x, valid)
    return cross_entropy(probs, labels)


def grad_check(model: SequenceModel, x, valid, labels,
               eps: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    Checks every entry of every parameter with the dropout-free loss.
    Relative error is |a - n| / max(|a| + |n|, 1e-8).
    """
    _, grads = loss_and_grad(model, x, valid, labels, dropout_seed=None)
    worst = 0.0
    for name, param in model.params.items():
        flat = param.reshape(-1)
        gflat = grads[name].reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + eps
            up = _loss_only(model, x, valid, labels)
            flat[j] = keep - eps
            dn = _loss_only(model, x, valid, labels)
            flat[j] = keep
            numeric = (up - dn) / (2.0 * eps)
            err = abs(gflat[j] - numeric) / max(abs(gflat[j]) + abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
