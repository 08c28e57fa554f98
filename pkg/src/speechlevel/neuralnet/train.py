"""Minibatch training with validation-snapshot selection."""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from ..seeding import derive_seed, stream
from .adam import AdamState, adam_step
from .backprop import loss_and_grad
from .config import NetConfig, TrainConfig
from .model import SequenceModel, forward, init_model


@dataclass
class TrainResult:
    model: SequenceModel                # best-validation snapshot
    final_model: SequenceModel
    log: list                           # per-epoch dicts
    best_epoch: int
    best_valid_acc: float


def evaluate_accuracy(model: SequenceModel, x, valid, labels,
                      batch_size: int = 64) -> float:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    hits = 0
    for lo in range(0, len(labels), batch_size):
        hi = min(lo + batch_size, len(labels))
        probs, _ = forward(model, x[lo:hi], valid[lo:hi])
        hits += int(np.sum(np.argmax(probs, axis=1) == labels[lo:hi]))
    return hits / max(1, len(labels))


def train(net_cfg: NetConfig, train_cfg: TrainConfig, train_data, valid_data,
          seed: int) -> TrainResult:
    """train_data / valid_data: (x (N, L, n_input), valid (N,), labels (N,)).

    Keeps the parameters from the epoch with the best validation accuracy
    (earliest wins on ties). Raises NumericError on NaN/inf loss.
    """
    x_tr, v_tr, y_tr = train_data
    x_va, v_va, y_va = valid_data
    y_tr = np.asarray(y_tr, dtype=np.int64).reshape(-1)
    n = x_tr.shape[0]

    model = init_model(net_cfg, seed)
    state = AdamState.for_params(model.params)
    best = model.copy()
    best_acc = -1.0
    best_epoch = -1
    log = []
    for epoch in range(train_cfg.max_epochs):
        order = stream(seed, "shuffle", epoch).permutation(n)
        losses = []
        hits = 0
        for bi, lo in enumerate(range(0, n, train_cfg.batch_size)):
            idx = order[lo:lo + train_cfg.batch_size]
            dseed = derive_seed(seed, "batch", epoch, bi)
            aux = {}
            loss, grads = loss_and_grad(model, x_tr[idx], v_tr[idx], y_tr[idx],
                                        dropout_seed=dseed, aux=aux)
            if not np.isfinite(loss):
                raise NumericError(f"training diverged at epoch {epoch} "
                                   f"(loss={loss})")
            if train_cfg.clip_norm > 0.0:
                gnorm = np.sqrt(sum(float(np.sum(g * g))
                                    for g in grads.values()))
                if gnorm > train_cfg.clip_norm:
                    scale = train_cfg.clip_norm / gnorm
                    for g in grads.values():
                        g *= scale
            adam_step(model.params, grads, state, train_cfg)
            losses.append(loss)
            hits += int(np.sum(np.argmax(aux["probs"], axis=1) == y_tr[idx]))
        valid_acc = evaluate_accuracy(model, x_va, v_va, y_va)
        entry = {"epoch": epoch, "train_loss": float(np.mean(losses)),
                 "train_acc": hits / n, "valid_acc": valid_acc}
        log.append(entry)
        if valid_acc > best_acc:
            best_acc = valid_acc
            best_epoch = epoch
            best = model.copy()
    return TrainResult(best, model, log, best_epoch, best_acc)
