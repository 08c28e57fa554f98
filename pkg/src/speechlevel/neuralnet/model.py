"""Model parameters and the forward pass.

Parameter dict layout (all float64):
    dense1_w (n_input, n_dense1)   dense1_b (n_dense1,)
    lstm_wx  (n_dense1, 4*n_lstm)  lstm_uh (n_lstm, 4*n_lstm)  lstm_b (4*n_lstm,)
    attn_u   (n_lstm,)             only for attention pooling
    dense2_w (n_lstm, n_dense2)    dense2_b (n_dense2,)
    out_w    (n_dense2, n_classes) out_b   (n_classes,)

LSTM gates are packed [input | forget | output | candidate] along the last
axis. No peepholes; h0 = c0 = 0; forget bias starts at 1. Frames beyond an
item's valid length are never read by any pooling head, so padding cannot
reach the logits.
"""

from dataclasses import dataclass

import numpy as np

from ..seeding import stream
from .config import NetConfig


@dataclass
class SequenceModel:
    config: NetConfig
    params: dict

    def copy(self) -> "SequenceModel":
        return SequenceModel(self.config, {k: v.copy() for k, v in self.params.items()})


def _glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_model(cfg: NetConfig, seed: int) -> SequenceModel:
    """Glorot-uniform weights, zero biases except forget gate at 1, and the
    attention vector filled with 1/input_len."""
    rng = stream(seed, "init")
    p = {}
    p["dense1_w"] = _glorot(rng, cfg.n_input, cfg.n_dense1,
                            (cfg.n_input, cfg.n_dense1))
    p["dense1_b"] = np.zeros(cfg.n_dense1)
    wx = np.empty((cfg.n_dense1, 4 * cfg.n_lstm))
    uh = np.empty((cfg.n_lstm, 4 * cfg.n_lstm))
    for g in range(4):
        sl = slice(g * cfg.n_lstm, (g + 1) * cfg.n_lstm)
        wx[:, sl] = _glorot(rng, cfg.n_dense1, cfg.n_lstm,
                            (cfg.n_dense1, cfg.n_lstm))
        uh[:, sl] = _glorot(rng, cfg.n_lstm, cfg.n_lstm,
                            (cfg.n_lstm, cfg.n_lstm))
    p["lstm_wx"] = wx
    p["lstm_uh"] = uh
    b = np.zeros(4 * cfg.n_lstm)
    b[cfg.n_lstm:2 * cfg.n_lstm] = 1.0
    p["lstm_b"] = b
    if cfg.pooling == "attention":
        p["attn_u"] = np.full(cfg.n_lstm, 1.0 / cfg.input_len)
    p["dense2_w"] = _glorot(rng, cfg.n_lstm, cfg.n_dense2,
                            (cfg.n_lstm, cfg.n_dense2))
    p["dense2_b"] = np.zeros(cfg.n_dense2)
    p["out_w"] = _glorot(rng, cfg.n_dense2, cfg.n_classes,
                         (cfg.n_dense2, cfg.n_classes))
    p["out_b"] = np.zeros(cfg.n_classes)
    return SequenceModel(cfg, p)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softmax_rows(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _as_batch(x, valid):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if valid is None:
        valid = np.full(x.shape[0], x.shape[1])
    valid = np.asarray(valid, dtype=np.int64).reshape(-1)
    if valid.shape[0] != x.shape[0]:
        raise ValueError("valid lengths do not match batch size")
    if np.any(valid < 1) or np.any(valid > x.shape[1]):
        raise ValueError("valid lengths must be in [1, padded length]")
    return x, valid


def forward(model: SequenceModel, x, valid=None, training: bool = False,
            dropout_rng=None, want_cache: bool = False):
    """Class probabilities for a padded batch.

    x: (B, L, n_input) or a single (L, n_input); valid: per-item frame counts.
    Only the first max(valid) steps are computed, so growing the padding of a
    batch changes nothing, bit for bit.
    """
    cfg = model.config
    p = model.params
    x, valid = _as_batch(x, valid)
    bsz = x.shape[0]
    tm = int(valid.max())
    nl = cfg.n_lstm

    pre1 = x[:, :tm] @ p["dense1_w"] + p["dense1_b"]
    a1 = np.maximum(pre1, 0.0)

    gi, gf, go, gg = (np.empty((bsz, tm, nl)) for _ in range(4))
    cs = np.empty((bsz, tm, nl))
    tc = np.empty((bsz, tm, nl))
    ys = np.empty((bsz, tm, nl))
    h = np.zeros((bsz, nl))
    c = np.zeros((bsz, nl))
    wx, uh, b = p["lstm_wx"], p["lstm_uh"], p["lstm_b"]
    for t in range(tm):
        z = a1[:, t] @ wx + h @ uh + b
        i_t = _sigmoid(z[:, :nl])
        f_t = _sigmoid(z[:, nl:2 * nl])
        o_t = _sigmoid(z[:, 2 * nl:3 * nl])
        g_t = np.tanh(z[:, 3 * nl:])
        c = f_t * c + i_t * g_t
        tct = np.tanh(c)
        h = o_t * tct
        gi[:, t], gf[:, t], go[:, t], gg[:, t] = i_t, f_t, o_t, g_t
        cs[:, t], tc[:, t], ys[:, t] = c, tct, h

    z_pool = np.empty((bsz, nl))
    alphas = np.zeros((bsz, tm)) if cfg.pooling == "attention" else None
    for bi in range(bsz):
        tb = int(valid[bi])
        yb = ys[bi, :tb]
        if cfg.pooling == "last":
            z_pool[bi] = yb[-1]
        elif cfg.pooling == "mean":
            z_pool[bi] = yb.mean(axis=0)
        else:
            s = yb @ p["attn_u"]
            e = np.exp(s - s.max())
            a = e / e.sum()
            alphas[bi, :tb] = a
            z_pool[bi] = a @ yb

    pre2 = z_pool @ p["dense2_w"] + p["dense2_b"]
    d2 = np.maximum(pre2, 0.0)
    mask = None
    if training and cfg.dropout > 0.0:
        if dropout_rng is None:
            raise ValueError("training forward with dropout needs an RNG")
        keep = 1.0 - cfg.dropout
        mask = (dropout_rng.uniform(size=d2.shape) < keep) / keep
        d2 = d2 * mask
    logits = d2 @ p["out_w"] + p["out_b"]
    probs = _softmax_rows(logits)

    if not want_cache:
        return probs, None
    cache = {
        "x": x, "valid": valid, "tm": tm, "pre1": pre1, "a1": a1,
        "i": gi, "f": gf, "o": go, "g": gg, "c": cs, "tc": tc, "y": ys,
        "alphas": alphas, "z_pool": z_pool, "pre2": pre2, "d2": d2,
        "mask": mask, "logits": logits, "probs": probs,
    }
    return probs, cache


def predict(model: SequenceModel, x, valid=None) -> np.ndarray:
    """Class indices; ties resolve to the lower index."""
    probs, _ = forward(model, x, valid)
    return np.argmax(probs, axis=1)


def attention_weights(model: SequenceModel, x, valid=None) -> list:
    """Per-item attention weight vectors (length = item's valid frames)."""
    if model.config.pooling != "attention":
        raise ValueError("model does not use attention pooling")
    _, cache = forward(model, x, valid, want_cache=True)
    out = []
    for bi, tb in enumerate(cache["valid"]):
        out.append(cache["alphas"][bi, :int(tb)].copy())
    return out
