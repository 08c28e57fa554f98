"""Loss and exact gradients via full backpropagation through time.

The attention head is differentiated through the softmax (ds = alpha *
(dalpha - sum(alpha * dalpha))), so the attention vector trains jointly with
everything else. Items shorter than the batch unroll contribute exact zeros
past their valid length.
"""

import numpy as np

from ..seeding import stream
from .model import SequenceModel, forward


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log probability of the true class."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    picked = probs[np.arange(probs.shape[0]), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def loss_and_grad(model: SequenceModel, x, valid, labels, dropout_seed=None,
                  aux=None):
    """Returns (loss, grads) where grads mirrors model.params.

    dropout_seed=None runs the inference path (no dropout), which is what the
    finite-difference checker uses. Pass a dict as aux to receive the forward
    probabilities without a second pass.
    """
    cfg = model.config
    p = model.params
    training = dropout_seed is not None and cfg.dropout > 0.0
    rng = stream(dropout_seed, "dropout") if training else None
    probs, cache = forward(model, x, valid, training=training,
                           dropout_rng=rng, want_cache=True)
    if aux is not None:
        aux["probs"] = probs
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    bsz = probs.shape[0]
    loss = cross_entropy(probs, labels)

    grads = {k: np.zeros_like(v) for k, v in p.items()}
    valid = cache["valid"]
    tm = cache["tm"]
    nl = cfg.n_lstm
    ys, a1 = cache["y"], cache["a1"]

    dlogits = probs.copy()
    dlogits[np.arange(bsz), labels] -= 1.0
    dlogits /= bsz

    d2 = cache["d2"]
    grads["out_w"] = d2.T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dd2 = dlogits @ p["out_w"].T
    if cache["mask"] is not None:
        dd2 = dd2 * cache["mask"]
    dd2 = dd2 * (cache["pre2"] > 0.0)
    grads["dense2_w"] = cache["z_pool"].T @ dd2
    grads["dense2_b"] = dd2.sum(axis=0)
    dz_pool = dd2 @ p["dense2_w"].T

    dy = np.zeros((bsz, tm, nl))
    for bi in range(bsz):
        tb = int(valid[bi])
        dzb = dz_pool[bi]
        if cfg.pooling == "last":
            dy[bi, tb - 1] += dzb
        elif cfg.pooling == "mean":
            dy[bi, :tb] += dzb / tb
        else:
            yb = ys[bi, :tb]
            a = cache["alphas"][bi, :tb]
            dy[bi, :tb] += a[:, None] * dzb[None, :]
            dalpha = yb @ dzb
            ds = a * (dalpha - float(a @ dalpha))
            grads["attn_u"] += yb.T @ ds
            dy[bi, :tb] += ds[:, None] * p["attn_u"][None, :]

    gi, gf, go, gg = cache["i"], cache["f"], cache["o"], cache["g"]
    cs, tc = cache["c"], cache["tc"]
    uh_t = p["lstm_uh"].T
    dz_all = np.zeros((bsz, tm, 4 * nl))
    dh = np.zeros((bsz, nl))
    dc = np.zeros((bsz, nl))
    for t in range(tm - 1, -1, -1):
        dh_t = dh + dy[:, t]
        i_t, f_t, o_t, g_t = gi[:, t], gf[:, t], go[:, t], gg[:, t]
        tct = tc[:, t]
        do = dh_t * tct
        dc = dc + dh_t * o_t * (1.0 - tct * tct)
        di = dc * g_t
        dg = dc * i_t
        c_prev = cs[:, t - 1] if t > 0 else 0.0
        df = dc * c_prev
        dz_all[:, t, :nl] = di * i_t * (1.0 - i_t)
        dz_all[:, t, nl:2 * nl] = df * f_t * (1.0 - f_t)
        dz_all[:, t, 2 * nl:3 * nl] = do * o_t * (1.0 - o_t)
        dz_all[:, t, 3 * nl:] = dg * (1.0 - g_t * g_t)
        dh = dz_all[:, t] @ uh_t
        dc = dc * f_t

    flat_dz = dz_all.reshape(bsz * tm, 4 * nl)
    grads["lstm_wx"] = a1.reshape(bsz * tm, -1).T @ flat_dz
    y_prev = np.zeros_like(ys)
    y_prev[:, 1:] = ys[:, :-1]
    grads["lstm_uh"] = y_prev.reshape(bsz * tm, nl).T @ flat_dz
    grads["lstm_b"] = flat_dz.sum(axis=0)

    da1 = dz_all @ p["lstm_wx"].T
    dpre1 = da1 * (cache["pre1"] > 0.0)
    flat_dpre1 = dpre1.reshape(bsz * tm, -1)
    grads["dense1_w"] = cache["x"][:, :tm].reshape(bsz * tm, -1).T @ flat_dpre1
    grads["dense1_b"] = flat_dpre1.sum(axis=0)
    return loss, grads
