"""Reference classifier: one-vs-all RBF SVMs trained by SMO.

The dual problem is solved by sequential minimal optimization with
maximal-violating-pair selection (the pair straddling the largest KKT gap).
Hyperparameters come from a deterministic grid (C in {0.1, 1, 10, 100},
gamma in {2^k / n_features}) scored by 5-fold cross-validation. Fold
membership and the internal sample ordering both derive from a digest of each
sample's bytes, so anything downstream is invariant to training-row order.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .tensorfile import SVM_MAGIC, read_tensors, write_tensors

C_GRID = (0.1, 1.0, 10.0, 100.0)
GAMMA_EXPONENTS = tuple(range(-3, 4))
N_FOLDS = 5
TOL = 1e-3
MAX_ITER = 200_000
CLASS_NAMES = ("L", "M", "H")


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2), shape (len(a), len(b))."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    d = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] \
        - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(d, 0.0))


def dual_objective(kernel: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """sum(alpha) - 1/2 alpha^T (yy^T * K) alpha."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ kernel @ ay)


@dataclass
class BinarySvm:
    support_vectors: np.ndarray         # (m, d) in normalized space
    coef: np.ndarray                    # (m,) = alpha * y at the support vectors
    bias: float
    gamma: float

    def decision(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.support_vectors.shape[0] == 0:
            return np.full(x.shape[0], self.bias)
        k = rbf_kernel(x, self.support_vectors, self.gamma)
        return k @ self.coef + self.bias


def svm_train_binary(x: np.ndarray, y: np.ndarray, c: float, gamma: float,
                     tol: float = TOL, kernel: np.ndarray | None = None,
                     max_iter: int = MAX_ITER):
    """SMO for one binary problem; y must be +-1.

    Returns (BinarySvm, alpha, dual objective). Degenerate single-class input
    yields a constant-decision model.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = x.shape[0]
    if n == 0 or np.all(y > 0) or np.all(y < 0):
        b = 1.0 if n and y[0] > 0 else -1.0
        return (BinarySvm(np.zeros((0, x.shape[1] if x.ndim == 2 else 0)),
                          np.zeros(0), b, gamma), np.zeros(n), 0.0)
    k = rbf_kernel(x, x, gamma) if kernel is None else kernel
    alpha = np.zeros(n)
    f = -y.copy()                       # f_i = sum_j alpha_j y_j K_ij - y_i
    eps = 1e-12
    for _ in range(max_iter):
        up = ((y > 0) & (alpha < c - eps)) | ((y < 0) & (alpha > eps))
        dn = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < c - eps))
        if not up.any() or not dn.any():
            break
        iu = np.flatnonzero(up)
        idn = np.flatnonzero(dn)
        i = iu[np.argmin(f[iu])]
        j = idn[np.argmax(f[idn])]
        b_up, b_low = f[i], f[j]
        if b_low - b_up <= tol:
            break
        s = y[i] * y[j]
        if s < 0:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(c, c + alpha[j] - alpha[i])
        else:
            lo = max(0.0, alpha[i] + alpha[j] - c)
            hi = min(c, alpha[i] + alpha[j])
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if eta < 1e-12:
            eta = 1e-12
        aj_new = np.clip(alpha[j] + y[j] * (f[i] - f[j]) / eta, lo, hi)
        delta_j = aj_new - alpha[j]
        if abs(delta_j) < 1e-14:
            break                       # pair cannot move; gap is numerical
        ai_new = alpha[i] + s * (alpha[j] - aj_new)
        f += y[i] * (ai_new - alpha[i]) * k[:, i] + y[j] * delta_j * k[:, j]
        alpha[i], alpha[j] = ai_new, aj_new

    up = ((y > 0) & (alpha < c - eps)) | ((y < 0) & (alpha > eps))
    dn = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < c - eps))
    b_up = np.min(f[up]) if up.any() else np.max(f[dn])
    b_low = np.max(f[dn]) if dn.any() else np.min(f[up])
    bias = -(b_up + b_low) / 2.0
    sv = alpha > 1e-12
    model = BinarySvm(x[sv].copy(), (alpha * y)[sv], float(bias), gamma)
    return model, alpha, dual_objective(k, y, alpha)


@dataclass
class ZNorm:
    """Z-scoring over the informative columns; constant columns are dropped.

    keep marks the retained input columns; mean/std describe only those, so
    apply() returns a (possibly) narrower matrix.
    """

    mean: np.ndarray
    std: np.ndarray                     # zero-variance features pinned to 1
    keep: np.ndarray

    @staticmethod
    def informative_columns(x: np.ndarray) -> np.ndarray:
        keep = x.std(axis=0) >= 1e-12
        if not keep.any():              # nothing varies; fall back to as-is
            keep = np.ones(x.shape[1], dtype=bool)
        return keep

    @classmethod
    def fit(cls, x: np.ndarray, keep: np.ndarray | None = None) -> "ZNorm":
        x = np.asarray(x, dtype=np.float64)
        if keep is None:
            keep = cls.informative_columns(x)
        xk = x[:, keep]
        std = xk.std(axis=0)
        return cls(xk.mean(axis=0), np.where(std < 1e-12, 1.0, std),
                   np.asarray(keep, dtype=bool))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return (x[:, self.keep] - self.mean) / self.std


@dataclass
class SvmModel:
    norm: ZNorm
    machines: list                      # one BinarySvm per class, index order
    c: float
    gamma: float
    cv_accuracy: float
    class_names: tuple = CLASS_NAMES
    extra: dict = field(default_factory=dict)

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        xn = self.norm.apply(x)
        return np.stack([m.decision(xn) for m in self.machines], axis=1)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Class indices; argmax of decision values, ties to the lower index."""
        return np.argmax(self.decision_values(x), axis=1)


def _digests(x: np.ndarray, labels: np.ndarray) -> list:
    out = []
    for row, lab in zip(x, labels):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(row, dtype="<f8").tobytes())
        h.update(int(lab).to_bytes(4, "little", signed=True))
        out.append(h.digest())
    return out


def svm_train_ova(x: np.ndarray, labels: np.ndarray,
                  c_grid=C_GRID, gamma_exponents=GAMMA_EXPONENTS,
                  n_folds: int = N_FOLDS, n_classes: int = 3) -> SvmModel:
    """Grid-searched one-vs-all fit.

    Rows are canonically ordered by a digest of their informative (non
    constant) raw columns plus label, then z-scored in that order and split
    into folds by the same digest; each (C, gamma) is scored by pooled
    cross-validation accuracy, ties preferring smaller C then smaller gamma.
    The winner is refit on everything. Ordering before fitting the stats
    makes the whole fit independent of the caller's row order, bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    keep = ZNorm.informative_columns(x)
    xk = x[:, keep]

    digests = _digests(xk, labels)
    order = sorted(range(len(digests)), key=lambda i: digests[i])
    x = x[order]
    labels = labels[order]
    folds = np.array([digests[i][-1] % n_folds for i in order])

    norm = ZNorm.fit(x, keep)
    xn = norm.apply(x)

    d = xn.shape[1]
    gammas = [2.0 ** k / d for k in gamma_exponents]
    sqd = np.sum(xn * xn, axis=1)[:, None] + np.sum(xn * xn, axis=1)[None, :] \
        - 2.0 * (xn @ xn.T)
    np.maximum(sqd, 0.0, out=sqd)

    best = None                         # (acc, c, gamma)
    for gamma in gammas:
        kfull = np.exp(-gamma * sqd)
        for c in c_grid:
            hits = 0
            total = 0
            for fold in range(n_folds):
                va = folds == fold
                tr = ~va
                if not va.any() or not tr.any():
                    continue
                tr_idx = np.flatnonzero(tr)
                ktr = kfull[np.ix_(tr_idx, tr_idx)]
                machines = []
                for cls in range(n_classes):
                    ybin = np.where(labels[tr_idx] == cls, 1.0, -1.0)
                    m, _, _ = svm_train_binary(xn[tr_idx], ybin, c, gamma,
                                               kernel=ktr)
                    machines.append(m)
                scores = np.stack([m.decision(xn[va]) for m in machines], axis=1)
                pred = np.argmax(scores, axis=1)
                hits += int(np.sum(pred == labels[va]))
                total += int(va.sum())
            acc = hits / total if total else 0.0
            if (best is None or acc > best[0]
                    or (acc == best[0] and (c, gamma) < (best[1], best[2]))):
                best = (acc, c, gamma)

    _, c_star, gamma_star = best
    kfull = np.exp(-gamma_star * sqd)
    machines = []
    for cls in range(n_classes):
        ybin = np.where(labels == cls, 1.0, -1.0)
        m, _, _ = svm_train_binary(xn, ybin, c_star, gamma_star, kernel=kfull)
        machines.append(m)
    return SvmModel(norm, machines, c_star, gamma_star, best[0],
                    CLASS_NAMES[:n_classes])


def save_svm(path, model: SvmModel) -> None:
    header = {
        "kind": "ova-rbf-svm",
        "c": model.c,
        "gamma": model.gamma,
        "cv_accuracy": model.cv_accuracy,
        "class_names": list(model.class_names),
        "biases": [m.bias for m in model.machines],
        "extra": model.extra,
    }
    tensors = {"norm_mean": model.norm.mean, "norm_std": model.norm.std,
               "norm_keep": model.norm.keep.astype(np.float64)}
    for idx, m in enumerate(model.machines):
        tensors[f"sv_{idx}"] = m.support_vectors
        tensors[f"coef_{idx}"] = m.coef
    write_tensors(path, SVM_MAGIC, header, tensors)


def load_svm(path) -> SvmModel:
    header, tensors = read_tensors(path, SVM_MAGIC)
    norm = ZNorm(tensors["norm_mean"], tensors["norm_std"],
                 tensors["norm_keep"] > 0.5)
    machines = []
    for idx, bias in enumerate(header["biases"]):
        machines.append(BinarySvm(tensors[f"sv_{idx}"], tensors[f"coef_{idx}"],
                                  float(bias), float(header["gamma"])))
    return SvmModel(norm, machines, float(header["c"]), float(header["gamma"]),
                    float(header["cv_accuracy"]),
                    tuple(header["class_names"]), header.get("extra", {}))
