"""One-vs-all soft-margin SVMs trained with SMO."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import kernels
from ..errors import InputError, NumericError, ParameterError

KERNELS = ("rbf", "linear", "polynomial")
KKT_TOLERANCE = 1e-3


@dataclass(frozen=True)
class GramSpec:
    kernel: str = "rbf"
    scale: float = 1.0
    order: int = 3
    box: float = 1.0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ParameterError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not self.scale > 0:
            raise ParameterError("kernel scale must be positive")
        if not 1 <= int(self.order) <= 7:
            raise ParameterError("polynomial order must be in 1..7")
        if not self.box > 0:
            raise ParameterError("box constraint must be positive")

    def gram(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        c2 = self.scale * self.scale
        if self.kernel == "rbf":
            sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
            return np.exp(-np.maximum(sq, 0.0) / c2)
        dot = A @ B.T / c2
        if self.kernel == "linear":
            return dot
        return (1.0 + dot) ** int(self.order)


@dataclass
class BinarySVM:
    support: np.ndarray  # support vectors (rows)
    coef: np.ndarray  # alpha_i * y_i
    bias: float

    def decision(self, K_rows) -> np.ndarray:
        return K_rows @ self.coef + self.bias


def kkt_violation(K, y, C, alpha, bias) -> float:
    """Largest KKT violation of a trained binary machine (0 when optimal)."""
    f = K @ (alpha * y) + bias
    m = y * f
    v = np.zeros_like(m)
    free = (alpha > 0) & (alpha < C)
    at_zero = alpha <= 0
    at_box = alpha >= C
    v[at_zero] = np.maximum(0.0, 1.0 - m[at_zero])
    v[at_box] = np.maximum(0.0, m[at_box] - 1.0)
    v[free] = np.abs(m[free] - 1.0)
    return float(v.max()) if v.size else 0.0


def solve_binary(K, y, C, tol=KKT_TOLERANCE, max_iter=None):
    y = np.asarray(y, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if max_iter is None:
        max_iter = max(100_000, 200 * y.shape[0])
    alpha, b, it, ok = kernels.smo_solve(np.ascontiguousarray(K), y, C, tol, max_iter)
    return alpha, float(b), int(it), bool(ok)


class SVMModel:
    kind = "svm"

    def __init__(self, spec: GramSpec, machines):
        self.spec = spec
        self.machines = list(machines)

    def decision_values(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], len(self.machines)))
        for c, m in enumerate(self.machines):
            if m.support.shape[0] == 0:
                out[:, c] = m.bias
            else:
                out[:, c] = m.decision(self.spec.gram(X, m.support))
        return out

    def predict(self, X):
        return np.argmax(self.decision_values(X), axis=1)

    def state(self):
        arrays = {}
        for c, m in enumerate(self.machines):
            arrays[f"m{c}_support"] = m.support
            arrays[f"m{c}_coef"] = m.coef
        meta = {"spec": asdict(self.spec), "bias": [m.bias for m in self.machines]}
        return meta, arrays

    @classmethod
    def from_state(cls, meta, arrays):
        ms = [BinarySVM(arrays[f"m{c}_support"], arrays[f"m{c}_coef"], b) for c, b in enumerate(meta["bias"])]
        return cls(GramSpec(**meta["spec"]), ms)


def train_svm_ova(X, y, w, n_classes, spec: GramSpec, tol=KKT_TOLERANCE, max_iter=None) -> SVMModel:
    """One class-vs-rest machine per class; per-sample box = box * weight."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    if n_classes < 2:
        raise InputError("SVM training needs at least 2 classes")
    if X.shape[0] == 0:
        raise InputError("empty training set")
    K = spec.gram(X, X)
    C = spec.box * w
    machines = []
    for c in range(n_classes):
        yc = np.where(y == c, 1.0, -1.0)
        alpha, b, it, ok = solve_binary(K, yc, C, tol, max_iter)
        if not ok:
            raise NumericError(f"SMO did not converge for class {c} after {it} iterations")
        sv = alpha > 0
        machines.append(BinarySVM(X[sv].copy(), (alpha * yc)[sv], b))
    return SVMModel(spec, machines)
