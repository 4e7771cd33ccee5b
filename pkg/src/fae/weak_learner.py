"""Instance-weighted binary logistic regression trained by gradient descent.

The objective for sample weights ``w`` over ``n`` rows is

    (sum_i w_i * log(1 + exp(-y_i * (x_i . beta + b))) + l2 * |beta|^2 * sum(w) / n) / sum(w)

i.e. the weighted mean logistic loss plus ``l2 * |beta|^2 / n``.  Scaling all
weights by a constant leaves the objective, and hence the fit, unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

L2 = 1e-4
MAX_ITER = 500
GRAD_TOL = 1e-6
ARMIJO = 1e-4


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("logistic model parameters must be finite")

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {X.shape[-1]}")
        return X @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {"weights": [float(v) for v in self.weights], "bias": float(self.bias)}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=float), float(d["bias"]))


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=float)))


def predict_score(model: LogisticModel, x) -> np.ndarray | float:
    """P(y = +1 | x); ``x`` is one row or a matrix of rows."""
    s = sigmoid(model.decision(x))
    return float(s) if np.ndim(s) == 0 else s


def predict_label(model: LogisticModel, X) -> np.ndarray:
    """Hard labels in {+1, -1}; +1 iff the score is at least 0.5."""
    return np.where(model.decision(X) >= 0.0, 1, -1)


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, p: np.ndarray, l2: float = L2) -> float:
    """Objective at ``theta = (beta..., b)`` for normalized weights ``p``."""
    beta, b = theta[:-1], theta[-1]
    z = X @ beta + b
    return float(p @ np.logaddexp(0.0, -y * z) + l2 / len(y) * beta @ beta)


def gradient(theta: np.ndarray, X: np.ndarray, y: np.ndarray, p: np.ndarray, l2: float = L2) -> np.ndarray:
    beta, b = theta[:-1], theta[-1]
    z = X @ beta + b
    r = -p * y * sigmoid(-y * z)
    g = np.empty_like(theta)
    g[:-1] = X.T @ r + 2.0 * l2 / len(y) * beta
    g[-1] = r.sum()
    return g


def fit_weighted(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray | None = None,
    l2: float = L2,
    max_iter: int = MAX_ITER,
    tol: float = GRAD_TOL,
    trace: list | None = None,
) -> LogisticModel:
    """Fit by full-batch gradient descent with backtracking (Armijo) line search.

    Stops when the gradient's max-norm drops below ``tol`` or after
    ``max_iter`` iterations.  If ``trace`` is a list the objective value of
    every iterate is appended to it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if n < 1:
        raise ValueError("need at least one row")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be non-negative with a positive sum")
    p = w / w.sum()
    reg = l2 / n

    beta = np.zeros(m)
    b = 0.0
    z = np.zeros(n)
    loss = float(p @ np.logaddexp(0.0, -y * z))
    step = 1.0
    for _ in range(max_iter):
        if trace is not None:
            trace.append(loss + reg * beta @ beta)
        r = -p * y * sigmoid(-y * z)
        g_beta = X.T @ r + 2.0 * reg * beta
        g_b = r.sum()
        if max(np.max(np.abs(g_beta), initial=0.0), abs(g_b)) < tol:
            break
        f0 = loss + reg * beta @ beta
        gg = g_beta @ g_beta + g_b * g_b
        dz = X @ g_beta + g_b
        step *= 2.0
        while True:
            nb = beta - step * g_beta
            nz = z - step * dz
            nloss = float(p @ np.logaddexp(0.0, -y * nz))
            f1 = nloss + reg * nb @ nb
            if f1 <= f0 - ARMIJO * step * gg:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if step < 1e-20:
            break
        beta, b, z, loss = nb, b - step * g_b, nz, nloss
    else:
        if trace is not None:
            trace.append(loss + reg * beta @ beta)
    return LogisticModel(beta, float(b))
