"""Discrete AdaBoost over weighted logistic regression, and ensemble-of-ensembles scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fae.weak_learner import LogisticModel, fit_weighted, predict_label

ROUNDS = 25
ALPHA_CAP = 10.0


@dataclass
class AdaBoostModel:
    alphas: list[float]
    learners: list[LogisticModel]
    ordinal: int = 0
    errors: list[float] = field(default_factory=list)  # weighted error of each kept round

    def __post_init__(self):
        if len(self.alphas) != len(self.learners) or not self.alphas:
            raise ValueError("an AdaBoost model needs at least one (alpha, learner) pair")
        if not all(math.isfinite(a) and a > 0 for a in self.alphas):
            raise ValueError("AdaBoost weights must be finite and positive")

    @property
    def total_alpha(self) -> float:
        return float(sum(self.alphas))

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Rows x learners matrix of hard ±1 predictions."""
        return np.column_stack([predict_label(h, X) for h in self.learners])

    def margin(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X) @ np.asarray(self.alphas)

    def positive_mass(self, X: np.ndarray) -> np.ndarray:
        """Sum of alphas of learners voting +1, per row."""
        return (self.votes(X) > 0) @ np.asarray(self.alphas)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.margin(X) >= 0.0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "ordinal": self.ordinal,
            "rounds": [
                {"alpha": float(a), "error": float(e), **h.to_dict()}
                for a, e, h in zip(self.alphas, self.errors or [float("nan")] * len(self.alphas), self.learners)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdaBoostModel":
        rounds = d["rounds"]
        return cls(
            alphas=[float(r["alpha"]) for r in rounds],
            learners=[LogisticModel.from_dict(r) for r in rounds],
            ordinal=int(d.get("ordinal", 0)),
            errors=[float(r.get("error", float("nan"))) for r in rounds],
        )


def adaboost_fit(
    X: np.ndarray,
    y: np.ndarray,
    rounds: int = ROUNDS,
    ordinal: int = 0,
    learner=fit_weighted,
    alpha_cap: float = ALPHA_CAP,
    trace: list | None = None,
) -> AdaBoostModel:
    """Train discrete AdaBoost for at most ``rounds`` rounds.

    A round whose weighted error is at least 0.5 is discarded and boosting
    stops; a round with zero error is kept with ``alpha_cap`` and boosting
    stops.  ``learner(X, y, w)`` must return an object usable with
    ``predict_label``.  When ``trace`` is a list, the sample distribution in
    force at every round (and the final one) is appended to it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValueError("AdaBoost needs both classes in its training data")
    n = len(y)
    dist = np.full(n, 1.0 / n)
    alphas, learners, errors = [], [], []
    for _ in range(rounds):
        if trace is not None:
            trace.append(dist.copy())
        h = learner(X, y, dist)
        wrong = predict_label(h, X) != y
        eps = float(dist[wrong].sum())
        if eps >= 0.5:
            break
        if eps <= 0.0:
            alphas.append(alpha_cap)
            learners.append(h)
            errors.append(0.0)
            break
        alpha = min(0.5 * math.log((1.0 - eps) / eps), alpha_cap)
        alphas.append(alpha)
        learners.append(h)
        errors.append(eps)
        dist = dist * np.exp(np.where(wrong, alpha, -alpha))
        dist /= dist.sum()
    else:
        if trace is not None:
            trace.append(dist.copy())
    if not alphas:
        raise ValueError("first weak learner is no better than chance (weighted error >= 0.5)")
    return AdaBoostModel(alphas, learners, ordinal, errors)


@dataclass(frozen=True)
class EnsembleScore:
    margin: np.ndarray  # sum of alpha * h over the prefix
    positive: np.ndarray  # alpha-normalized mass of +1 votes, in [0, 1]
    total_alpha: float

    @property
    def confidence(self) -> np.ndarray:
        """Margin divided by total alpha, in [-1, 1]."""
        return self.margin / self.total_alpha

    def majority(self) -> np.ndarray:
        return np.where(self.positive >= 0.5, 1, -1)


def ensemble_score(models: list[AdaBoostModel], u: int, X: np.ndarray) -> EnsembleScore:
    """Score rows with the first ``u`` AdaBoost models."""
    if not 1 <= u <= len(models):
        raise ValueError(f"prefix length {u} outside [1, {len(models)}]")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    margin = np.zeros(len(X))
    pos = np.zeros(len(X))
    total = 0.0
    for mdl in models[:u]:
        v = mdl.votes(X)
        a = np.asarray(mdl.alphas)
        margin += v @ a
        pos += (v > 0) @ a
        total += a.sum()
    return EnsembleScore(margin, pos / total, total)


class PrefixScorer:
    """Incremental scores for every prefix length of a model list on fixed rows."""

    def __init__(self, models: list[AdaBoostModel], X: np.ndarray):
        X = np.asarray(X, dtype=float)
        self.margins = [m.margin(X) for m in models]
        self.masses = [m.positive_mass(X) for m in models]
        self.totals = [m.total_alpha for m in models]

    def scores(self, u_min: int = 1):
        """Yield ``(u, EnsembleScore)`` for u = u_min .. len(models)."""
        margin = np.zeros_like(self.margins[0])
        pos = np.zeros_like(self.masses[0])
        total = 0.0
        for i, (mg, ms, t) in enumerate(zip(self.margins, self.masses, self.totals), start=1):
            margin = margin + mg
            pos = pos + ms
            total += t
            if i >= u_min:
                yield i, EnsembleScore(margin, pos / total, total)
