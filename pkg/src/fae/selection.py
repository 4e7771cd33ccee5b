"""Shortest-hypothesis selection over prefixes of the bag-ordered AdaBoost models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fae import boundary
from fae.boosting import AdaBoostModel, PrefixScorer
from fae.metrics import balanced_error, confusion, eqop

FAIRNESS_WEIGHT = 2.0


@dataclass
class Selection:
    u: int
    pair: boundary.ThresholdPair
    objectives: dict[int, float] = field(default_factory=dict)


def objective(scores, labels, protected, pair) -> float:
    """Balanced error plus twice the absolute EQOP of the thresholded predictions."""
    pred = boundary.apply(scores, protected, pair)
    c = confusion(labels, pred, protected)
    return balanced_error(c) + FAIRNESS_WEIGHT * abs(eqop(c))


def argmin_shortest(objectives: dict[int, float]) -> int:
    """Smallest key among those with the minimal objective."""
    best = min(objectives.values())
    return min(u for u, v in objectives.items() if v == best)


def select(
    models: list[AdaBoostModel],
    X: np.ndarray,
    labels,
    protected,
    epsilon: float = 0.0,
    k: int | None = None,
    tune: bool = True,
) -> Selection:
    """Pick the prefix length u in [k, 2k] minimizing the tuned objective on (X, labels).

    ``k`` defaults to ``len(models) // 2``.  For every candidate prefix the
    thresholds are re-tuned before the objective is evaluated.
    """
    if k is None:
        k = len(models) // 2
    if k < 1 or len(models) < k:
        raise ValueError(f"need at least k={k} models, got {len(models)}")
    labels = np.asarray(labels)
    protected = np.asarray(protected, dtype=bool)
    objectives, pairs = {}, {}
    for u, score in PrefixScorer(models, X).scores(u_min=k):
        if u > 2 * k:
            break
        pair = boundary.tune(score.positive, labels, protected, epsilon) if tune else boundary.ThresholdPair()
        pairs[u] = pair
        objectives[u] = objective(score.positive, labels, protected, pair)
    u = argmin_shortest(objectives)
    return Selection(u, pairs[u], objectives)
