"""Group-conditioned confusion counts, equal opportunity and balanced accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fae.errors import UndefinedMetricError


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    def tpr(self) -> float:
        if self.positives == 0:
            raise UndefinedMetricError("true positive rate undefined: no positive instances")
        return self.tp / self.positives

    def tnr(self) -> float:
        if self.negatives == 0:
            raise UndefinedMetricError("true negative rate undefined: no negative instances")
        return self.tn / self.negatives


@dataclass(frozen=True)
class GroupConfusion:
    protected: Counts  # SA = s
    nonprotected: Counts  # SA = s̄

    @property
    def total(self) -> Counts:
        return self.protected + self.nonprotected

    def swapped(self) -> "GroupConfusion":
        return GroupConfusion(self.nonprotected, self.protected)

    def as_dict(self) -> dict:
        out = {}
        for tag, c in (("s", self.protected), ("ns", self.nonprotected)):
            for k in ("tp", "fp", "tn", "fn"):
                out[f"{k}_{tag}"] = getattr(c, k)
        return out


def _counts(y, p) -> Counts:
    pos, pred = y == 1, p == 1
    return Counts(
        tp=int(np.sum(pos & pred)),
        fp=int(np.sum(~pos & pred)),
        tn=int(np.sum(~pos & ~pred)),
        fn=int(np.sum(pos & ~pred)),
    )


def confusion(labels, predictions, protected) -> GroupConfusion:
    """Confusion counts per group; labels/predictions in {+1, -1}, ``protected`` boolean."""
    y = np.asarray(labels)
    p = np.asarray(predictions)
    g = np.asarray(protected, dtype=bool)
    if not (y.shape == p.shape == g.shape):
        raise ValueError("labels, predictions and group flags must have equal length")
    return GroupConfusion(_counts(y[g], p[g]), _counts(y[~g], p[~g]))


def eqop(c: GroupConfusion) -> float:
    """TPR of the non-protected group minus TPR of the protected group."""
    return c.nonprotected.tpr() - c.protected.tpr()


def balanced_accuracy(c: GroupConfusion | Counts) -> float:
    t = c.total if isinstance(c, GroupConfusion) else c
    return 0.5 * (t.tpr() + t.tnr())


def balanced_error(c: GroupConfusion | Counts) -> float:
    return 1.0 - balanced_accuracy(c)
