"""Post-hoc decision-threshold tuning for equal opportunity.

Scores are positive-class confidences E+ in [0, 1]; the default rule labels a
row positive iff E+ >= 0.5.  When the true positive rates of the two groups
differ by more than ``epsilon``, the threshold of the disadvantaged group is
lowered to the score of a misclassified positive of that group so that
enough of them flip to positive to close the gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fae.metrics import confusion, eqop

NONE, PROTECTED, NONPROTECTED = None, "s", "ns"


@dataclass(frozen=True)
class ThresholdPair:
    theta_s: float = 0.5
    theta_ns: float = 0.5
    active: str | None = NONE  # group whose threshold was lowered

    def __post_init__(self):
        if self.active not in (NONE, PROTECTED, NONPROTECTED):
            raise ValueError(f"unknown active group {self.active!r}")
        if self.active is NONE and (self.theta_s != 0.5 or self.theta_ns != 0.5):
            raise ValueError("both thresholds must be 0.5 when no group is active")
        inactive = self.theta_ns if self.active == PROTECTED else self.theta_s
        if self.active is not NONE and (inactive != 0.5 or self.theta > 0.5 or self.theta < 0.0):
            raise ValueError("inactive threshold must be 0.5 and the active one in [0, 0.5]")

    @property
    def theta(self) -> float:
        """Threshold of the active group (0.5 when none is active)."""
        return self.theta_s if self.active == PROTECTED else self.theta_ns

    @classmethod
    def for_group(cls, active: str, theta: float) -> "ThresholdPair":
        if active == PROTECTED:
            return cls(theta_s=float(theta), active=PROTECTED)
        return cls(theta_ns=float(theta), active=NONPROTECTED)

    def to_dict(self) -> dict:
        return {"theta_s": self.theta_s, "theta_ns": self.theta_ns, "active": self.active}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdPair":
        return cls(float(d["theta_s"]), float(d["theta_ns"]), d.get("active"))


def majority(scores) -> np.ndarray:
    return np.where(np.asarray(scores) >= 0.5, 1, -1)


def apply(scores, protected, pair: ThresholdPair) -> np.ndarray:
    """Label rows: active-group rows with E+ >= theta are positive, the rest use E+ >= 0.5."""
    scores = np.asarray(scores, dtype=float)
    pred = majority(scores)
    if pair.active is NONE:
        return pred
    group = np.asarray(protected, dtype=bool)
    if pair.active == NONPROTECTED:
        group = ~group
    pred[group & (scores >= pair.theta)] = 1
    return pred


def tune(scores, labels, protected, epsilon: float = 0.0) -> ThresholdPair:
    """Choose the threshold pair for the group that is discriminated on these rows.

    With TP/P the true positives/positives of the discriminated group and
    TP'/P' those of the other group, equalizing rates needs
    ``top_k = ceil(TP' * P / P' - TP)`` flips among the discriminated group's
    misclassified positives, taken in descending score order.  The cutoff
    at the ``top_k``-th of them is compared with the next higher cutoff
    (fewer flips) and whichever leaves the smaller |EQOP| wins, fewer flips
    on a tie.  All rows sharing the cutoff score flip together.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    prot = np.asarray(protected, dtype=bool)
    pred = majority(scores)
    gc = confusion(labels, pred, prot)
    gap = eqop(gc)
    if abs(gap) <= epsilon:
        return ThresholdPair()
    if gap > 0:
        active, group, mine, other = PROTECTED, prot, gc.protected, gc.nonprotected
    else:
        active, group, mine, other = NONPROTECTED, ~prot, gc.nonprotected, gc.protected
    p_a, tp_a = mine.positives, mine.tp
    p_o, tp_o = other.positives, other.tp
    top_k = -(-(tp_o * p_a) // p_o) - tp_a
    if top_k <= 0:
        return ThresholdPair()
    missed = np.sort(scores[group & (labels == 1) & (pred != 1)])[::-1]
    top_k = min(top_k, len(missed))
    if top_k == 0:
        return ThresholdPair()
    cut = missed[top_k - 1]
    flips_at_cut = int(np.sum(missed >= cut))
    higher = missed[missed > cut]
    flips_above = len(higher)

    def residual(f):
        # |EQOP| * p_a * p_o after f flips, exact in integers
        return abs(tp_o * p_a - (tp_a + f) * p_o)

    if residual(flips_above) <= residual(flips_at_cut):
        if flips_above == 0:
            return ThresholdPair()
        return ThresholdPair.for_group(active, higher.min())
    return ThresholdPair.for_group(active, cut)
