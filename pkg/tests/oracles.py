"""Independent reference computations used by the unit and acceptance tests.

These use plain Python loops and exact fractions so that they share no code
path with the package under test.
"""

from fractions import Fraction

import numpy as np


def tpr_gap(scores, labels, protected, active=None, theta=0.5):
    """Exact TPR(non-protected) - TPR(protected) when the ``active`` group uses ``theta``."""
    tp = {True: 0, False: 0}
    pos = {True: 0, False: 0}
    for s, y, g in zip(scores, labels, protected):
        g = bool(g)
        if y != 1:
            continue
        pos[g] += 1
        cut = theta if (active == "s" and g) or (active == "ns" and not g) else 0.5
        if s >= 0.5 or s >= cut:
            tp[g] += 1
    return Fraction(tp[False], pos[False]) - Fraction(tp[True], pos[True])


def brute_force_threshold(scores, labels, protected):
    """Best (|EQOP|, flips, theta, active) over the candidate cutoffs of the discriminated group.

    Candidates are 0.5 (no shift) and every distinct score of a misclassified
    positive of that group.  Ties in |EQOP| go to fewer flips.
    """
    gap = tpr_gap(scores, labels, protected)
    if gap == 0:
        return Fraction(0), 0, 0.5, None
    active = "s" if gap > 0 else "ns"
    mine = [bool(g) if active == "s" else not bool(g) for g in protected]
    missed = sorted({s for s, y, m in zip(scores, labels, mine) if m and y == 1 and s < 0.5}, reverse=True)
    best = (abs(gap), 0, 0.5, None)
    for t in missed:
        flips = sum(1 for s, y, m in zip(scores, labels, mine) if m and y == 1 and t <= s < 0.5)
        val = abs(tpr_gap(scores, labels, protected, active, t))
        if (val, flips) < best[:2]:
            best = (val, flips, t, active)
    return best


def exhaustive_selection(models, X, labels, protected, k, tune, objective):
    """Objective of every prefix u in [k, 2k], each scored from scratch."""
    out = {}
    for u in range(k, 2 * k + 1):
        pos = np.zeros(len(X))
        tot = 0.0
        for mdl in models[:u]:
            for a, h in zip(mdl.alphas, mdl.learners):
                vote = (X @ h.weights + h.bias) >= 0
                pos += a * vote
                tot += a
        scores = pos / tot
        out[u] = objective(scores, labels, protected, tune(scores, labels, protected))
    return out


def random_threshold_instance(rng, n_max=50, distinct=True):
    """Scores, labels and group flags with positives in both groups."""
    while True:
        n = int(rng.integers(6, n_max + 1))
        if distinct:
            scores = rng.permutation(np.arange(1, 2 * n + 1))[:n] / (2 * n + 1)
        else:
            scores = rng.integers(0, 11, n) / 10
        labels = np.where(rng.random(n) < rng.uniform(0.3, 0.7), 1, -1)
        protected = rng.random(n) < rng.uniform(0.2, 0.6)
        if np.any((labels == 1) & protected) and np.any((labels == 1) & ~protected):
            return scores, labels, protected
