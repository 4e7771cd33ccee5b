"""Comparison methods: plain AdaBoost, EasyEnsemble, OB, SMT and SDB."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from fae import boundary
from fae.boosting import ROUNDS, adaboost_fit
from fae.dataset import EncodedDataset
from fae.metrics import confusion
from fae.pipeline import CONFIDENCE, BagEnsemble, EnsembleModel, FaeConfig, fae_from_bags, fit_bag_ensemble

EASY_BAGS = 20


def plain_adaboost(train: EncodedDataset, rounds: int = ROUNDS) -> EnsembleModel:
    """One AdaBoost model on the whole training set, majority vote."""
    m = adaboost_fit(train.X, train.y, rounds)
    return EnsembleModel("adaboost", [m], 1, encoder=train.encoder)


def easy_ensemble(
    train: EncodedDataset, n_bags: int = EASY_BAGS, rounds: int = ROUNDS, seed: int = 0
) -> EnsembleModel:
    """Bags of all positives plus an equally sized uniform sample of negatives.

    The positive class is the minority class on the datasets used here.  If
    negatives were the fewer, they would be drawn with replacement.
    """
    pos = np.flatnonzero(train.y == 1)
    neg = np.flatnonzero(train.y != 1)
    models = []
    for i in range(n_bags):
        rng = np.random.default_rng(seed + i)
        sample = rng.choice(neg, size=len(pos), replace=len(pos) > len(neg))
        idx = np.concatenate([pos, np.sort(sample)])
        models.append(adaboost_fit(train.X[idx], train.y[idx], rounds, ordinal=i))
    return EnsembleModel(
        "easyensemble", models, n_bags, encoder=train.encoder, diagnostics={"bags": n_bags}
    )


def ob(train: EncodedDataset, config: FaeConfig = FaeConfig(), bags: BagEnsemble | None = None) -> EnsembleModel:
    """The FAE pre-processing stage alone: all 2k bags, thresholds left at 0.5."""
    if bags is None:
        bags = fit_bag_ensemble(train, config)
    cfg = FaeConfig(**{**config.__dict__, "tune": False, "select": False})
    return fae_from_bags(bags, train, cfg)


def smt(
    train: EncodedDataset,
    rounds: int = ROUNDS,
    epsilon: float = 0.0,
    base: EnsembleModel | None = None,
) -> EnsembleModel:
    """Plain AdaBoost whose majority-vote threshold is tuned per group."""
    if base is None:
        base = plain_adaboost(train, rounds)
    pair = boundary.tune(base.scores(train.X), train.y, train.protected, epsilon)
    return EnsembleModel("smt", base.models, base.u, pair, encoder=train.encoder)


def _abs_eqop(labels, pred, protected) -> Fraction:
    c = confusion(labels, pred, protected)
    return abs(
        Fraction(c.nonprotected.tp, c.nonprotected.positives) - Fraction(c.protected.tp, c.protected.positives)
    )


def best_shift(scores, labels, protected, epsilon: float = 0.0) -> boundary.ThresholdPair:
    """Exhaustive scan of cutoffs for the discriminated group minimizing |EQOP|.

    Candidates are the distinct scores of the group's misclassified
    positives plus the unshifted 0.5; ties go to the higher cutoff.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    protected = np.asarray(protected, dtype=bool)
    base = boundary.majority(scores)
    c = confusion(labels, base, protected)
    gap = c.nonprotected.tpr() - c.protected.tpr()
    if abs(gap) <= epsilon:
        return boundary.ThresholdPair()
    active = boundary.PROTECTED if gap > 0 else boundary.NONPROTECTED
    group = protected if gap > 0 else ~protected
    cands = np.unique(scores[group & (labels == 1) & (base != 1)])[::-1]
    best, best_val = boundary.ThresholdPair(), _abs_eqop(labels, base, protected)
    for t in cands:
        pair = boundary.ThresholdPair.for_group(active, t)
        val = _abs_eqop(labels, boundary.apply(scores, protected, pair), protected)
        if val < best_val:
            best, best_val = pair, val
    return best


def sdb(
    train: EncodedDataset,
    rounds: int = ROUNDS,
    epsilon: float = 0.0,
    base: EnsembleModel | None = None,
) -> EnsembleModel:
    """AdaBoost scored by normalized confidence, with a scanned per-group shift."""
    if base is None:
        base = plain_adaboost(train, rounds)
    model = EnsembleModel("sdb", base.models, base.u, space=CONFIDENCE, encoder=train.encoder)
    model.pair = best_shift(model.scores(train.X), train.y, train.protected, epsilon)
    return model
