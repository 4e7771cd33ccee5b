"""The FAE training and prediction pipeline.

Training partitions the rows into s+, s-, s̄+, s̄-, clusters the three
groups other than s+ once, draws 2k balanced bags by stratified cluster
sampling, boosts one AdaBoost model per bag, then picks the shortest
prefix u in [k, 2k] whose re-tuned thresholds minimize balanced error plus
twice |EQOP| on the training rows.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from fae import boundary
from fae.boosting import ROUNDS, AdaBoostModel, EnsembleScore, adaboost_fit, ensemble_score
from fae.clustering import N_INIT, elbow_select
from fae.dataset import EncodedDataset, Encoder, Schema, partition_groups
from fae.sampling import SAMPLED_GROUPS, build_bags, compute_k, coverage
from fae.selection import select

FORMAT_VERSION = 1
POSITIVE, CONFIDENCE = "positive", "confidence"


@dataclass(frozen=True)
class FaeConfig:
    epsilon: float = 0.0
    rounds: int = ROUNDS
    c_min: int = 2
    c_max: int = 25
    seed: int = 0
    include_sa: bool = True
    n_init: int = N_INIT
    tune: bool = True
    select: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if not 1 <= self.c_min <= self.c_max:
            raise ValueError("invalid clustering range")


@dataclass
class EnsembleModel:
    """A list of AdaBoost models, the prefix length in use and group thresholds.

    Every method (FAE, its ablations and the baselines) is represented this
    way.  ``space`` says which per-row score the thresholds apply to:
    ``positive`` is the alpha-normalized positive vote mass; ``confidence``
    is the margin over total alpha, rescaled from [-1, 1] to [0, 1].
    """

    method: str
    models: list[AdaBoostModel]
    u: int
    pair: boundary.ThresholdPair = field(default_factory=boundary.ThresholdPair)
    k: int | None = None
    space: str = POSITIVE
    diagnostics: dict = field(default_factory=dict)
    encoder: Encoder | None = None
    schema: Schema | None = None

    def __post_init__(self):
        if not 1 <= self.u <= len(self.models):
            raise ValueError(f"prefix length {self.u} outside [1, {len(self.models)}]")
        if self.k is not None and not self.k <= self.u <= 2 * self.k:
            raise ValueError(f"prefix length {self.u} outside [k, 2k] = [{self.k}, {2 * self.k}]")

    def ensemble(self, X) -> EnsembleScore:
        return ensemble_score(self.models, self.u, X)

    def scores(self, X) -> np.ndarray:
        return space_scores(self.ensemble(X), self.space)

    def predict(self, X, protected) -> np.ndarray:
        return boundary.apply(self.scores(X), protected, self.pair)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "method": self.method,
            "k": self.k,
            "u": self.u,
            "space": self.space,
            "thresholds": self.pair.to_dict(),
            "diagnostics": self.diagnostics,
            "encoder": self.encoder.to_dict() if self.encoder else None,
            "schema": self.schema.to_dict() if self.schema else None,
            "bags": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        if d.get("format") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format')!r}")
        return cls(
            method=d["method"],
            models=[AdaBoostModel.from_dict(b) for b in d["bags"]],
            u=int(d["u"]),
            pair=boundary.ThresholdPair.from_dict(d["thresholds"]),
            k=d.get("k"),
            space=d.get("space", POSITIVE),
            diagnostics=d.get("diagnostics") or {},
            encoder=Encoder.from_dict(d["encoder"]) if d.get("encoder") else None,
            schema=Schema.from_dict(d["schema"]) if d.get("schema") else None,
        )

    def dumps(self) -> str:
        # repr-based float formatting round-trips exactly
        return json.dumps(self.to_dict(), indent=1, allow_nan=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "EnsembleModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def space_scores(score: EnsembleScore, space: str) -> np.ndarray:
    if space == POSITIVE:
        return score.positive
    if space == CONFIDENCE:
        return (score.confidence + 1.0) / 2.0
    raise ValueError(f"unknown score space {space!r}")


@dataclass
class BagEnsemble:
    """Output of the pre-processing stage: 2k boosted bags plus diagnostics."""

    models: list[AdaBoostModel]
    k: int
    diagnostics: dict


def fit_bag_ensemble(train: EncodedDataset, config: FaeConfig = FaeConfig()) -> BagEnsemble:
    part = partition_groups(train)
    k = compute_k(part)
    groups = part.as_dict()
    clusterings = {
        g: elbow_select(train.X[groups[g]], config.c_min, config.c_max, config.seed, config.n_init)
        for g in SAMPLED_GROUPS
    }
    bags = build_bags(part, clusterings, 2 * k, config.seed)
    models = [
        adaboost_fit(train.X[b.indices], train.y[b.indices], config.rounds, ordinal=b.ordinal)
        for b in bags
    ]
    diagnostics = {
        "group_sizes": dict(zip(("s_pos", "s_neg", "ns_pos", "ns_neg"), part.sizes)),
        "k": k,
        "clusters": {g: clusterings[g].n_clusters for g in SAMPLED_GROUPS},
        "wcss_curves": {g: {str(c): w for c, w in clusterings[g].curve.items()} for g in SAMPLED_GROUPS},
        "bag_counts": bags[0].counts,
        "replaced_groups": sorted({g for b in bags for g in b.replaced}),
        "coverage": {g: coverage(bags, groups[g]) for g in SAMPLED_GROUPS},
        "boosting_rounds": [len(m.alphas) for m in models],
    }
    return BagEnsemble(models, k, diagnostics)


def fae_from_bags(ens: BagEnsemble, train: EncodedDataset, config: FaeConfig = FaeConfig()) -> EnsembleModel:
    """Post-processing stage: threshold tuning and shortest-hypothesis selection."""
    if config.select:
        sel = select(ens.models, train.X, train.y, train.protected, config.epsilon, ens.k, tune=config.tune)
        u, pair, curve = sel.u, sel.pair, sel.objectives
    else:
        u = 2 * ens.k
        pair = boundary.ThresholdPair()
        if config.tune:
            pair = boundary.tune(ensemble_score(ens.models, u, train.X).positive, train.y, train.protected, config.epsilon)
        curve = {}
    diagnostics = dict(ens.diagnostics, u=u, objective_curve={str(k): v for k, v in curve.items()})
    method = "fae" if (config.tune and config.select) else ("ob" if not config.tune else "fae-noselect")
    return EnsembleModel(method, ens.models, u, pair, ens.k, diagnostics=diagnostics, encoder=train.encoder)


def train(train: EncodedDataset, config: FaeConfig = FaeConfig()) -> EnsembleModel:
    return fae_from_bags(fit_bag_ensemble(train, config), train, config)


def predict(model: EnsembleModel, X, protected) -> np.ndarray:
    """Labels in {+1, -1} for encoded rows; never looks at class labels."""
    return model.predict(X, protected)


def config_dict(config: FaeConfig) -> dict:
    return asdict(config)
