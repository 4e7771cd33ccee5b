"""Bag-count estimation and balanced bag construction by stratified cluster sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fae.clustering import Clustering
from fae.dataset import GroupPartition
from fae.errors import EmptyGroupError

SAMPLED_GROUPS = ("s_neg", "ns_pos", "ns_neg")


def compute_k(sizes) -> int:
    """Number of bags: ceil(largest other group / |s+|) + 1.

    ``sizes`` is a GroupPartition or a tuple (|s+|, |s-|, |s̄+|, |s̄-|).
    """
    if isinstance(sizes, GroupPartition):
        sizes = sizes.sizes
    s_pos, s_neg, ns_pos, ns_neg = (int(v) for v in sizes)
    if s_pos < 1:
        raise EmptyGroupError("empty group s+")
    largest = max(s_neg, ns_pos, ns_neg)
    return -(-largest // s_pos) + 1


def largest_remainder(sizes, target: int) -> np.ndarray:
    """Split ``target`` over strata proportionally to ``sizes``, summing exactly to ``target``.

    Quotas are floored and the leftover units go to the largest fractional
    parts; equal remainders favour the lower stratum index.  Integer
    arithmetic keeps the rounding exact.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    if total <= 0:
        raise ValueError("strata are empty")
    scaled = sizes * int(target)
    alloc = scaled // total
    rem = scaled % total
    extra = int(target) - int(alloc.sum())
    if extra:
        order = sorted(range(len(sizes)), key=lambda j: (-rem[j], j))
        alloc[order[:extra]] += 1
    return alloc


def stratified_sample(clustering: Clustering, target: int, seed) -> np.ndarray:
    """Sample ``target`` row positions with cluster-proportional allocation.

    Returns positions into the clustered point set.  Within a cluster rows
    are drawn without replacement; when the allocation exceeds the cluster
    (only possible if ``target`` exceeds the group size) the whole cluster
    is taken and the shortfall drawn with replacement.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    labels = clustering.labels
    members = [np.flatnonzero(labels == j) for j in range(clustering.n_clusters)]
    alloc = largest_remainder([len(m) for m in members], target)
    picked = []
    for m, a in zip(members, alloc):
        if a <= len(m):
            picked.append(rng.choice(m, size=int(a), replace=False))
        else:
            picked.append(m)
            picked.append(rng.choice(m, size=int(a) - len(m), replace=True))
    return np.sort(np.concatenate(picked)) if picked else np.zeros(0, dtype=int)


@dataclass(frozen=True)
class Bag:
    ordinal: int
    indices: np.ndarray  # row indices into the training set (may repeat under replacement)
    counts: dict[str, int]
    replaced: tuple[str, ...] = ()  # groups sampled with replacement

    @property
    def size(self) -> int:
        return len(self.indices)


def build_bags(
    partition: GroupPartition,
    clusterings: dict[str, Clustering],
    n_bags: int,
    seed: int = 0,
) -> list[Bag]:
    """Build ``n_bags`` bags, each all of s+ plus |s+| stratified draws from s-, s̄+ and s̄-.

    ``clusterings`` maps ``s_neg``/``ns_pos``/``ns_neg`` to clusterings of
    the corresponding rows (in partition order).  Bag ``i`` uses seed
    ``seed + i``.
    """
    groups = partition.as_dict()
    target = len(partition.s_pos)
    if target == 0:
        raise EmptyGroupError("empty group s+")
    bags = []
    for i in range(n_bags):
        rng = np.random.default_rng(seed + i)
        parts = [partition.s_pos]
        counts = {"s_pos": target}
        replaced = []
        for g in SAMPLED_GROUPS:
            rows = groups[g]
            pos = stratified_sample(clusterings[g], target, rng)
            parts.append(rows[pos])
            counts[g] = len(pos)
            if target > len(rows):
                replaced.append(g)
        bags.append(Bag(i, np.concatenate(parts), counts, tuple(replaced)))
    return bags


def coverage(bags: list[Bag], rows: np.ndarray) -> float:
    """Fraction of ``rows`` that appear in at least one bag."""
    if len(rows) == 0:
        return 1.0
    seen = np.zeros(0, dtype=int)
    if bags:
        seen = np.unique(np.concatenate([b.indices for b in bags]))
    return float(np.isin(rows, seen).mean())
