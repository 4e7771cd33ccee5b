"""K-means (Lloyd) with k-means++ seeding and elbow-based choice of the cluster count.

The clusterings define the strata used when sampling the majority groups
into bags.  Points are processed in a canonical (lexicographic) row order so
that the result does not depend on how the caller ordered its rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_ITER = 100
N_INIT = 5


@dataclass
class Clustering:
    n_clusters: int
    labels: np.ndarray  # cluster id per row
    centers: np.ndarray  # n_clusters x m
    wcss: float
    history: list[float] = field(default_factory=list)  # WCSS after each Lloyd iteration
    curve: dict[int, float] = field(default_factory=dict)  # elbow diagnostics

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)


def within_cluster_ss(points: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    diff = points - centers[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def count_distinct(points: np.ndarray) -> int:
    if len(points) == 0:
        return 0
    return len(np.unique(points, axis=0))


def _sq_dists(points, sq_norms, centers):
    d = sq_norms[:, None] - 2.0 * points @ centers.T + np.einsum("ij,ij->i", centers, centers)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _plusplus(points, sq_norms, c, rng):
    n = len(points)
    centers = np.empty((c, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = _sq_dists(points, sq_norms, centers[:1])[:, 0]
    for j in range(1, c):
        total = closest.sum()
        if total <= 0:
            raise ValueError("not enough distinct points for k-means++ seeding")
        i = rng.choice(n, p=closest / total)
        centers[j] = points[i]
        closest = np.minimum(closest, _sq_dists(points, sq_norms, centers[j : j + 1])[:, 0])
    return centers


def _repair_empty(points, labels, dists, centers, counts):
    # move the point farthest from its centroid into each empty cluster
    for j in np.flatnonzero(counts == 0):
        own = dists[np.arange(len(points)), labels].copy()
        own[counts[labels] <= 1] = -1.0
        i = int(np.argmax(own))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        centers[j] = points[i]
        dists[i, j] = 0.0


def _means(points, labels, c):
    onehot = np.zeros((c, len(points)))
    onehot[labels, np.arange(len(points))] = 1.0
    return (onehot @ points) / onehot.sum(axis=1)[:, None]


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = MAX_ITER):
    """Run Lloyd iterations from ``centers``; returns (labels, centers, history)."""
    c = len(centers)
    centers = centers.copy()
    sq_norms = np.einsum("ij,ij->i", points, points)
    total_sq = float(sq_norms.sum())
    labels = None
    history = []
    for _ in range(max_iter):
        dists = _sq_dists(points, sq_norms, centers)
        new = np.argmin(dists, axis=1)
        counts = np.bincount(new, minlength=c)
        if np.any(counts == 0):
            _repair_empty(points, new, dists, centers, counts)
        centers = _means(points, new, c)
        # sum |x - mu|^2 = sum |x|^2 - sum_c n_c |mu_c|^2
        sizes = np.bincount(new, minlength=c)
        history.append(float(total_sq - sizes @ np.einsum("ij,ij->i", centers, centers)))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    return labels, centers, history


def kmeans(
    points: np.ndarray,
    c: int,
    seed: int = 0,
    n_init: int = N_INIT,
    max_iter: int = MAX_ITER,
) -> Clustering:
    """Best-of-``n_init`` k-means++/Lloyd clustering into ``c`` clusters."""
    points = np.asarray(points, dtype=float)
    if c < 1:
        raise ValueError("number of clusters must be at least 1")
    distinct = count_distinct(points)
    if c > distinct:
        raise ValueError(f"c={c} exceeds the number of distinct points ({distinct})")
    order = np.lexsort(points.T[::-1]) if points.shape[1] else np.arange(len(points))
    canon = points[order]
    sq_norms = np.einsum("ij,ij->i", canon, canon)
    rng = np.random.default_rng([seed, c])
    best = None
    for _ in range(n_init):
        init = _plusplus(canon, sq_norms, c, rng)
        labels, centers, history = lloyd(canon, init, max_iter)
        wcss = history[-1]
        if best is None or wcss < best[3]:
            best = (labels, centers, history, wcss)
    labels, centers, history, wcss = best
    out = np.empty_like(labels)
    out[order] = labels
    return Clustering(c, out, centers, within_cluster_ss(points, out, centers), history)


def elbow_index(cs, wcss) -> int:
    """Index of the curve point farthest from the chord joining its endpoints.

    Both axes are rescaled to [0, 1] first so that the cluster count and the
    WCSS are comparable.
    """
    cs = np.asarray(cs, dtype=float)
    w = np.asarray(wcss, dtype=float)
    if len(cs) <= 2:
        return 0
    x = (cs - cs[0]) / (cs[-1] - cs[0])
    span = w.max() - w.min()
    if span <= 0:
        return 0
    y = (w - w.min()) / span
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    dist = np.abs(dy * (x - x[0]) - dx * (y - y[0])) / np.hypot(dx, dy)
    return int(np.argmax(dist))


def elbow_select(
    points: np.ndarray,
    c_min: int = 2,
    c_max: int = 25,
    seed: int = 0,
    n_init: int = N_INIT,
    max_iter: int = MAX_ITER,
) -> Clustering:
    """Fit k-means for every c in [c_min, c_max] and keep the elbow of the WCSS curve.

    With fewer distinct points than ``c_min`` the clustering uses one cluster
    per distinct point instead of failing.
    """
    points = np.asarray(points, dtype=float)
    if c_min < 1 or c_max < c_min:
        raise ValueError("invalid cluster range")
    distinct = count_distinct(points)
    if distinct == 0:
        raise ValueError("cannot cluster an empty point set")
    if distinct < c_min:
        fit = kmeans(points, distinct, seed, n_init, max_iter)
        fit.curve = {distinct: fit.wcss}
        return fit
    cs = list(range(c_min, min(c_max, distinct) + 1))
    fits = [kmeans(points, c, seed, n_init, max_iter) for c in cs]
    curve = [f.wcss for f in fits]
    chosen = fits[elbow_index(cs, curve)]
    chosen.curve = dict(zip(cs, curve))
    return chosen
