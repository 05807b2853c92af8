"""k-means labelling, silhouette scoring and best-view selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import RandomSource, as_matrix, pairwise_distances

log = logging.getLogger(__name__)

SILHOUETTE_FULL_LIMIT = 4096
SILHOUETTE_SUBSAMPLE = 2048


@dataclass
class KMeansConfig:
    k: int
    n_init: int = 10
    max_iters: int = 300
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.n_init < 1 or self.max_iters < 1:
            raise ValueError("n_init and max_iters must be >= 1")


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int = 0
    empty_repairs: int = 0


@dataclass
class SilhouetteReport:
    per_instance: np.ndarray
    mean: float
    subsample_indices: np.ndarray | None = field(default=None)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeans_pp(X: np.ndarray, k: int, rng: RandomSource) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    closest = _sq_dists(X, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centers.append(X[idx])
        closest = np.minimum(closest, _sq_dists(X, X[idx][None, :])[:, 0])
    return np.array(centers)


def _lloyd(X: np.ndarray, centroids: np.ndarray, config: KMeansConfig) -> KMeansResult:
    k = config.k
    repairs = 0
    n_iter = 0
    for n_iter in range(1, config.max_iters + 1):
        d = _sq_dists(X, centroids)
        labels = d.argmin(axis=1)
        new = np.empty_like(centroids)
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j] == 0:
                # reseed an empty cluster at the point farthest from its centroid
                far = d[np.arange(len(X)), labels].argmax()
                new[j] = X[far]
                d[far, :] = 0.0
                repairs += 1
            else:
                new[j] = X[labels == j].mean(axis=0)
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift <= config.tol:
            break
    d = _sq_dists(X, centroids)
    labels = d.argmin(axis=1)
    # exact inertia from coordinate differences
    inertia = float(((X - centroids[labels]) ** 2).sum())
    return KMeansResult(labels, centroids, inertia, n_iter, repairs)


def kmeans(X, config: KMeansConfig) -> KMeansResult:
    """Best-inertia k-means over ``n_init`` k-means++ restarts.

    Labels are the nearest returned centroid in squared Euclidean distance,
    so re-assigning against ``centroids`` changes nothing.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if config.k > n:
        raise ValueError(f"k={config.k} exceeds number of instances {n}")
    root = RandomSource(config.seed)
    best = None
    for r in range(config.n_init):
        init = _kmeans_pp(X, config.k, root.derive(r))
        res = _lloyd(X, init, config)
        if best is None or res.inertia < best.inertia:
            best = res
    if best.empty_repairs:
        log.debug("k-means repaired %d empty clusters", best.empty_repairs)
    return best


def _silhouette_from_distances(D: np.ndarray, labels: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(labels, return_inverse=True)
    n, m = len(labels), len(uniq)
    onehot = np.zeros((n, m))
    onehot[np.arange(n), inv] = 1.0
    sizes = onehot.sum(axis=0)
    sums = D @ onehot  # n x m: total distance from i to each cluster
    own = sums[np.arange(n), inv]
    own_size = sizes[inv]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(own_size > 1, own / np.maximum(own_size - 1, 1), 0.0)
        means = sums / sizes[None, :]
    means[np.arange(n), inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    si = np.zeros(n)
    ok = (own_size > 1) & (denom > 0)
    si[ok] = (b[ok] - a[ok]) / denom[ok]
    return si


def silhouette(X, labels, rng: RandomSource | None = None,
               full_limit: int = SILHOUETTE_FULL_LIMIT,
               subsample: int = SILHOUETTE_SUBSAMPLE) -> SilhouetteReport:
    """Per-instance silhouette coefficients and their mean.

    a(i) is the mean distance to the other members of i's cluster, b(i) the
    smallest mean distance to another cluster. Singletons and a == b == 0
    score 0. Above ``full_limit`` instances a uniform subsample is scored.
    """
    X = as_matrix(X, "X")
    labels = np.asarray(labels)
    if labels.shape != (X.shape[0],):
        raise ValueError("labels must have one entry per row")
    if len(np.unique(labels)) < 2:
        raise ValueError("silhouette needs at least 2 non-empty clusters")
    idx = None
    if X.shape[0] > full_limit:
        rng = rng or RandomSource(0)
        idx = np.sort(rng.choice(X.shape[0], size=subsample, replace=False))
        X, labels = X[idx], labels[idx]
        if len(np.unique(labels)) < 2:
            raise ValueError("subsample contains fewer than 2 clusters")
    si = _silhouette_from_distances(pairwise_distances(X), labels)
    return SilhouetteReport(si, float(si.mean()), idx)


def select_best_view(si_means) -> int:
    """Index of the highest mean silhouette; ties go to the lowest index."""
    si = np.asarray(si_means, dtype=np.float64)
    if si.ndim != 1 or len(si) < 1:
        raise ValueError("need a 1-D list of silhouette means")
    return int(np.argmax(si))
