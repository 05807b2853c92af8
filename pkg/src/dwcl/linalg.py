"""Dense matrix helpers, distance kernels and the seeded random source."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform


class NonFiniteError(ValueError):
    """Raised when NaN or Inf shows up where finite values are required."""


class DegenerateRowError(ValueError):
    """Raised when a zero-norm row makes a cosine similarity undefined."""


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a finite 2-D float64 array, or raise."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


class RandomSource:
    """Explicit-state random generator determined by its seed alone.

    Child sources are derived from ``(seed, *keys)`` so independent consumers
    (views, k-means restarts, batch shuffles) never share a stream.
    """

    def __init__(self, seed: int = 0, _keys: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in _keys)
        seq = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *self.keys])
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def derive(self, *keys: int) -> "RandomSource":
        return RandomSource(self.seed, self.keys + tuple(keys))

    def normal(self, size, scale: float = 1.0) -> np.ndarray:
        return self.generator.normal(0.0, scale, size=size)

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        return self.generator.uniform(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def integers(self, low: int, high: int | None = None, size=None):
        return self.generator.integers(low, high, size=size)

    def choice(self, n: int, size=None, replace: bool = True, p=None):
        return self.generator.choice(n, size=size, replace=replace, p=p)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, keys={self.keys})"


def pairwise_distances(X) -> np.ndarray:
    """Euclidean distance matrix between the rows of ``X``.

    Computed from coordinate differences (not the Gram identity), so the
    result is exactly symmetric with an exactly zero diagonal.
    """
    X = as_matrix(X, "X")
    if X.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(X, metric="euclidean"))


def row_norms(X: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", X, X))


def cosine_similarity(A, B) -> np.ndarray:
    """Matrix of cosine similarities between rows of ``A`` and rows of ``B``."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"column mismatch: {A.shape[1]} vs {B.shape[1]}")
    na, nb = row_norms(A), row_norms(B)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise DegenerateRowError("zero-norm row in cosine similarity")
    S = (A / na[:, None]) @ (B / nb[:, None]).T
    return np.clip(S, -1.0, 1.0)
