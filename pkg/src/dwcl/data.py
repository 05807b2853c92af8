"""Multi-view datasets: CSV directory format, normalisation, batching and a synthetic generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import NonFiniteError, RandomSource


class DatasetError(ValueError):
    pass


@dataclass
class MultiViewDataset:
    views: list[np.ndarray]
    labels: np.ndarray | None = None
    view_names: list[str] = field(default_factory=list)
    k: int | None = None
    name: str = "dataset"

    def __post_init__(self):
        self.views = [np.asarray(v, dtype=np.float64) for v in self.views]
        if not self.views:
            raise DatasetError("a dataset needs at least one view")
        n = self.views[0].shape[0]
        for i, v in enumerate(self.views):
            if v.ndim != 2 or v.shape[1] < 1:
                raise DatasetError(f"view {i} must be a 2-D matrix with >= 1 column")
            if v.shape[0] != n:
                raise DatasetError(f"view {i} has {v.shape[0]} rows, expected {n}")
            if not np.all(np.isfinite(v)):
                raise NonFiniteError(f"view {i} contains non-finite entries")
        if not self.view_names:
            self.view_names = [f"v{i}" for i in range(len(self.views))]
        if len(self.view_names) != len(self.views):
            raise DatasetError("one name per view required")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DatasetError(f"labels must have length {n}")
            if self.k is None:
                self.k = int(self.labels.max()) + 1
            if self.labels.min() < 0 or self.labels.max() >= self.k:
                raise DatasetError(f"labels must lie in [0, {self.k})")

    @property
    def n(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [v.shape[1] for v in self.views]

    def subset_views(self, idx) -> "MultiViewDataset":
        idx = list(idx)
        return MultiViewDataset([self.views[i] for i in idx], self.labels,
                                [self.view_names[i] for i in idx], self.k, self.name)


# -- file format ------------------------------------------------------------

def save_dataset(dataset: MultiViewDataset, path) -> Path:
    """Write ``manifest.json``, one ``view_<name>.csv`` per view and ``labels.csv``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {"name": dataset.name, "n": dataset.n, "k": dataset.k, "views": []}
    for name, X in zip(dataset.view_names, dataset.views):
        fname = f"view_{name}.csv"
        np.savetxt(path / fname, X, delimiter=",", fmt="%.17g")
        manifest["views"].append({"name": name, "file": fname, "dim": int(X.shape[1])})
    if dataset.labels is not None:
        np.savetxt(path / "labels.csv", dataset.labels, fmt="%d")
        manifest["labels_file"] = "labels.csv"
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _read_csv(file: Path, dim: int) -> np.ndarray:
    X = np.loadtxt(file, delimiter=",", dtype=np.float64, ndmin=2)
    if X.shape[1] != dim:
        raise DatasetError(f"{file.name}: expected {dim} columns, found {X.shape[1]}")
    return X


def load_dataset(path) -> MultiViewDataset:
    path = Path(path)
    mpath = path / "manifest.json"
    if not mpath.exists():
        raise DatasetError(f"no manifest.json in {path}")
    manifest = json.loads(mpath.read_text())
    views, names = [], []
    for spec in manifest["views"]:
        f = path / spec["file"]
        if not f.exists():
            raise DatasetError(f"missing view file {spec['file']} for view {spec['name']!r}")
        X = _read_csv(f, int(spec["dim"]))
        if X.shape[0] != manifest["n"]:
            raise DatasetError(f"{spec['file']}: {X.shape[0]} rows, manifest says {manifest['n']}")
        views.append(X)
        names.append(spec["name"])
    labels = None
    if manifest.get("labels_file"):
        lf = path / manifest["labels_file"]
        if not lf.exists():
            raise DatasetError(f"missing labels file {manifest['labels_file']}")
        labels = np.loadtxt(lf, dtype=np.int64, ndmin=1)
        if labels.shape[0] != manifest["n"]:
            raise DatasetError(f"labels: {labels.shape[0]} rows, manifest says {manifest['n']}")
    return MultiViewDataset(views, labels, names, manifest.get("k"), manifest.get("name", path.name))


# -- preprocessing ----------------------------------------------------------

def normalize(dataset: MultiViewDataset, method: str = "minmax") -> MultiViewDataset:
    """Per-feature, per-view scaling. Constant features become 0."""
    out = []
    for X in dataset.views:
        if method == "minmax":
            lo, hi = X.min(axis=0), X.max(axis=0)
            span = hi - lo
            Y = np.where(span > 0, (X - lo) / np.where(span > 0, span, 1.0), 0.0)
        elif method == "zscore":
            mu, sd = X.mean(axis=0), X.std(axis=0)
            Y = np.where(sd > 0, (X - mu) / np.where(sd > 0, sd, 1.0), 0.0)
        elif method in (None, "none"):
            Y = X.copy()
        else:
            raise ValueError(f"unknown normalisation {method!r}")
        out.append(Y)
    return MultiViewDataset(out, dataset.labels, list(dataset.view_names), dataset.k, dataset.name)


def batches(n_or_dataset, batch_size: int, rng: RandomSource) -> list[np.ndarray]:
    """One epoch of shuffled index blocks; a trailing block of size 1 is dropped."""
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    n = n_or_dataset.n if isinstance(n_or_dataset, MultiViewDataset) else int(n_or_dataset)
    order = rng.permutation(n)
    blocks = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    return [b for b in blocks if len(b) >= 2]


# -- synthetic data ---------------------------------------------------------

@dataclass
class ViewSpec:
    dim: int
    noise_sigma: float = 0.0
    informative: bool = True


@dataclass
class SyntheticSpec:
    n: int
    k: int
    latent_dim: int
    views: list[ViewSpec]
    cluster_separation: float = 6.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        self.views = [v if isinstance(v, ViewSpec) else ViewSpec(**v) for v in self.views]
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.n < self.k:
            raise ValueError("need at least k instances")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if not any(v.informative for v in self.views):
            raise ValueError("at least one view must be informative")
        for v in self.views:
            if v.dim < 1 or v.noise_sigma < 0:
                raise ValueError(f"invalid view spec {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        return cls(**d)

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "latent_dim": self.latent_dim,
                "views": [vars(v) for v in self.views],
                "cluster_separation": self.cluster_separation, "seed": self.seed,
                "name": self.name}


def _orthonormal(rows: int, cols: int, rng: RandomSource) -> np.ndarray:
    """rows x cols matrix with orthonormal columns (or orthonormal rows when rows < cols)."""
    if rows >= cols:
        q, r = np.linalg.qr(rng.normal((rows, cols)))
        return q * np.sign(np.diag(r))
    return _orthonormal(cols, rows, rng).T


def _cluster_means(k: int, dim: int, separation: float, rng: RandomSource) -> np.ndarray:
    if k <= dim:
        # scaled orthonormal directions: every pair of means is exactly `separation` apart
        return _orthonormal(dim, k, rng).T * (separation / np.sqrt(2.0))
    return rng.normal((k, dim)) * (separation / np.sqrt(2.0 * dim))


def generate_synthetic(spec: SyntheticSpec) -> MultiViewDataset:
    """Gaussian-mixture latent codes observed through per-view orthonormal maps plus noise.

    Weak (non-informative) views are independent Gaussian noise with the same
    overall scale as an informative view.
    """
    rng = RandomSource(spec.seed)
    means = _cluster_means(spec.k, spec.latent_dim, spec.cluster_separation, rng.derive(0))
    labels = rng.derive(1).integers(0, spec.k, size=spec.n)
    # guarantee every cluster is populated
    labels[: spec.k] = np.arange(spec.k)
    z = means[labels] + rng.derive(3).normal((spec.n, spec.latent_dim))
    scale = float(np.sqrt(z.var(axis=0).mean()))
    views, names = [], []
    for v, vs in enumerate(spec.views):
        vr = rng.derive(100 + v)
        if vs.informative:
            A = _orthonormal(vs.dim, spec.latent_dim, vr.derive(0))
            X = z @ A.T + vr.derive(1).normal((spec.n, vs.dim), scale=vs.noise_sigma)
            names.append(f"v{v}")
        else:
            X = vr.derive(1).normal((spec.n, vs.dim), scale=np.hypot(scale, vs.noise_sigma))
            names.append(f"v{v}_weak")
        views.append(X)
    return MultiViewDataset(views, labels, names, spec.k, spec.name)
