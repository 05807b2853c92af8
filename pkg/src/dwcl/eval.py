"""Clustering metrics (ACC via optimal matching, NMI) and run-report files."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .weights import normalized_mutual_information

LOSS_COLUMNS = ("iteration", "epoch", "batch", "total", "contrastive", "reconstruction")
TIMING_KEYS = ("timings",)


def hungarian_match(confusion) -> np.ndarray:
    """Permutation ``p`` maximising ``sum_k confusion[k, p[k]]``."""
    C = np.asarray(confusion)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"confusion matrix must be square, got {C.shape}")
    if np.any(C < 0):
        raise ValueError("confusion counts must be non-negative")
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = np.empty(C.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def confusion_matrix(pred, truth, k: int | None = None) -> np.ndarray:
    """Square pred x truth count matrix, zero-padded to the larger label range."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    size = max(k or 0, int(pred.max()) + 1, int(truth.max()) + 1)
    C = np.zeros((size, size), dtype=np.int64)
    np.add.at(C, (pred, truth), 1)
    return C


def accuracy(pred, truth, k: int | None = None) -> float:
    C = confusion_matrix(pred, truth, k)
    perm = hungarian_match(C)
    return float(C[np.arange(len(perm)), perm].sum() / len(np.asarray(pred)))


def nmi(pred, truth) -> float:
    return normalized_mutual_information(pred, truth)


@dataclass
class RunReport:
    mode: str
    acc: float | None
    nmi: float | None
    per_view_acc: list
    per_view_nmi: list
    best_view_timeline: list
    weights_timeline: list
    timings: dict
    config: dict = field(default_factory=dict)
    predicted_labels: list = field(default_factory=list)
    losses: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("losses")
        return d


def _write_losses(rows, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOSS_COLUMNS)
        for r in rows:
            w.writerow([r[c] for c in LOSS_COLUMNS])


def _plot_losses(rows, mode: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "dwcl"
    fig, ax = plt.subplots(figsize=(6, 3.5))
    steps = np.arange(len(rows))
    if rows:
        ax.plot(steps, [r["reconstruction"] for r in rows], label="reconstruction", lw=0.8)
        if mode != "bsv":
            ax.plot(steps, [r["contrastive"] for r in rows], label="contrastive", lw=0.8)
            ax.plot(steps, [r["total"] for r in rows], label="total", lw=0.8)
    ax.set_xlabel("batch step")
    ax.set_ylabel("loss")
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_report(report: RunReport, out_dir) -> dict[str, Path]:
    """Write ``report.json``, ``losses.csv`` and ``loss_curve.svg`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    paths = {"report": out / "report.json", "losses": out / "losses.csv",
             "plot": out / "loss_curve.svg"}
    rows = report.losses
    if report.mode == "bsv":
        rows = [dict(r, contrastive=0.0) for r in rows]
    paths["report"].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    _write_losses(rows, paths["losses"])
    _plot_losses(rows, report.mode, paths["plot"])
    return paths


def strip_timings(report: dict) -> dict:
    """Copy of a report dict without timing fields (for determinism comparisons)."""
    return {k: v for k, v in report.items() if k not in TIMING_KEYS}


def aggregate(values) -> tuple[float, float]:
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if arr.size == 0:
        return float("nan"), float("nan")
    return float(arr.mean()), float(arr.std())


SUMMARY_COLUMNS = ("arm", "mechanism", "weight_mode", "status", "runs",
                   "acc_mean", "acc_std", "nmi_mean", "nmi_std")


def write_summary(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path
