"""Wall-clock scaling of the per-epoch contrastive cost under both cross-view mechanisms."""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np

from .linalg import RandomSource
from .loss import info_nce
from .weights import BEST_OTHER, MECHANISMS, plan_pairs


def contrastive_epoch(hhat_batches, pairs, tau: float = 0.5) -> float:
    """Evaluate InfoNCE value and gradients for every pair on every batch; returns summed loss."""
    total = 0.0
    for views in hhat_batches:
        grads = [np.zeros_like(h) for h in views]
        for i, j in pairs:
            loss, ga, gb = info_nce(views[i], views[j], tau)
            grads[i] += ga
            grads[j] += gb
            total += loss
    return total


def fit_exponent(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


def run_bench(view_counts=(4, 8, 16, 32), batch: int = 128, dim: int = 64, n_batches: int = 4,
              repeats: int = 3, seed: int = 0, tau: float = 0.5):
    """Time one contrastive epoch per (V, mechanism); keeps the fastest of ``repeats``.

    Returns ``(rows, exponents)`` where exponents maps mechanism to the fitted
    log-log growth exponent of time in V.
    """
    view_counts = sorted(int(v) for v in view_counts)
    if len(view_counts) < 2 or view_counts[0] < 2:
        raise ValueError("need at least two view counts, each >= 2")
    rng = RandomSource(seed)
    rows = []
    for V in view_counts:
        data = [[rng.derive(V, b, v).normal((batch, dim)) for v in range(V)] for b in range(n_batches)]
        for mech in MECHANISMS:
            pairs = plan_pairs(mech, V, 0 if mech == BEST_OTHER else None)
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                contrastive_epoch(data, pairs, tau)
                times.append(time.perf_counter() - t0)
            rows.append({"views": V, "mechanism": mech, "pairs": len(pairs),
                         "seconds": min(times), "seconds_median": float(np.median(times))})
    exponents = {}
    for mech in MECHANISMS:
        sel = [r for r in rows if r["mechanism"] == mech]
        exponents[mech] = fit_exponent([r["views"] for r in sel], [r["seconds"] for r in sel])
    return rows, exponents


def write_bench(rows, exponents, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["views", "mechanism", "pairs", "seconds", "seconds_median"])
        w.writeheader()
        w.writerows(rows)
    with open(out / "exponents.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mechanism", "exponent"])
        for k, v in exponents.items():
            w.writerow([k, f"{v:.4f}"])
    return out / "bench.csv"
