"""View-quality (silhouette) weights, view-discrepancy (CMI) weights and cross-view plans."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

BEST_OTHER = "bestother"
PAIRWISE = "pairwise"
MECHANISMS = (BEST_OTHER, PAIRWISE)
WEIGHT_MODES = ("none", "cmi_only", "si_only", "dual")


def contingency(labels_a, labels_b) -> np.ndarray:
    """Joint count table over the labels present in each labelling."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"label length mismatch: {a.shape} vs {b.shape}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def normalized_mutual_information(labels_a, labels_b) -> float:
    """2 I(a; b) / (H(a) + H(b)), natural log.

    Both labellings constant gives 1; exactly one constant gives 0.
    """
    table = contingency(labels_a, labels_b)
    n = table.sum()
    if n == 0:
        raise ValueError("empty labellings")
    pj = table / n
    pa, pb = pj.sum(axis=1), pj.sum(axis=0)
    ha, hb = _entropy(pa), _entropy(pb)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = pj > 0
    mi = float((pj[nz] * np.log(pj[nz] / np.outer(pa, pb)[nz])).sum())
    return float(np.clip(2.0 * mi / (ha + hb), 0.0, 1.0))


def view_quality_weight(si_mean: float) -> float:
    return float(np.exp(si_mean))


def cross_view_quality_weight(si_v: float, si_b: float) -> float:
    return view_quality_weight(si_v) * view_quality_weight(si_b)


def cmi_weight(labels_v, labels_b, k: int | None = None) -> tuple[float, float]:
    """(CMI, e^CMI - 1) between two views' cluster labellings."""
    lv, lb = np.asarray(labels_v), np.asarray(labels_b)
    if lv.shape != lb.shape:
        raise ValueError(f"label length mismatch: {lv.shape} vs {lb.shape}")
    if k is not None and len(lv) and (lv.min() < 0 or lb.min() < 0 or lv.max() >= k or lb.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    cmi = normalized_mutual_information(lv, lb)
    return cmi, float(np.exp(cmi) - 1.0)


@dataclass
class ViewDiagnostics:
    iteration: int
    si_means: list[float]
    w_si: list[float]
    best_view: int | None
    pairs: list[tuple[int, int]]
    cmi: list[float]
    w_cmi: list[float]
    w_si_pair: list[float]
    w_dual: list[float]

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "si_means": [float(x) for x in self.si_means],
            "w_si": [float(x) for x in self.w_si],
            "best_view": self.best_view,
            "pairs": [list(p) for p in self.pairs],
            "cmi": [float(x) for x in self.cmi],
            "w_cmi": [float(x) for x in self.w_cmi],
            "w_si_pair": [float(x) for x in self.w_si_pair],
            "w_dual": [float(x) for x in self.w_dual],
        }


@dataclass
class CrossViewPlan:
    mechanism: str
    pairs: list[tuple[int, int]]
    best_view: int | None
    dual_weights: np.ndarray
    diagnostics: ViewDiagnostics | None = field(default=None, repr=False)

    def __post_init__(self):
        self.dual_weights = np.asarray(self.dual_weights, dtype=np.float64)
        if len(self.dual_weights) != len(self.pairs):
            raise ValueError("one dual weight per pair required")
        if not (np.all(np.isfinite(self.dual_weights)) and np.all(self.dual_weights >= 0)):
            raise ValueError("dual weights must be finite and non-negative")

    def weight_matrix(self, n_views: int) -> np.ndarray:
        """Symmetric V x V matrix of effective pair weights (0 for absent pairs)."""
        M = np.zeros((n_views, n_views))
        for (i, j), w in zip(self.pairs, self.dual_weights):
            M[i, j] = M[j, i] = w
        return M


def plan_pairs(mechanism: str, n_views: int, best_view: int | None = None) -> list[tuple[int, int]]:
    if n_views < 2:
        raise ValueError("cross-view plans need at least 2 views")
    if mechanism == BEST_OTHER:
        if best_view is None:
            raise ValueError("best-other mechanism requires a best view")
        if not 0 <= best_view < n_views:
            raise ValueError(f"best view {best_view} out of range")
        return [(v, best_view) for v in range(n_views) if v != best_view]
    if mechanism == PAIRWISE:
        return list(combinations(range(n_views), 2))
    raise ValueError(f"unknown mechanism {mechanism!r}")


def build_plan(mechanism: str, n_views: int, best_view: int | None, si_means,
               per_view_labels, k: int | None = None, weight_mode: str = "dual",
               iteration: int = 0) -> CrossViewPlan:
    """Enumerate cross-views and attach their weights.

    ``weight_mode`` selects which factor(s) enter the dual weight: ``none``
    gives 1 everywhere, ``cmi_only`` W_CMI, ``si_only`` W_SI, ``dual`` both.
    """
    if weight_mode not in WEIGHT_MODES:
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    pairs = plan_pairs(mechanism, n_views, best_view)
    si_means = [float(s) for s in si_means]
    if len(si_means) != n_views or len(per_view_labels) != n_views:
        raise ValueError("need one silhouette mean and one labelling per view")
    cmis, w_cmi, w_si = [], [], []
    for i, j in pairs:
        c, w = cmi_weight(per_view_labels[i], per_view_labels[j], k)
        cmis.append(c)
        w_cmi.append(w)
        w_si.append(cross_view_quality_weight(si_means[i], si_means[j]))
    w_cmi_a, w_si_a = np.array(w_cmi), np.array(w_si)
    dual = {
        "none": np.ones(len(pairs)),
        "cmi_only": w_cmi_a,
        "si_only": w_si_a,
        "dual": w_cmi_a * w_si_a,
    }[weight_mode]
    diag = ViewDiagnostics(
        iteration=iteration,
        si_means=si_means,
        w_si=[view_quality_weight(s) for s in si_means],
        best_view=best_view,
        pairs=pairs,
        cmi=cmis,
        w_cmi=w_cmi,
        w_si_pair=w_si,
        w_dual=dual.tolist(),
    )
    return CrossViewPlan(mechanism, pairs, best_view, dual, diag)
