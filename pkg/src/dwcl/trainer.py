"""Pretraining, best-view / weight initialisation, alternating fine-tuning and final clustering."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import net
from .cluster import KMeansConfig, kmeans, select_best_view, silhouette
from .data import MultiViewDataset, batches, normalize
from .eval import RunReport, accuracy, emit_report, nmi
from .linalg import NonFiniteError, RandomSource
from .loss import LossBreakdown, LossConfig, assemble_total, info_nce, reconstruction_loss
from .net import AdamConfig, ViewModel
from .weights import BEST_OTHER, MECHANISMS, WEIGHT_MODES, CrossViewPlan, ViewDiagnostics, build_plan

log = logging.getLogger(__name__)

MODES = ("dwcl", "bsv")


class TrainingError(RuntimeError):
    """A training phase failed; ``phase`` names which one."""

    def __init__(self, phase: str, message: str):
        super().__init__(f"[{phase}] {message}")
        self.phase = phase


@dataclass
class TrainConfig:
    batch_size: int = 128
    pretrain_epochs: int = 100
    cl_iterations: int = 3
    cl_epochs: int = 50
    seed: int = 0
    mechanism: str = BEST_OTHER
    weight_mode: str = "dual"
    mode: str = "dwcl"
    loss: LossConfig = field(default_factory=LossConfig)
    adam: AdamConfig = field(default_factory=AdamConfig)
    kmeans_n_init: int = 10
    kmeans_max_iters: int = 300
    kmeans_tol: float = 1e-6
    h_dim: int = 512
    hhat_dim: int = 128
    hidden: tuple = net.DEFAULT_HIDDEN
    normalize: str = "minmax"
    final_features: str = "raw"  # "raw" plain concatenation | "l2" row-normalise each view first
    n_clusters: int | None = None

    def __post_init__(self):
        if isinstance(self.loss, dict):
            self.loss = LossConfig(**self.loss)
        if isinstance(self.adam, dict):
            self.adam = AdamConfig(**self.adam)
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.cl_iterations < 1 or self.cl_epochs < 1:
            raise ValueError("cl_iterations and cl_epochs must be >= 1")
        if self.pretrain_epochs < 0:
            raise ValueError("pretrain_epochs must be >= 0")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.final_features not in ("l2", "raw"):
            raise ValueError("final_features must be 'l2' or 'raw'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)

    def kmeans_config(self, k: int, seed: int) -> KMeansConfig:
        return KMeansConfig(k=k, n_init=self.kmeans_n_init, max_iters=self.kmeans_max_iters,
                            tol=self.kmeans_tol, seed=seed)


@dataclass
class TrainState:
    models: list[ViewModel]
    rng: RandomSource
    plan: CrossViewPlan | None = None
    diagnostics: ViewDiagnostics | None = None
    view_labels: list[np.ndarray] = field(default_factory=list)
    timeline: list[ViewDiagnostics] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    iteration: int = 0


def _n_clusters(dataset: MultiViewDataset, config: TrainConfig) -> int:
    k = config.n_clusters or dataset.k
    if not k:
        raise ValueError("cluster count unknown: set n_clusters or provide a labelled dataset")
    return int(k)


def _int_seed(rng: RandomSource, *keys) -> int:
    return int(rng.derive(*keys).integers(0, 2**31 - 1))


# -- one optimisation step --------------------------------------------------

def composite_loss(models, batch_views, plan: CrossViewPlan | None, config: LossConfig):
    """Forward every view, evaluate the weighted total loss and its parameter gradients.

    Returns ``(LossBreakdown, per-view gradient lists)``. Pairs whose effective
    coefficient gamma * W_Dual is zero are not evaluated.
    """
    fwd = [net.forward(m, X) for m, X in zip(models, batch_views)]
    rec, g_rec = [], []
    for f, X in zip(fwd, batch_views):
        loss, g = reconstruction_loss(X, f.Xrec)
        rec.append(loss)
        g_rec.append(config.lam * g if config.lam else None)
    g_hhat = [None] * len(models)
    pair_losses = {}
    if plan is not None:
        for (i, j), w in zip(plan.pairs, plan.dual_weights):
            coef = config.gamma * w
            if coef == 0.0:
                pair_losses[(i, j)] = 0.0
                continue
            loss, ga, gb = info_nce(fwd[i].Hhat, fwd[j].Hhat, config.temperature)
            pair_losses[(i, j)] = loss
            for v, g in ((i, ga), (j, gb)):
                g_hhat[v] = coef * g if g_hhat[v] is None else g_hhat[v] + coef * g
        breakdown = assemble_total(plan, pair_losses, rec, config)
    else:
        total = config.lam * sum(rec)
        breakdown = LossBreakdown(total, 0.0, float(sum(rec)), {}, rec)
    if not np.isfinite(breakdown.total):
        raise NonFiniteError("non-finite loss")
    grads = [net.backward(m, f.tape, gh, gr) for m, f, gh, gr in zip(models, fwd, g_hhat, g_rec)]
    return breakdown, grads


def _run_epoch(state: TrainState, dataset, plan, config: TrainConfig, loss_cfg: LossConfig,
               iteration: int, epoch: int, phase: str) -> None:
    rng = state.rng.derive(iteration, epoch, 7)
    for bi, idx in enumerate(batches(dataset.n, config.batch_size, rng)):
        views = [X[idx] for X in dataset.views]
        try:
            bd, grads = composite_loss(state.models, views, plan, loss_cfg)
            for m, g in zip(state.models, grads):
                net.adam_step(m, g, config.adam)
        except NonFiniteError as exc:
            raise TrainingError(phase, f"iteration {iteration} epoch {epoch} batch {bi}: {exc}") from exc
        state.history.append({
            "iteration": iteration, "epoch": epoch, "batch": bi, "total": bd.total,
            "contrastive": loss_cfg.gamma * bd.contrastive,
            "reconstruction": loss_cfg.lam * bd.reconstruction,
        })


# -- Algorithm phases ---------------------------------------------------------

def pretrain(dataset: MultiViewDataset, config: TrainConfig) -> TrainState:
    """Fresh per-view models trained on reconstruction only (loss rows use iteration 0)."""
    rng = RandomSource(config.seed)
    models = [
        net.init_view_model(d, config.h_dim, config.hhat_dim, rng.derive(1000 + v), config.hidden)
        for v, d in enumerate(dataset.dims)
    ]
    state = TrainState(models=models, rng=rng)
    loss_cfg = replace(config.loss, gamma=0.0)
    for epoch in range(config.pretrain_epochs):
        _run_epoch(state, dataset, None, config, loss_cfg, 0, epoch, "pretrain")
    return state


def features(state: TrainState, dataset: MultiViewDataset, low_level: bool = False) -> list[np.ndarray]:
    out = []
    for m, X in zip(state.models, dataset.views):
        H, Hhat = net.encode(m, X)
        out.append(H if low_level else Hhat)
    return out


def _refresh(state: TrainState, dataset, config: TrainConfig, iteration: int, low_level: bool):
    """k-means per view, silhouettes, best view and a fresh plan."""
    k = _n_clusters(dataset, config)
    feats = features(state, dataset, low_level)
    labels, si_means = [], []
    for v, F in enumerate(feats):
        res = kmeans(F, config.kmeans_config(k, _int_seed(state.rng, 2000 + iteration, v)))
        if res.empty_repairs:
            log.info("iteration %d view %d: %d empty-cluster repairs", iteration, v, res.empty_repairs)
        labels.append(res.labels)
        if len(np.unique(res.labels)) < 2:
            si_means.append(0.0)
        else:
            rep = silhouette(F, res.labels, state.rng.derive(3000 + iteration, v))
            si_means.append(rep.mean)
    best = select_best_view(si_means)
    state.view_labels = labels
    state.iteration = iteration
    if dataset.n_views >= 2:
        plan = build_plan(config.mechanism, dataset.n_views, best, si_means, labels, k,
                          config.weight_mode, iteration)
        state.plan = plan
        state.diagnostics = plan.diagnostics
    else:
        state.plan = None
        state.diagnostics = ViewDiagnostics(iteration, si_means, [float(np.exp(s)) for s in si_means],
                                            best, [], [], [], [], [])
    state.timeline.append(state.diagnostics)
    return state


def initialize_diagnostics(state: TrainState, dataset: MultiViewDataset, config: TrainConfig) -> TrainState:
    """Initial best view and weights from the pretrained low-level features H."""
    return _refresh(state, dataset, config, 0, low_level=True)


def finetune(state: TrainState, dataset: MultiViewDataset, config: TrainConfig,
             on_iteration=None) -> TrainState:
    """Alternate T epochs of weighted contrastive + reconstruction training with weight updates.

    The plan is frozen during each iteration's epochs, then rebuilt from
    k-means on the current projected features.
    """
    if state.diagnostics is None:
        raise TrainingError("finetune", "diagnostics not initialised")
    for it in range(1, config.cl_iterations + 1):
        plan = state.plan
        for epoch in range(config.cl_epochs):
            _run_epoch(state, dataset, plan, config, config.loss, it, epoch, "finetune")
        _refresh(state, dataset, config, it, low_level=False)
        if on_iteration is not None:
            on_iteration(it, state)
    return state


def concat_features(feats: list[np.ndarray], how: str = "raw") -> np.ndarray:
    if how == "l2":
        feats = [F / np.maximum(np.linalg.norm(F, axis=1, keepdims=True), 1e-12) for F in feats]
    return np.hstack(feats)


def final_cluster(state: TrainState, dataset: MultiViewDataset, config: TrainConfig) -> np.ndarray:
    """k-means on the concatenation of every view's projected features."""
    k = _n_clusters(dataset, config)
    Z = concat_features(features(state, dataset), config.final_features)
    return kmeans(Z, config.kmeans_config(k, _int_seed(state.rng, 9000))).labels


def bsv_labels(state: TrainState) -> np.ndarray:
    """Best-single-view baseline: the initial k-means labels of the selected best view."""
    if state.diagnostics is None:
        raise TrainingError("bsv", "diagnostics not initialised")
    return state.view_labels[state.diagnostics.best_view]


# -- full run ---------------------------------------------------------------------

@dataclass
class RunResult:
    labels: np.ndarray
    state: TrainState
    report: RunReport


def _per_view_metrics(state, dataset, config, k):
    if dataset.labels is None:
        return [], []
    accs, nmis = [], []
    for v, F in enumerate(features(state, dataset)):
        lab = kmeans(F, config.kmeans_config(k, _int_seed(state.rng, 9100, v))).labels
        accs.append(accuracy(lab, dataset.labels, k))
        nmis.append(nmi(lab, dataset.labels))
    return accs, nmis


def run(dataset: MultiViewDataset, config: TrainConfig, out_dir=None,
        per_view_metrics: bool = True) -> RunResult:
    """Train (or, in ``bsv`` mode, only pretrain) and cluster; optionally write all artifacts."""
    out = Path(out_dir) if out_dir is not None else None
    ckpt_dir = diag_dir = None
    if out is not None:
        ckpt_dir, diag_dir = out / "checkpoints", out / "diagnostics"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        diag_dir.mkdir(parents=True, exist_ok=True)
    cfg_dict = config.to_dict()
    timings = {}

    def write_diag(state):
        if diag_dir is not None:
            d = state.diagnostics.to_dict()
            (diag_dir / f"iter_{d['iteration']:03d}.json").write_text(json.dumps(d, indent=2) + "\n")

    def phase(name, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        except TrainingError:
            raise
        except Exception as exc:
            raise TrainingError(name, f"{type(exc).__name__}: {exc}") from exc
        finally:
            timings[name] = time.perf_counter() - t0

    data = phase("normalize", lambda: normalize(dataset, config.normalize))
    k = _n_clusters(data, config)
    state = phase("pretrain", lambda: pretrain(data, config))
    if ckpt_dir is not None:
        net.save_checkpoint(ckpt_dir / "pretrain.npz", state.models, cfg_dict)
    phase("initialize", lambda: initialize_diagnostics(state, data, config))
    write_diag(state)

    if config.mode == "bsv":
        labels = bsv_labels(state)
    else:
        def on_iteration(it, st):
            write_diag(st)
            if ckpt_dir is not None:
                net.save_checkpoint(ckpt_dir / f"iter_{it:03d}.npz", st.models, cfg_dict)
        phase("finetune", lambda: finetune(state, data, config, on_iteration))
        labels = phase("final_cluster", lambda: final_cluster(state, data, config))

    acc = nmi_v = None
    if data.labels is not None:
        acc = accuracy(labels, data.labels, k)
        nmi_v = nmi(labels, data.labels)
    if per_view_metrics:
        pv_acc, pv_nmi = phase("per_view_eval", lambda: _per_view_metrics(state, data, config, k))
    else:
        pv_acc, pv_nmi = [], []
    report = RunReport(
        mode=config.mode,
        acc=acc,
        nmi=nmi_v,
        per_view_acc=pv_acc,
        per_view_nmi=pv_nmi,
        best_view_timeline=[d.best_view for d in state.timeline],
        weights_timeline=[d.to_dict() for d in state.timeline],
        timings=timings,
        config=cfg_dict,
        predicted_labels=[int(x) for x in labels],
        losses=list(state.history),
    )
    if out is not None:
        emit_report(report, out)
    return RunResult(np.asarray(labels), state, report)
