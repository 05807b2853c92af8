"""Contrastive (InfoNCE), reconstruction and total-loss assembly with output-side gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DegenerateRowError, row_norms
from .weights import CrossViewPlan


@dataclass
class LossConfig:
    gamma: float = 1.0
    lam: float = 1.0
    temperature: float = 0.5

    def __post_init__(self):
        if self.gamma < 0 or self.lam < 0:
            raise ValueError("gamma and lambda must be non-negative")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")


@dataclass
class LossBreakdown:
    total: float
    contrastive: float  # sum over pairs of W_Dual * L_CL, before gamma
    reconstruction: float  # sum over views of L_R, before lambda
    pair_terms: dict = field(default_factory=dict)  # (i, j) -> W_Dual * L_CL
    view_terms: list = field(default_factory=list)


def _normalize_rows(X):
    n = row_norms(X)
    if np.any(n == 0.0):
        raise DegenerateRowError("zero-norm row in contrastive input")
    return X / n[:, None], n


def info_nce(Hhat_a, Hhat_b, tau: float = 0.5):
    """Symmetric two-view InfoNCE on cosine similarities.

    Instance i of view a is positive with instance i of view b. Negatives for
    an anchor are all other instances of its own view plus all other instances
    of the other view. The loss averages both directions over the batch.

    Returns ``(loss, grad_a, grad_b)``.
    """
    A = np.asarray(Hhat_a, dtype=np.float64)
    B = np.asarray(Hhat_b, dtype=np.float64)
    if A.shape != B.shape or A.ndim != 2:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    b = A.shape[0]
    if b < 2:
        raise ValueError("InfoNCE needs a batch of at least 2 (no negatives otherwise)")
    if tau <= 0:
        raise ValueError("temperature must be positive")

    Ua, na = _normalize_rows(A)
    Ub, nb = _normalize_rows(B)
    Z = np.vstack([Ua, Ub])
    m = 2 * b
    S = Z @ Z.T / tau
    np.fill_diagonal(S, -np.inf)
    pos = np.concatenate([np.arange(b, m), np.arange(b)])
    S_max = S.max(axis=1, keepdims=True)
    E = np.exp(S - S_max)
    denom = E.sum(axis=1)
    logZ = np.log(denom) + S_max[:, 0]
    loss = float((logZ - S[np.arange(m), pos]).mean())

    G = E / denom[:, None]
    G[np.arange(m), pos] -= 1.0
    G /= m
    dZ = (G + G.T) @ Z / tau
    dUa, dUb = dZ[:b], dZ[b:]
    # back through row normalisation u = x / |x|
    grad_a = (dUa - Ua * (Ua * dUa).sum(1, keepdims=True)) / na[:, None]
    grad_b = (dUb - Ub * (Ub * dUb).sum(1, keepdims=True)) / nb[:, None]
    return loss, grad_a, grad_b


def reconstruction_loss(X, Xrec):
    """Mean over rows of the squared reconstruction error; returns ``(loss, d loss / d Xrec)``."""
    X = np.asarray(X, dtype=np.float64)
    Xrec = np.asarray(Xrec, dtype=np.float64)
    if X.shape != Xrec.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Xrec.shape}")
    b = X.shape[0]
    diff = Xrec - X
    return float((diff * diff).sum() / b), (2.0 / b) * diff


def assemble_total(plan: CrossViewPlan, per_pair_losses, per_view_rec_losses,
                   config: LossConfig) -> LossBreakdown:
    """Total = gamma * sum_pairs W_Dual * L_CL + lambda * sum_views L_R.

    ``per_pair_losses`` is a mapping from plan pair to its raw InfoNCE value.
    """
    pair_terms = {}
    for pair, w in zip(plan.pairs, plan.dual_weights):
        if pair not in per_pair_losses:
            raise KeyError(f"missing contrastive loss for pair {pair}")
        pair_terms[pair] = float(w) * float(per_pair_losses[pair])
    view_terms = [float(x) for x in per_view_rec_losses]
    contrastive = float(sum(pair_terms.values()))
    reconstruction = float(sum(view_terms))
    total = config.gamma * contrastive + config.lam * reconstruction
    return LossBreakdown(total, contrastive, reconstruction, pair_terms, view_terms)
