"""Dual-weighted contrastive multi-view clustering on numpy."""

from .cluster import KMeansConfig, kmeans, select_best_view, silhouette
from .data import (MultiViewDataset, SyntheticSpec, ViewSpec, generate_synthetic, load_dataset,
                   normalize, save_dataset)
from .eval import accuracy, confusion_matrix, hungarian_match, nmi
from .linalg import RandomSource, cosine_similarity, pairwise_distances
from .loss import LossConfig, assemble_total, info_nce, reconstruction_loss
from .net import AdamConfig, init_view_model
from .trainer import TrainConfig, final_cluster, finetune, initialize_diagnostics, pretrain, run
from .weights import build_plan, cmi_weight, cross_view_quality_weight, view_quality_weight

__version__ = "0.1.0"
