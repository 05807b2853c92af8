import json
import math

import numpy as np
import pytest

from dwcl import net
from dwcl.cli import load_preset
from dwcl.cluster import kmeans
from dwcl.data import MultiViewDataset, SyntheticSpec, generate_synthetic, normalize
from dwcl.eval import LOSS_COLUMNS
from dwcl.loss import LossConfig, info_nce, reconstruction_loss
from dwcl.trainer import (TrainConfig, TrainingError, _int_seed, bsv_labels, composite_loss, concat_features,
                          features, final_cluster, finetune, initialize_diagnostics, pretrain, run)
from dwcl.weights import BEST_OTHER, PAIRWISE

SMALL = dict(h_dim=8, hhat_dim=4, hidden=(16,), batch_size=32, kmeans_n_init=3,
             adam={"learning_rate": 1e-3})


def small(**kw):
    return TrainConfig(**{**SMALL, **kw})


def blobs(n=90, k=3, dims=(6, 5), sigmas=(0.3, 0.4), weak=(), seed=0):
    views = [{"dim": d, "noise_sigma": s} for d, s in zip(dims, sigmas)]
    views += [{"dim": d, "informative": False} for d in weak]
    return generate_synthetic(SyntheticSpec(n=n, k=k, latent_dim=3, views=views, seed=seed))


def params(state):
    return [p for m in state.models for p in m.parameters()]


# -- pretrain ---------------------------------------------------------------

def test_pretrain_same_seed_same_parameters():
    ds = normalize(blobs(), "minmax")
    a = pretrain(ds, small(pretrain_epochs=3, seed=4))
    b = pretrain(ds, small(pretrain_epochs=3, seed=4))
    assert all(np.array_equal(x, y) for x, y in zip(params(a), params(b)))
    assert a.history == b.history
    c = pretrain(ds, small(pretrain_epochs=3, seed=5))
    assert not all(np.array_equal(x, y) for x, y in zip(params(a), params(c)))


def test_pretrain_history_is_reconstruction_only():
    ds = normalize(blobs(), "minmax")
    st = pretrain(ds, small(pretrain_epochs=2))
    assert st.history
    assert all(r["iteration"] == 0 and r["contrastive"] == 0.0 for r in st.history)
    assert all(r["total"] == pytest.approx(r["reconstruction"]) for r in st.history)
    assert set(LOSS_COLUMNS) <= set(st.history[0])


def test_pretrain_leaves_projection_untouched():
    ds = normalize(blobs(), "minmax")
    cfg = small(pretrain_epochs=2)
    st = pretrain(ds, cfg)
    fresh = pretrain(ds, small(pretrain_epochs=0))
    for m, f in zip(st.models, fresh.models):
        for la, lb in zip(m.projection, f.projection):
            assert np.array_equal(la.W, lb.W) and np.array_equal(la.b, lb.b)
        assert not np.array_equal(m.encoder[0].W, f.encoder[0].W)


def test_constant_view_reconstruction_vanishes():
    r = np.random.default_rng(0)
    X0 = np.full((200, 5), 0.7)
    ds = MultiViewDataset([X0, r.normal(size=(200, 4))], np.arange(200) % 3)
    st = pretrain(ds, small(pretrain_epochs=50, normalize="none"))
    start = reconstruction_loss(X0, net.forward(pretrain(ds, small(pretrain_epochs=0)).models[0], X0).Xrec)[0]
    end = reconstruction_loss(X0, net.forward(st.models[0], X0).Xrec)[0]
    assert start > 1.0
    assert end < 1e-8


# -- initialisation -----------------------------------------------------------

@pytest.mark.parametrize("seed", range(3))
def test_noise_view_is_not_best(seed):
    # view 0 is pure noise, view 1 carries the clusters
    good = blobs(seed=seed, dims=(6,), sigmas=(0.2,), weak=(6,))
    ds = normalize(MultiViewDataset([good.views[1], good.views[0]], good.labels), "minmax")
    cfg = small(pretrain_epochs=5, seed=seed)
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    assert st.diagnostics.best_view == 1
    assert st.diagnostics.iteration == 0


def test_duplicate_views_have_maximal_cmi_weight():
    base = blobs(dims=(6,), sigmas=(0.3,))
    ds = normalize(MultiViewDataset([base.views[0], base.views[0].copy()], base.labels), "minmax")
    cfg = small(pretrain_epochs=2)
    st = pretrain(ds, cfg)
    st.models[1] = st.models[0]  # identical networks on identical inputs
    st = initialize_diagnostics(st, ds, cfg)
    # identical features but independently seeded k-means; on well separated blobs they agree
    assert np.array_equal(np.sort(np.bincount(st.view_labels[0])), np.sort(np.bincount(st.view_labels[1])))
    assert st.diagnostics.cmi == [pytest.approx(1.0, abs=1e-12)]
    assert st.diagnostics.w_cmi == [pytest.approx(math.e - 1, abs=1e-12)]


@pytest.mark.parametrize("mechanism,pairs", [(BEST_OTHER, 4), (PAIRWISE, 10)])
def test_five_view_plan_size(mechanism, pairs):
    ds = normalize(blobs(n=60, dims=(4, 4, 4, 4, 4), sigmas=(0.3,) * 5), "minmax")
    cfg = small(pretrain_epochs=1, mechanism=mechanism)
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    assert len(st.plan.pairs) == pairs
    if mechanism == BEST_OTHER:
        assert all(b == st.plan.best_view for _, b in st.plan.pairs)


def test_initialisation_uses_low_level_features():
    ds = normalize(blobs(), "minmax")
    cfg = small(pretrain_epochs=1, h_dim=8, hhat_dim=4)
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    H = features(st, ds, low_level=True)
    assert H[0].shape[1] == 8
    assert len(st.view_labels) == 2 and len(st.view_labels[0]) == ds.n


# -- fine-tuning --------------------------------------------------------------

def test_gamma_zero_logs_no_contrastive_term():
    ds = normalize(blobs(), "minmax")
    cfg = small(pretrain_epochs=1, cl_iterations=1, cl_epochs=2, loss={"gamma": 0.0})
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    proj_before = [l.W.copy() for m in st.models for l in m.projection]
    finetune(st, ds, cfg)
    rows = [r for r in st.history if r["iteration"] == 1]
    assert len(rows) == 2 * 3  # 2 epochs x ceil(90 / 32) batches
    assert all(r["contrastive"] == 0.0 for r in rows)
    assert all(r["total"] == pytest.approx(r["reconstruction"]) for r in rows)
    # projection heads receive gradient only through the contrastive term
    assert all(np.array_equal(a, l.W) for a, l in zip(proj_before, (l for m in st.models for l in m.projection)))


def test_finetune_updates_weights_only_at_boundaries():
    ds = normalize(blobs(), "minmax")
    cfg = small(pretrain_epochs=1, cl_iterations=2, cl_epochs=1)
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    seen = []
    finetune(st, ds, cfg, on_iteration=lambda it, s: seen.append((it, s.diagnostics.iteration)))
    assert seen == [(1, 1), (2, 2)]
    assert [d.iteration for d in st.timeline] == [0, 1, 2]


def test_finetune_requires_initialised_state():
    ds = normalize(blobs(), "minmax")
    cfg = small(pretrain_epochs=0)
    with pytest.raises(TrainingError, match="finetune"):
        finetune(pretrain(ds, cfg), ds, cfg)


def test_composite_loss_matches_hand_assembly():
    ds = normalize(blobs(dims=(5, 4, 3), sigmas=(0.3, 0.4, 0.5)), "minmax")
    cfg = small(pretrain_epochs=1)
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    batch = [X[:10] for X in ds.views]
    lc = LossConfig(gamma=0.7, lam=1.3, temperature=0.5)
    bd, _ = composite_loss(st.models, batch, st.plan, lc)
    fwd = [net.forward(m, X) for m, X in zip(st.models, batch)]
    expect = lc.lam * sum(reconstruction_loss(X, f.Xrec)[0] for X, f in zip(batch, fwd))
    for (i, j), w in zip(st.plan.pairs, st.plan.dual_weights):
        expect += lc.gamma * w * info_nce(fwd[i].Hhat, fwd[j].Hhat, 0.5)[0]
    assert bd.total == pytest.approx(expect, rel=1e-12)


def test_best_other_pairs_always_contain_best_view():
    ds = normalize(blobs(dims=(5, 4, 3, 4), sigmas=(0.3, 0.4, 0.5, 0.6)), "minmax")
    cfg = small(pretrain_epochs=1, cl_iterations=2, cl_epochs=1)
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    finetune(st, ds, cfg)
    for d in st.timeline:
        assert len(d.pairs) == 3
        assert all(b == d.best_view and v != b for v, b in d.pairs)


# -- final clustering -----------------------------------------------------------

def test_concatenated_width():
    feats = [np.ones((4, 128))] * 5
    assert concat_features(feats).shape == (4, 640)
    assert concat_features(feats, "l2").shape == (4, 640)
    rows = concat_features([np.full((3, 4), 2.0), np.full((3, 2), -1.0)], "l2")
    assert np.allclose(np.linalg.norm(rows[:, :4], axis=1), 1.0)


def test_single_view_final_cluster_is_kmeans_on_projection():
    ds = normalize(MultiViewDataset([blobs().views[0]], blobs().labels), "minmax")
    cfg = small(pretrain_epochs=2, cl_iterations=1, cl_epochs=1)
    st = finetune(initialize_diagnostics(pretrain(ds, cfg), ds, cfg), ds, cfg)
    assert st.plan is None
    labels = final_cluster(st, ds, cfg)
    ref = kmeans(features(st, ds)[0], cfg.kmeans_config(3, _int_seed(st.rng, 9000))).labels
    assert np.array_equal(labels, ref)


def test_bsv_labels_come_from_best_view():
    ds = normalize(blobs(weak=(5,)), "minmax")
    cfg = small(pretrain_epochs=2, mode="bsv")
    st = initialize_diagnostics(pretrain(ds, cfg), ds, cfg)
    assert np.array_equal(bsv_labels(st), st.view_labels[st.diagnostics.best_view])


# -- presets ------------------------------------------------------------------

def test_preset_schedules():
    assert load_preset("Caltech5V7")["train"]["pretrain_epochs"] == 100
    c = load_preset("Caltech6V20")["train"]
    assert (c["cl_iterations"], c["cl_epochs"]) == (4, 25)
    for name in ("Caltech5V7", "Caltech6V20", "Scene", "CIFAR10"):
        t = load_preset(name)["train"]
        TrainConfig.from_dict(t)
        assert t["hhat_dim"] == 128 and t["adam"]["learning_rate"] == 3e-4


def test_config_round_trip_and_validation():
    cfg = small(seed=3, mechanism=PAIRWISE, weight_mode="none")
    back = TrainConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg
    with pytest.raises(ValueError, match="unknown"):
        TrainConfig.from_dict({"epochs": 3})
    with pytest.raises(ValueError):
        TrainConfig(mechanism="ring")
    with pytest.raises(ValueError):
        TrainConfig(weight_mode="both")


# -- whole run ----------------------------------------------------------------

def test_run_writes_artifacts(tmp_path):
    cfg = small(pretrain_epochs=2, cl_iterations=2, cl_epochs=1)
    res = run(blobs(), cfg, tmp_path)
    names = {p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*") if p.is_file()}
    assert {"report.json", "losses.csv", "loss_curve.svg",
            "checkpoints/pretrain.npz", "checkpoints/iter_001.npz", "checkpoints/iter_002.npz",
            "diagnostics/iter_000.json", "diagnostics/iter_001.json", "diagnostics/iter_002.json"} <= names
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["predicted_labels"] == res.labels.tolist()
    assert len(rep["best_view_timeline"]) == 3
    assert {"pretrain", "initialize", "finetune", "final_cluster"} <= set(rep["timings"])
    assert 0.0 <= rep["acc"] <= 1.0
    models, saved = net.load_checkpoint(tmp_path / "checkpoints/iter_002.npz")
    assert saved == cfg.to_dict()
    assert all(np.array_equal(a, b) for m, s in zip(models, res.state.models)
               for a, b in zip(m.parameters(), s.parameters()))


def test_bsv_run_skips_finetuning(tmp_path):
    res = run(blobs(), small(pretrain_epochs=2, mode="bsv"), tmp_path)
    assert "finetune" not in res.report.timings
    assert not (tmp_path / "checkpoints" / "iter_001.npz").exists()
    assert res.report.best_view_timeline == [res.state.diagnostics.best_view]
    losses = (tmp_path / "losses.csv").read_text().splitlines()
    assert all(line.split(",")[4] == "0.0" for line in losses[1:])


def test_run_tags_failing_phase():
    ds = blobs()
    ds.views[0][0, 0] = np.nan
    with pytest.raises(TrainingError) as err:
        run(ds, small(pretrain_epochs=1, normalize="none"))
    assert err.value.phase in {"normalize", "pretrain"}
    assert str(err.value).startswith(f"[{err.value.phase}]")
