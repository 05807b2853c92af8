import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwcl.eval import (RunReport, accuracy, emit_report, hungarian_match, nmi, strip_timings,
                       write_summary)
from oracles import best_matching_brute, nmi_table


def test_identity_and_reversal():
    assert list(hungarian_match(np.diag([5, 4, 3]) + 1)) == [0, 1, 2]
    assert list(hungarian_match(np.fliplr(np.diag([5, 4, 3])))) == [2, 1, 0]


def test_non_square_rejected():
    with pytest.raises(ValueError):
        hungarian_match(np.ones((2, 3)))


@pytest.mark.parametrize("seed", range(10))
def test_matching_equals_brute_force(seed):
    r = np.random.default_rng(seed)
    K = int(r.integers(1, 7))
    C = r.integers(0, 20, size=(K, K))
    p = hungarian_match(C)
    assert C[np.arange(K), p].sum() == best_matching_brute(C.tolist())


def test_accuracy_examples():
    t = np.array([0, 0, 0, 1, 1, 1])
    assert accuracy(t, t, 2) == 1.0
    assert accuracy(1 - t, t, 2) == 1.0
    pred = np.array([1, 1, 0, 0, 0, 0])
    # both matchings enumerated: {1->0, 0->1} scores 2 + 3, {0->0, 1->1} scores 1 + 0
    assert accuracy(pred, t, 2) == pytest.approx(5 / 6)
    assert accuracy(pred, t, 2) == max(2 + 3, 1 + 0) / 6


def test_accuracy_pads_collapsed_predictions():
    assert accuracy(np.zeros(6, int), np.array([0, 1, 2, 0, 1, 2]), 3) == pytest.approx(2 / 6)


def test_accuracy_length_mismatch():
    with pytest.raises(ValueError):
        accuracy([0, 1], [0, 1, 1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=4, max_size=40), st.permutations(range(4)),
       st.randoms(use_true_random=False))
def test_accuracy_and_nmi_relabel_invariant(truth, perm, rnd):
    truth = np.array(truth)
    pred = np.array([rnd.randrange(4) for _ in truth])
    relabeled = np.array(perm)[pred]
    assert accuracy(pred, truth, 4) == pytest.approx(accuracy(relabeled, truth, 4))
    assert nmi(pred, truth) == pytest.approx(nmi(relabeled, truth), abs=1e-12)
    assert nmi(pred, truth) == pytest.approx(nmi(truth, pred), abs=1e-12)
    assert 0.0 <= accuracy(pred, truth, 4) <= 1.0 and 0.0 <= nmi(pred, truth) <= 1.0


def test_nmi_examples():
    t = np.array([0, 0, 1, 1, 2, 2])
    assert nmi(t, t) == pytest.approx(1.0, abs=1e-12)
    assert nmi(np.zeros(6, int), t) == 0.0
    r = np.random.default_rng(0)
    a, b = r.integers(0, 4, 60), r.integers(0, 3, 60)
    assert nmi(a, b) == pytest.approx(nmi_table(a.tolist(), b.tolist()), abs=1e-10)


def _report(mode="dwcl"):
    rows = [{"iteration": 0, "epoch": 0, "batch": 0, "total": 2.0, "contrastive": 0.0, "reconstruction": 2.0},
            {"iteration": 1, "epoch": 0, "batch": 0, "total": 3.0, "contrastive": 1.5, "reconstruction": 1.5}]
    return RunReport(mode=mode, acc=0.9, nmi=0.8, per_view_acc=[0.7, 0.6], per_view_nmi=[0.5, 0.4],
                     best_view_timeline=[0, 1], weights_timeline=[{"iteration": 0}],
                     timings={"pretrain": 1.0}, predicted_labels=[0, 1], losses=rows)


def test_emit_report(tmp_path):
    paths = emit_report(_report(), tmp_path)
    assert all(p.exists() for p in paths.values())
    d = json.loads(paths["report"].read_text())
    for key in ("acc", "nmi", "per_view_acc", "per_view_nmi", "best_view_timeline",
                "weights_timeline", "timings"):
        assert key in d
    assert d["acc"] == 0.9 and d["mode"] == "dwcl"
    assert paths["losses"].read_text().splitlines()[0] == "iteration,epoch,batch,total,contrastive,reconstruction"
    assert "timings" not in strip_timings(d)


def test_emit_report_is_deterministic(tmp_path):
    a = emit_report(_report(), tmp_path / "a")
    b = emit_report(_report(), tmp_path / "b")
    for k in a:
        assert a[k].read_bytes() == b[k].read_bytes()


def test_bsv_report_has_no_contrastive_curve(tmp_path):
    paths = emit_report(_report("bsv"), tmp_path)
    assert json.loads(paths["report"].read_text())["mode"] == "bsv"
    lines = paths["losses"].read_text().splitlines()[1:]
    assert all(float(l.split(",")[4]) == 0.0 for l in lines)
    assert "contrastive" not in paths["plot"].read_text()


def test_write_summary(tmp_path):
    p = write_summary([{"arm": "a", "mechanism": "pairwise", "weight_mode": "none", "status": "ok",
                        "runs": 2, "acc_mean": 0.5, "acc_std": 0.1, "nmi_mean": 0.4, "nmi_std": 0.0}],
                      tmp_path / "s.csv")
    assert p.read_text().splitlines()[0].startswith("arm,mechanism,weight_mode,status")
