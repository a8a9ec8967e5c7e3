import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import roc_auc_score

from rankreg.exceptions import DegenerateLabelsError, InvalidArgumentError
from rankreg.metrics import (
    auc,
    ensemble_scores,
    fpr_at_tpr,
    metrics_report,
    roc_curve,
)

S4 = [0.9, 0.8, 0.7, 0.6]
Y4 = [1, 0, 1, 0]


def pair_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def threshold_search_fpr(scores, labels, beta):
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    best = 1.0
    for t in set(scores):
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 0)
        if tp / n_pos >= beta - 1e-12:
            best = min(best, fp / n_neg)
    return best


def trapezoid(curve):
    return float(np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2))


def random_case(rng):
    n = int(rng.integers(2, 201))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    if rng.random() < 0.5:
        s = rng.integers(0, 6, size=n).astype(float)
    else:
        s = rng.standard_normal(n) + y * rng.random()
    return s, y


def test_roc_four_samples():
    c = roc_curve(S4, Y4)
    pts = list(zip(c.thresholds.tolist(), c.fpr.tolist(), c.tpr.tolist()))
    assert (0.7, 0.5, 1.0) in pts
    assert pts[0] == (np.inf, 0.0, 0.0) and pts[-1] == (-np.inf, 1.0, 1.0)
    assert len(c) == 4 + 2


def test_roc_perfect_separation_hits_corner():
    c = roc_curve([3.0, 2.0, 1.0, 0.0], [1, 1, 0, 0])
    assert any(f == 0.0 and t == 1.0 for f, t in zip(c.fpr, c.tpr))


def test_roc_all_tied():
    c = roc_curve([0.5] * 6, [1, 0, 1, 0, 0, 0])
    assert set(zip(c.fpr.tolist(), c.tpr.tolist())) == {(0.0, 0.0), (1.0, 1.0)}
    assert len(c) == 3


def test_roc_invariants():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s, y = random_case(rng)
        c = roc_curve(s, y)
        assert np.all(np.diff(c.thresholds) < 0)
        assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
        assert len(c) == np.unique(s).size + 2


def test_roc_table_format():
    text = roc_curve(S4, Y4).to_table()
    lines = text.splitlines()
    assert lines[0] == "threshold\tfpr\ttpr"
    assert lines[1] == "inf\t0.0\t0.0"
    assert len(lines) == 1 + 6


def test_degenerate_labels():
    for f in (roc_curve, auc):
        with pytest.raises(DegenerateLabelsError):
            f([0.1, 0.2], [1, 1])
    with pytest.raises(DegenerateLabelsError):
        fpr_at_tpr([0.1, 0.2], [0, 0], 0.9)


def test_auc_examples():
    assert auc([3.0, 2.0, 1.0], [1, 1, 0]) == 1.0
    assert auc([1.0] * 5, [1, 0, 1, 0, 0]) == 0.5
    assert auc(S4, Y4) == 0.75


def test_fpr_examples():
    assert fpr_at_tpr(S4, Y4, 1.0) == 0.5
    assert fpr_at_tpr(S4, Y4, 0.5) == 0.0
    for beta in (0.3, 0.9, 1.0):
        assert fpr_at_tpr([3.0, 2.0, 1.0, 0.0], [1, 1, 0, 0], beta) == 0.0


def test_fpr_rejects_bad_beta():
    with pytest.raises(InvalidArgumentError):
        fpr_at_tpr(S4, Y4, 0.0)
    with pytest.raises(InvalidArgumentError):
        fpr_at_tpr(S4, Y4, 1.5)


def test_metrics_against_oracles():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s, y = random_case(rng)
        a = auc(s, y)
        assert abs(a - pair_auc(s.tolist(), y.tolist())) < 1e-12
        assert abs(a - trapezoid(roc_curve(s, y))) < 1e-12
        assert abs(a - roc_auc_score(y, s)) < 1e-12
        for beta in (0.5, 0.9, 0.95, 1.0):
            assert fpr_at_tpr(s, y, beta) == threshold_search_fpr(s.tolist(), y.tolist(), beta)


@given(st.integers(0, 2**32 - 1))
def test_metrics_invariant_under_monotone_transform(seed):
    s, y = random_case(np.random.default_rng(seed))
    t = np.exp(s / 4.0) * 2.0 + 1.0
    assert auc(s, y) == auc(t, y)
    for beta in (0.9, 0.98):
        assert fpr_at_tpr(s, y, beta) == fpr_at_tpr(t, y, beta)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_fpr_improves_when_positives_move_up(seed, shift):
    s, y = random_case(np.random.default_rng(seed))
    moved = s + shift * y
    for beta in (0.5, 0.9, 1.0):
        assert fpr_at_tpr(moved, y, beta) <= fpr_at_tpr(s, y, beta)


@given(st.integers(0, 2**32 - 1))
def test_fpr_nondecreasing_in_beta(seed):
    s, y = random_case(np.random.default_rng(seed))
    values = [fpr_at_tpr(s, y, b) for b in np.linspace(0.05, 1.0, 20)]
    assert values == sorted(values)


def test_report_examples():
    r = metrics_report(S4, Y4, [1.0, 0.5])
    assert r.fpr_at == {0.5: 0.0, 1.0: 0.5}
    assert r.auc == 0.75
    assert r.counts == (2, 2)
    assert metrics_report(S4, Y4, [0.5, 1.0]).fpr_at == r.fpr_at

    perfect = metrics_report([4.0, 3.0, 2.0, 1.0], [1, 1, 0, 0])
    assert perfect.auc == 1.0
    assert set(perfect.fpr_at) == {0.90, 0.92, 0.95, 0.98}
    assert all(v == 0.0 for v in perfect.fpr_at.values())


def test_report_roundtrip_dict():
    r = metrics_report(S4, Y4)
    back = type(r).from_dict(r.to_dict())
    assert back == r


def test_ensemble_scores():
    v = np.array([0.5, -1.0, 2.0])
    assert np.array_equal(ensemble_scores([v]), v)
    assert not ensemble_scores([v, -v]).any()
    np.testing.assert_allclose(ensemble_scores([v, 2 * v, 3 * v]), 2 * v)
    with pytest.raises(InvalidArgumentError):
        ensemble_scores([v, v[:2]])
    with pytest.raises(InvalidArgumentError):
        ensemble_scores([])
