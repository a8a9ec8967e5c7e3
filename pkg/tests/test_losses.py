import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankreg.exceptions import ConfigurationError, InvalidArgumentError
from rankreg.losses import LOSS_KINDS, LossSpec, base_loss, per_sample_loss

COUNTS = (40, 3000)

RANDOM_PARAMS = {
    "BCE": {},
    "WBCE": {"pos_weight": 7.5},
    "CB_BCE": {"cb_beta": 0.999},
    "S_ML": {"margin": 0.8},
    "A_ML": {"margin_pos": 1.3, "margin_neg": 0.4},
    "S_FL": {"focal_gamma": 1.5},
    "A_FL": {"focal_gamma_pos": 0.5, "focal_gamma_neg": 2.5},
    "LDAM": {"ldam_C": 2.0},
}


def central_diff(f, x, h=1e-5):
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_bce_at_zero():
    loss, grad = base_loss(LossSpec("BCE"), [0.0], [1])
    assert loss == pytest.approx(math.log(2), abs=1e-12)
    assert grad.tolist() == [-0.5]


@pytest.mark.parametrize("kind", LOSS_KINDS)
@pytest.mark.parametrize("defaults", [True, False])
def test_gradient_matches_finite_differences(kind, defaults):
    rng = np.random.default_rng(LOSS_KINDS.index(kind))
    params = {} if defaults else RANDOM_PARAMS[kind]
    spec = LossSpec(kind, params, COUNTS)
    for _ in range(5):
        s = rng.normal(scale=3.0, size=25)
        y = rng.integers(0, 2, size=25)
        _, grad = base_loss(spec, s, y)
        fd = central_diff(lambda v: base_loss(spec, v, y)[0], s)
        np.testing.assert_allclose(grad, fd, rtol=1e-4, atol=1e-10)


@pytest.mark.parametrize(
    "kind, params",
    [
        ("S_FL", {"focal_gamma": 0.0}),
        ("A_FL", {"focal_gamma_pos": 0.0, "focal_gamma_neg": 0.0}),
        ("WBCE", {"pos_weight": 1.0}),
        ("CB_BCE", {"cb_beta": 0.0}),
        ("S_ML", {"margin": 0.0}),
        ("A_ML", {"margin_pos": 0.0, "margin_neg": 0.0}),
        ("LDAM", {"ldam_C": 0.0}),
    ],
)
def test_degenerate_parameters_reduce_to_bce(kind, params):
    rng = np.random.default_rng(0)
    s = rng.normal(scale=4.0, size=200)
    y = rng.integers(0, 2, size=200)
    ref = base_loss(LossSpec("BCE"), s, y)
    got = base_loss(LossSpec(kind, params, COUNTS), s, y)
    assert got[0] == pytest.approx(ref[0], rel=1e-14)
    np.testing.assert_allclose(got[1], ref[1], rtol=1e-14, atol=1e-17)


@pytest.mark.parametrize("kind", LOSS_KINDS)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=40))
def test_losses_nonnegative_and_monotone_for_positives(kind, xs):
    spec = LossSpec(kind, RANDOM_PARAMS[kind], COUNTS)
    s = np.sort(np.array(xs))
    loss, d = per_sample_loss(spec, s, np.ones(s.size, dtype=int))
    assert np.all(loss >= 0)
    assert np.all(d <= 0)
    assert np.all(np.diff(loss) <= 1e-12)


@pytest.mark.parametrize("kind", LOSS_KINDS)
def test_losses_vanish_for_confident_correct_scores(kind):
    spec = LossSpec(kind, RANDOM_PARAMS[kind], COUNTS)
    loss, _ = base_loss(spec, [200.0, -200.0], [1, 0])
    assert loss < 1e-12


def test_wbce_default_weight_is_imbalance_ratio():
    spec = LossSpec("WBCE", class_counts=(10, 990))
    assert spec.resolved_params()["pos_weight"] == 99.0
    loss, _ = per_sample_loss(spec, [0.0, 0.0], [1, 0])
    assert loss[0] == pytest.approx(99 * math.log(2))
    assert loss[1] == pytest.approx(math.log(2))


def test_cb_weights_have_mean_one():
    spec = LossSpec("CB_BCE", class_counts=(10, 990))
    loss, _ = per_sample_loss(spec, [0.0, 0.0], [1, 0])
    w = loss / math.log(2)
    assert w.mean() == pytest.approx(1.0)
    assert w[0] > w[1]


def test_ldam_margin_uses_quarter_power():
    spec = LossSpec("LDAM", {"ldam_C": 1.0}, (16, 81))
    loss, _ = per_sample_loss(spec, [0.0, 0.0], [1, 0])
    assert loss[0] == pytest.approx(np.logaddexp(0, 0.5))
    assert loss[1] == pytest.approx(np.logaddexp(0, 1 / 3))


@pytest.mark.parametrize("kind", ["WBCE", "CB_BCE", "LDAM"])
def test_counts_required(kind):
    with pytest.raises(ConfigurationError):
        LossSpec(kind)


def test_bad_params():
    with pytest.raises(ConfigurationError):
        LossSpec("S_ML", {"margin": -1.0})
    with pytest.raises(ConfigurationError):
        LossSpec("CB_BCE", {"cb_beta": 1.0}, COUNTS)
    with pytest.raises(ConfigurationError):
        LossSpec("BCE", {"margin": 1.0})
    with pytest.raises(ConfigurationError):
        LossSpec("HINGE")


def test_nan_score_rejected():
    with pytest.raises(InvalidArgumentError):
        base_loss(LossSpec("BCE"), [np.nan], [1])


def test_extreme_logits_are_finite():
    for kind in LOSS_KINDS:
        loss, grad = base_loss(LossSpec(kind, {}, COUNTS), [-1e4, 1e4], [1, 0])
        assert np.isfinite(loss) and np.all(np.isfinite(grad))
