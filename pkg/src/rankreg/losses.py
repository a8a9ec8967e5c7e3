"""Base objectives for a single-logit binary classifier.

Every loss takes raw logits ``s`` and labels ``y`` in {0, 1} and returns the
mean loss together with its gradient with respect to each logit.  The
imbalance-aware variants reduce to plain BCE for degenerate parameters
(unit weights, zero margins, zero focusing exponent).
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, InvalidArgumentError

LOSS_KINDS = ("BCE", "WBCE", "CB_BCE", "S_ML", "S_FL", "A_ML", "A_FL", "LDAM")

# command-line spellings
LOSS_ALIASES = {
    "bce": "BCE",
    "wbce": "WBCE",
    "cb-bce": "CB_BCE",
    "s-ml": "S_ML",
    "s-fl": "S_FL",
    "a-ml": "A_ML",
    "a-fl": "A_FL",
    "ldam": "LDAM",
}

DEFAULT_PARAMS = {
    "BCE": {},
    "WBCE": {},  # pos_weight defaults to n_neg / n_pos
    "CB_BCE": {"cb_beta": 0.9999},
    "S_ML": {"margin": 0.5},
    "A_ML": {"margin_pos": 1.0, "margin_neg": 0.0},
    "S_FL": {"focal_gamma": 2.0},
    "A_FL": {"focal_gamma_pos": 0.0, "focal_gamma_neg": 2.0},
    "LDAM": {"ldam_C": 0.5},
}

_NEEDS_COUNTS = ("WBCE", "CB_BCE", "LDAM")


@dataclass(frozen=True)
class LossSpec:
    kind: str = "BCE"
    params: dict = field(default_factory=dict)
    class_counts: tuple = None  # (n_pos, n_neg)

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ConfigurationError(f"unknown loss kind {self.kind!r}")
        allowed = set(DEFAULT_PARAMS[self.kind]) | ({"pos_weight"} if self.kind == "WBCE" else set())
        unknown = set(self.params) - allowed
        if unknown:
            raise ConfigurationError(f"{self.kind} does not take parameters {sorted(unknown)}")
        for name, value in self.params.items():
            if not np.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value}")
        if "cb_beta" in self.params and not self.params["cb_beta"] < 1:
            raise ConfigurationError("cb_beta must lie in [0, 1)")
        if self.class_counts is not None:
            n_pos, n_neg = self.class_counts
            if n_pos < 0 or n_neg < 0:
                raise ConfigurationError("class counts must be nonnegative")
        elif self.kind in _NEEDS_COUNTS and not (self.kind == "WBCE" and "pos_weight" in self.params):
            raise ConfigurationError(f"{self.kind} requires class_counts")

    def resolved_params(self):
        """Parameters with defaults (including count-derived ones) filled in."""
        params = dict(DEFAULT_PARAMS[self.kind])
        params.update(self.params)
        if self.kind == "WBCE" and "pos_weight" not in params:
            n_pos, n_neg = self.class_counts
            if n_pos == 0:
                raise ConfigurationError("WBCE default pos_weight needs n_pos > 0")
            params["pos_weight"] = n_neg / n_pos
        return params


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    # exp of a nonpositive argument only, so no overflow warnings
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _bce(z, y):
    """Per-sample BCE and d/dz for logits ``z``."""
    loss = np.where(y == 1, _softplus(-z), _softplus(z))
    return loss, _sigmoid(z) - y


def _focal(s, y, gamma):
    # work in the margin z = s for positives and -s for negatives: p_t = sigmoid(z)
    sign = np.where(y == 1, 1.0, -1.0)
    z = sign * s
    log_pt = -_softplus(-z)
    pt = _sigmoid(z)
    one_minus_pt = _sigmoid(-z)
    mod = one_minus_pt**gamma
    loss = -mod * log_pt
    dz = mod * (gamma * pt * log_pt - one_minus_pt)
    return loss, sign * dz


def _class_balanced_weights(beta, n_pos, n_neg):
    if n_pos == 0 or n_neg == 0:
        raise ConfigurationError("CB_BCE needs both classes present in class_counts")
    w_pos = (1.0 - beta) / (1.0 - beta**n_pos)
    w_neg = (1.0 - beta) / (1.0 - beta**n_neg)
    mean = 0.5 * (w_pos + w_neg)
    return w_pos / mean, w_neg / mean


def per_sample_loss(spec, scores, labels):
    """Per-sample losses and their derivatives d loss_i / d score_i."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.ndim != 1 or s.size == 0:
        raise InvalidArgumentError("scores must be a nonempty one-dimensional sequence")
    if y.shape != s.shape:
        raise InvalidArgumentError("scores and labels lengths differ")
    if np.isnan(s).any():
        raise InvalidArgumentError("NaN score")
    if not np.all((y == 0) | (y == 1)):
        raise InvalidArgumentError("labels must be 0 or 1")
    y = y.astype(float)
    p = spec.resolved_params()
    kind = spec.kind

    if kind == "BCE":
        return _bce(s, y)
    if kind in ("WBCE", "CB_BCE"):
        if kind == "WBCE":
            w_pos, w_neg = p["pos_weight"], 1.0
        else:
            w_pos, w_neg = _class_balanced_weights(p["cb_beta"], *spec.class_counts)
        loss, d = _bce(s, y)
        w = np.where(y == 1, w_pos, w_neg)
        return w * loss, w * d
    if kind in ("S_ML", "A_ML", "LDAM"):
        if kind == "S_ML":
            m_pos = m_neg = p["margin"]
        elif kind == "A_ML":
            m_pos, m_neg = p["margin_pos"], p["margin_neg"]
        else:
            n_pos, n_neg = spec.class_counts
            if n_pos == 0 or n_neg == 0:
                raise ConfigurationError("LDAM needs both classes present in class_counts")
            m_pos = p["ldam_C"] / n_pos**0.25
            m_neg = p["ldam_C"] / n_neg**0.25
        shifted = np.where(y == 1, s - m_pos, s + m_neg)
        return _bce(shifted, y)
    if kind == "S_FL":
        return _focal(s, y, p["focal_gamma"])
    # A_FL
    gamma = np.where(y == 1, p["focal_gamma_pos"], p["focal_gamma_neg"])
    return _focal(s, y, gamma)


def base_loss(spec, scores, labels):
    """Mean loss over the samples and its gradient with respect to each score."""
    loss, d = per_sample_loss(spec, scores, labels)
    n = loss.size
    return float(loss.mean()), d / n
