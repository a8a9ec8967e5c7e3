"""Exact ranks, the squared-rank regularizer and its blackbox score gradient.

Ranks follow competition ranking: rank 1 is the highest score and tied
scores share the best rank of their group.  Ranking is piecewise constant,
so gradients with respect to scores come from the continuous interpolation
of a blackbox combinatorial solver: perturb the scores along the incoming
rank gradient, re-rank, and return the scaled rank difference.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InvalidArgumentError, NoPositivesError

PENALTIES = ("raw", "square", "cube", "exp")


@dataclass(frozen=True)
class RegConfig:
    """Settings of the ranking regularizer.

    ``lam`` weights the regularizer in the composite objective, ``gamma`` is
    the interpolation step of the blackbox gradient and ``penalty`` the shape
    applied to each positive's (optionally ``r / N`` normalized) rank.
    """

    lam: float = 1.0
    gamma: float = 1.0
    penalty: str = "square"
    normalize: bool = True

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigurationError(f"lambda must be a finite value >= 0, got {self.lam}")
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ConfigurationError(f"gamma must be a finite value > 0, got {self.gamma}")
        if self.penalty not in PENALTIES:
            raise ConfigurationError(
                f"unknown penalty {self.penalty!r}; expected one of {PENALTIES}"
            )


def _as_scores(scores, name="scores"):
    a = np.asarray(scores, dtype=float)
    if a.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional")
    if a.size == 0:
        raise InvalidArgumentError(f"{name} must be nonempty")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return a


def _positive_mask(labels, n):
    y = np.asarray(labels)
    if y.shape != (n,):
        raise InvalidArgumentError(f"labels must have length {n}, got shape {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise InvalidArgumentError("labels must be 0 or 1")
    pos = y == 1
    if not pos.any():
        raise NoPositivesError("no positive sample among the ranked scores")
    return pos


def rank(scores):
    """Return ``1 + #{j : scores[j] > scores[i]}`` for every ``i``.

    >>> rank([0.6, 0.9, 0.1]).tolist()
    [2, 1, 3]
    >>> rank([0.5, 0.5, 0.2]).tolist()
    [1, 1, 3]
    """
    a = _as_scores(scores)
    ordered = np.sort(a)
    n_greater = a.size - np.searchsorted(ordered, a, side="right")
    return (n_greater + 1).astype(np.int64)


def _penalty(r, kind):
    if kind == "raw":
        return r
    if kind == "square":
        return r**2
    if kind == "cube":
        return r**3
    return np.exp(r)


def _penalty_slope(r, kind):
    if kind == "raw":
        return np.ones_like(r)
    if kind == "square":
        return 2.0 * r
    if kind == "cube":
        return 3.0 * r**2
    return np.exp(r)


def rankreg_value(scores, labels, config=RegConfig()):
    """Mean penalized rank of the positives (without the ``lam`` weight)."""
    a = _as_scores(scores)
    pos = _positive_mask(labels, a.size)
    r = rank(a)[pos].astype(float)
    if config.normalize:
        r /= a.size
    return float(np.mean(_penalty(r, config.penalty)))


def rankreg_grad_wrt_ranks(ranks, labels, config=RegConfig()):
    """Derivative of ``lam * rankreg_value`` with respect to the rank vector."""
    r = np.asarray(ranks, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise InvalidArgumentError("ranks must be a nonempty one-dimensional sequence")
    pos = _positive_mask(labels, r.size)
    n = r.size
    scale = config.lam / pos.sum()
    if config.normalize:
        slope = _penalty_slope(r[pos] / n, config.penalty) / n
    else:
        slope = _penalty_slope(r[pos], config.penalty)
    grad = np.zeros(n)
    grad[pos] = scale * slope
    return grad


def blackbox_rank_grad(scores, incoming_grad, gamma):
    """Interpolation gradient ``-(rank(a) - rank(a + gamma * g)) / gamma``."""
    a = _as_scores(scores)
    g = _as_scores(incoming_grad, "incoming_grad")
    if g.size != a.size:
        raise InvalidArgumentError("scores and incoming_grad lengths differ")
    if not np.isfinite(gamma) or gamma <= 0:
        raise InvalidArgumentError(f"gamma must be > 0, got {gamma}")
    perturbed = a + gamma * g
    if not np.all(np.isfinite(perturbed)):
        raise InvalidArgumentError("perturbed scores overflowed")
    return -(rank(a) - rank(perturbed)) / gamma


def rankreg_score_grad(scores, labels, config=RegConfig()):
    """Weighted regularizer value and its blackbox gradient w.r.t. ``scores``."""
    a = _as_scores(scores)
    value = config.lam * rankreg_value(a, labels, config)
    incoming = rankreg_grad_wrt_ranks(rank(a), labels, config)
    return value, blackbox_rank_grad(a, incoming, config.gamma)
