"""Rank-order metrics: ROC curve, AUC, FPR at a fixed TPR, logit ensembling.

A sample is predicted positive at threshold ``t`` when ``score >= t``, so
tied scores always enter or leave the positive set together.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .exceptions import DegenerateLabelsError, InvalidArgumentError

DEFAULT_BETAS = (0.90, 0.92, 0.95, 0.98)

# absorbs rounding in beta * n_pos (e.g. 0.95 * 20)
_TPR_SLACK = 1e-12


def _check(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.ndim != 1 or y.shape != s.shape:
        raise InvalidArgumentError("scores and labels must be 1-d sequences of equal length")
    if np.isnan(s).any():
        raise InvalidArgumentError("NaN score")
    if not np.all((y == 0) | (y == 1)):
        raise InvalidArgumentError("labels must be 0 or 1")
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(f"need both classes, got {n_pos} positives and {n_neg} negatives")
    return s, y == 1, n_pos, n_neg


def _operating_points(s, pos):
    """Distinct thresholds (descending) with cumulative TP/FP counts at ``score >= t``."""
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    tp = np.cumsum(pos[order])
    fp = np.cumsum(~pos[order])
    # last index of each run of equal scores
    last = np.r_[np.flatnonzero(s_sorted[1:] != s_sorted[:-1]), s.size - 1]
    return s_sorted[last], tp[last], fp[last]


@dataclass
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    def __len__(self):
        return self.thresholds.size

    def to_table(self):
        """Tab-separated ``threshold fpr tpr`` rows with a header line."""
        rows = ["threshold\tfpr\ttpr"]
        rows += [f"{t!r}\t{f!r}\t{r!r}" for t, f, r in zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist())]
        return "\n".join(rows) + "\n"


def roc_curve(scores, labels):
    s, pos, n_pos, n_neg = _check(scores, labels)
    thr, tp, fp = _operating_points(s, pos)
    return RocCurve(
        thresholds=np.r_[np.inf, thr, -np.inf],
        fpr=np.r_[0.0, fp / n_neg, 1.0],
        tpr=np.r_[0.0, tp / n_pos, 1.0],
    )


def auc(scores, labels):
    """Mann-Whitney estimate: P(pos > neg) + 0.5 P(pos == neg)."""
    s, pos, n_pos, n_neg = _check(scores, labels)
    ranks = rankdata(s)  # ascending, ties get the average rank
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def fpr_at_tpr(scores, labels, beta):
    """Smallest FPR over thresholds whose TPR reaches ``beta``."""
    if not 0 < beta <= 1:
        raise InvalidArgumentError(f"beta must lie in (0, 1], got {beta}")
    s, pos, n_pos, n_neg = _check(scores, labels)
    _, tp, fp = _operating_points(s, pos)
    ok = tp / n_pos >= beta - _TPR_SLACK
    # fp is nondecreasing, so the first qualifying threshold is optimal
    return float(fp[np.argmax(ok)] / n_neg)


@dataclass
class MetricsReport:
    auc: float
    fpr_at: dict
    counts: tuple
    roc: RocCurve = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "auc": self.auc,
            "fpr_at": {repr(float(b)): v for b, v in sorted(self.fpr_at.items())},
            "n_pos": self.counts[0],
            "n_neg": self.counts[1],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["auc"], {float(b): v for b, v in d["fpr_at"].items()}, (d["n_pos"], d["n_neg"]))


def metrics_report(scores, labels, betas=DEFAULT_BETAS):
    s, pos, n_pos, n_neg = _check(scores, labels)
    fprs = {float(b): fpr_at_tpr(s, pos.astype(int), b) for b in sorted(betas)}
    return MetricsReport(
        auc=auc(s, pos.astype(int)),
        fpr_at=fprs,
        counts=(n_pos, n_neg),
        roc=roc_curve(s, pos.astype(int)),
    )


def ensemble_scores(score_vectors):
    """Average raw logits across models."""
    vectors = [np.asarray(v, dtype=float) for v in score_vectors]
    if not vectors:
        raise InvalidArgumentError("need at least one score vector")
    if any(v.shape != vectors[0].shape for v in vectors):
        raise InvalidArgumentError("score vectors differ in length")
    return np.mean(vectors, axis=0)
