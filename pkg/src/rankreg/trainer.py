"""Training loop for a base loss plus the optional ranking regularizer.

Each step stacks the shuffled batch with the whole positive buffer, scores
both, adds the base-loss gradient (batch rows only, or batch and buffer) to
the regularizer's blackbox gradient over all rows, backpropagates, takes a
momentum-SGD step and finally offers the batch positives to the buffer.
Buffered scores are refreshed with the current model once per epoch.
"""
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .buffer import PositiveBuffer
from .data import stratified_split
from .exceptions import ConfigurationError, NoPositivesError
from .losses import LossSpec, base_loss
from .metrics import DEFAULT_BETAS, ensemble_scores, metrics_report
from .mlp import OptimizerState, backward, forward, init_mlp, sgd_step
from .ranking import RegConfig, rankreg_score_grad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "BCE"
    loss_params: dict = field(default_factory=dict)
    reg: RegConfig = None
    batch_size: int = None  # None: 32 with the regularizer, 64 without
    buffer_size: int = 32
    buffer_strategy: str = "dequeue-max"
    buffer_in_base_loss: bool = True
    hidden: tuple = (32,)
    epochs: int = 200
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    betas: tuple = DEFAULT_BETAS

    def __post_init__(self):
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.buffer_size < 0:
            raise ConfigurationError("buffer_size must be >= 0")
        # fail fast on bad loss names/params, counts are only known at fit time
        LossSpec(self.loss, dict(self.loss_params), (1, 1))

    @property
    def effective_batch_size(self):
        if self.batch_size is not None:
            return self.batch_size
        return 32 if self.reg is not None else 64

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("reg") is not None:
            d["reg"] = RegConfig(**d["reg"])
        d["hidden"] = tuple(d.get("hidden", (32,)))
        d["betas"] = tuple(d.get("betas", DEFAULT_BETAS))
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    base_loss: float
    reg_value: float  # None when no step of the epoch ran the regularizer
    reg_skipped: int
    train: object = None  # MetricsReport
    val: object = None

    def to_dict(self):
        return {
            "epoch": self.epoch,
            "base_loss": self.base_loss,
            "reg_value": self.reg_value,
            "reg_skipped": self.reg_skipped,
            "train": None if self.train is None else self.train.to_dict(),
            "val": None if self.val is None else self.val.to_dict(),
        }


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def to_dict(self):
        return {"schema": "rankreg-history/1", "epochs": [r.to_dict() for r in self.records]}


def _report_or_none(model, dataset, betas):
    if dataset is None or dataset.n_pos == 0 or dataset.n_neg == 0:
        return None
    return evaluate(model, dataset, betas)


def train(config, train_set, val_set=None, step_hook=None):
    """Fit a fresh MLP; return ``(model, history)``.

    ``step_hook(base_grad, reg_grad, total_grad)`` is called after every step
    with per-row score gradients over the merged batch.
    """
    if config.reg is not None and train_set.n_pos == 0:
        raise NoPositivesError("the ranking regularizer needs at least one positive training sample")
    spec = LossSpec(config.loss, dict(config.loss_params), (train_set.n_pos, train_set.n_neg))
    init_seed, shuffle_seed = np.random.SeedSequence(config.seed).spawn(2)
    model = init_mlp([train_set.dim, *config.hidden, 1], init_seed)
    opt = OptimizerState(config.learning_rate, config.momentum)
    rng = np.random.default_rng(shuffle_seed)
    use_buffer = config.reg is not None and config.buffer_size > 0
    buffer = PositiveBuffer(config.buffer_size, config.buffer_strategy) if use_buffer else None
    X, y = train_set.X, train_set.y
    bs = config.effective_batch_size
    history = TrainHistory()

    for epoch in range(config.epochs):
        if buffer is not None and epoch > 0:
            buffer.refresh_scores(model.decision_function)
        perm = rng.permutation(len(y))
        base_sum, reg_sum, n_steps, n_reg, n_skip = 0.0, 0.0, 0, 0, 0
        for start in range(0, len(y), bs):
            idx = perm[start : start + bs]
            Xb, yb = X[idx], y[idx]
            sb, cache_b = forward(model, Xb)
            n_b = sb.size
            if buffer is not None and len(buffer):
                su, cache_u = forward(model, buffer.features())
            else:
                su, cache_u = np.empty(0), None
            scores = np.concatenate([sb, su])
            labels = np.concatenate([yb, np.ones(su.size, dtype=yb.dtype)])

            base_grad = np.zeros(scores.size)
            if config.buffer_in_base_loss and cache_u is not None:
                loss, base_grad[:] = base_loss(spec, scores, labels)
            else:
                loss, base_grad[:n_b] = base_loss(spec, sb, yb)
            base_sum += loss

            reg_grad = np.zeros(scores.size)
            if config.reg is not None:
                if labels.any():
                    value, reg_grad = rankreg_score_grad(scores, labels, config.reg)
                    reg_sum += value
                    n_reg += 1
                else:
                    n_skip += 1
                    logger.debug("epoch %d: batch without positives, regularizer skipped", epoch)
            total = base_grad + reg_grad
            if step_hook is not None:
                step_hook(base_grad, reg_grad, total)

            grads = backward(model, cache_b, total[:n_b])
            if cache_u is not None:
                for g, gu in zip(grads, backward(model, cache_u, total[n_b:])):
                    g += gu
            sgd_step(model, grads, opt)
            n_steps += 1

            if buffer is not None:
                for i in np.flatnonzero(yb == 1):
                    buffer.push(idx[i], Xb[i], sb[i])

        if n_skip:
            logger.warning("epoch %d: regularizer skipped on %d batch(es) without positives", epoch, n_skip)
        history.records.append(
            EpochRecord(
                epoch=epoch,
                base_loss=base_sum / max(n_steps, 1),
                reg_value=reg_sum / n_reg if n_reg else None,
                reg_skipped=n_skip,
                train=_report_or_none(model, train_set, config.betas),
                val=_report_or_none(model, val_set, config.betas),
            )
        )
    return model, history


def evaluate(model, dataset, betas=DEFAULT_BETAS):
    scores, _ = forward(model, dataset.X)
    return metrics_report(scores, dataset.y, betas)


def member_seed(seed, member):
    return seed + member


def train_member(config, train_set, member, seed, train_fraction=0.9):
    """Train ensemble member ``member`` on its own stratified resplit."""
    s = member_seed(seed, member)
    if train_fraction < 1:
        tr, va = stratified_split(train_set, (train_fraction, 1 - train_fraction), s)
    else:
        tr, va = train_set, None
    return train(replace(config, seed=s), tr, va)


def train_ensemble(config, train_set, test_set, k=10, seed=0, train_fraction=0.9):
    """Train ``k`` members and score ``test_set`` with their averaged logits.

    Returns ``(models, ensemble_report, member_reports)``.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    models, member_scores, member_reports = [], [], []
    for m in range(k):
        model, _ = train_member(config, train_set, m, seed, train_fraction)
        scores, _ = forward(model, test_set.X)
        models.append(model)
        member_scores.append(scores)
        member_reports.append(metrics_report(scores, test_set.y, config.betas))
    report = metrics_report(ensemble_scores(member_scores), test_set.y, config.betas)
    return models, report, member_reports
