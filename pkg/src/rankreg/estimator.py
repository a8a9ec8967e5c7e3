"""scikit-learn compatible wrapper around :func:`rankreg.trainer.train`."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .losses import LOSS_ALIASES, LOSS_KINDS
from .metrics import DEFAULT_BETAS, fpr_at_tpr, metrics_report
from .mlp import forward
from .ranking import RegConfig
from .trainer import TrainConfig, train


def _loss_kind(name):
    if name in LOSS_KINDS:
        return name
    if name in LOSS_ALIASES:
        return LOSS_ALIASES[name]
    raise ValueError(f"unknown base_loss {name!r}; choose from {sorted(LOSS_ALIASES)} or {list(LOSS_KINDS)}")


class RankRegClassifier(ClassifierMixin, BaseEstimator):
    """Binary MLP classifier trained with a base loss and an optional ranking regularizer.

    The second entry of ``classes_`` (after sorting) is treated as the
    positive class.  ``decision_function`` returns its logit.

    Parameters mirror :class:`rankreg.trainer.TrainConfig`; ``rankreg=False``
    trains the base loss alone and ignores the regularizer and buffer
    settings.  ``random_state`` must be an int or None (a fresh seed).
    """

    def __init__(
        self,
        hidden_layer_sizes=(32,),
        base_loss="bce",
        loss_params=None,
        rankreg=True,
        reg_lambda=1.0,
        gamma=1.0,
        penalty="square",
        normalize=True,
        buffer_size=32,
        buffer_strategy="dequeue-max",
        buffer_in_base_loss=True,
        batch_size=None,
        epochs=200,
        learning_rate=0.05,
        momentum=0.9,
        random_state=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.base_loss = base_loss
        self.loss_params = loss_params
        self.rankreg = rankreg
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.penalty = penalty
        self.normalize = normalize
        self.buffer_size = buffer_size
        self.buffer_strategy = buffer_strategy
        self.buffer_in_base_loss = buffer_in_base_loss
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.random_state = random_state

    def _train_config(self):
        if self.random_state is None:
            seed = int(np.random.SeedSequence().generate_state(1)[0])
        elif isinstance(self.random_state, (int, np.integer)):
            seed = int(self.random_state)
        else:
            raise ValueError("random_state must be an int or None")
        reg = None
        if self.rankreg:
            reg = RegConfig(self.reg_lambda, self.gamma, self.penalty, self.normalize)
        return TrainConfig(
            loss=_loss_kind(self.base_loss),
            loss_params=dict(self.loss_params or {}),
            reg=reg,
            batch_size=self.batch_size,
            buffer_size=self.buffer_size,
            buffer_strategy=self.buffer_strategy,
            buffer_in_base_loss=self.buffer_in_base_loss,
            hidden=tuple(self.hidden_layer_sizes),
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            seed=seed,
        )

    def _binary_targets(self, y):
        return (y == self.classes_[1]).astype(int)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError(f"RankRegClassifier needs exactly two classes, got {self.classes_.size}")
        config = self._train_config()
        self.model_, self.history_ = train(config, Dataset(X, self._binary_targets(y)))
        self.n_features_in_ = X.shape[1]
        return self

    def _validated(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def decision_function(self, X):
        X = self._validated(X)
        scores, _ = forward(self.model_, X)
        return scores

    def predict_proba(self, X):
        s = self.decision_function(X)
        p = np.exp(-np.logaddexp(0.0, -s))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        positive = self.decision_function(X) > 0
        return self.classes_[positive.astype(int)]

    def report(self, X, y, betas=DEFAULT_BETAS):
        """AUC and FPR at the given TPR levels on ``(X, y)``."""
        y = np.asarray(y)
        return metrics_report(self.decision_function(X), self._binary_targets(y), betas)


def fpr_at_tpr_scorer(beta=0.95):
    """Model-selection scorer returning minus FPR at TPR ``beta`` (larger is better)."""

    def _fpr(y_true, scores, classes):
        return fpr_at_tpr(scores, (np.asarray(y_true) == classes[1]).astype(int), beta)

    class _Scorer:
        def __call__(self, estimator, X, y):
            return -_fpr(y, estimator.decision_function(X), estimator.classes_)

        def __repr__(self):
            return f"fpr_at_tpr_scorer(beta={beta})"

    return _Scorer()
