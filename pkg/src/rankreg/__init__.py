"""Rank-based regularization for imbalanced binary classification."""
from .buffer import PositiveBuffer
from .data import Dataset, flip_labels, gen_gaussian_imbalanced, load_table, save_table, stratified_split
from .estimator import RankRegClassifier, fpr_at_tpr_scorer
from .exceptions import (
    ConfigurationError,
    DegenerateLabelsError,
    InvalidArgumentError,
    NoPositivesError,
    NumericError,
    ParseError,
    RankRegError,
)
from .losses import LossSpec, base_loss
from .metrics import MetricsReport, auc, ensemble_scores, fpr_at_tpr, metrics_report, roc_curve
from .mlp import Mlp, init_mlp, load_model, save_model
from .ranking import RegConfig, rank, rankreg_score_grad, rankreg_value
from .trainer import TrainConfig, TrainHistory, evaluate, train, train_ensemble

__version__ = "0.1.0"
