"""Probabilistic graphical models: feature selection and direction prediction."""

from .bayesnet import (
    BayesNet,
    DiscreteVariable,
    PgmError,
    ZeroProbabilityEvidenceError,
    brute_force_joint,
    fit_cpts,
    infer,
)
from .dbn import DbnModel, DirectionPrediction, dbn_predict, filter_window, fit_dbn
from .discretize import DIRECTION, DOWN, UP, direction_labels, discretize_frame
from .selection import evaluate_feature_group, select_feature_group
from .structure import InsufficientDataError, learn_structure

__all__ = [
    "BayesNet",
    "DbnModel",
    "DirectionPrediction",
    "DiscreteVariable",
    "DIRECTION",
    "DOWN",
    "UP",
    "InsufficientDataError",
    "PgmError",
    "ZeroProbabilityEvidenceError",
    "brute_force_joint",
    "dbn_predict",
    "direction_labels",
    "discretize_frame",
    "evaluate_feature_group",
    "filter_window",
    "fit_cpts",
    "fit_dbn",
    "infer",
    "learn_structure",
    "select_feature_group",
]
