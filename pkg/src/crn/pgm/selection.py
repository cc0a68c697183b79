"""Feature-group evaluation and selection with a discrete Bayesian network.

Each candidate group is scored by a walk-forward protocol inside the
training split: a network is fitted on the first 80% of training rows and
next-day direction accuracy is measured on the remaining 20%. Test rows are
never touched.
"""

from __future__ import annotations

import logging

import numpy as np

from ..indicators import FEATURE_GROUPS, compute_feature_frame, group_columns
from ..market_data import Dataset
from .bayesnet import infer
from .discretize import DIRECTION, discretize_frame
from .structure import learn_structure

logger = logging.getLogger(__name__)

FIT_FRACTION = 0.8


def evaluate_feature_group(ds: Dataset, group: str, bins: int = 3) -> float:
    """Walk-forward next-day direction accuracy of one feature group.

    Fits on the first 80% of the training split and scores the last 20%;
    deterministic for identical inputs.
    """
    train = ds.slice(0, ds.split_index)
    frame = compute_feature_frame(train, group)
    n = len(frame)
    fit_rows = np.zeros(n, dtype=bool)
    fit_rows[: int(FIT_FRACTION * n)] = True

    data, variables = discretize_frame(frame, train.column("close"), bins=bins, fit_rows=fit_rows)
    row_index = data.pop("_row_index")
    in_fit = fit_rows[row_index]
    fit_data = {k: v[in_fit] for k, v in data.items()}
    val_data = {k: v[~in_fit] for k, v in data.items()}
    n_val = len(val_data[DIRECTION])
    if n_val == 0:
        raise ValueError("validation segment is empty")
    if len(np.unique(val_data[DIRECTION])) < 2:
        logger.warning("%s/%s: validation segment has a single direction class", ds.asset, group)

    net = learn_structure(fit_data, variables, target=DIRECTION)
    feature_names = [v for v in variables if v != DIRECTION]
    correct = 0
    for i in range(n_val):
        evidence = {f: int(val_data[f][i]) for f in feature_names}
        posterior = infer(net, evidence, DIRECTION)
        correct += int(np.argmax(posterior) == val_data[DIRECTION][i])
    return correct / n_val


def select_feature_group(ds: Dataset, bins: int = 3) -> tuple[str, dict[str, float]]:
    """Pick the group with the best walk-forward accuracy.

    Ties resolve toward the group with fewer features. Returns the chosen
    group id along with all per-group accuracies.
    """
    scores = {group: evaluate_feature_group(ds, group, bins=bins) for group in FEATURE_GROUPS}
    best = min(
        scores,
        key=lambda g: (-scores[g], len(group_columns(g))),
    )
    return best, scores
