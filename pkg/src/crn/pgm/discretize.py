"""Quantile discretization of feature frames for discrete-network fitting.

Bin edges are fitted on training rows only, so appending test rows never
changes the binning (leakage guard). The binary ``direction`` column is
Up (1) when the next close is strictly higher, Down (0) otherwise; a zero
change counts as Down.
"""

from __future__ import annotations

import logging

import numpy as np

from ..indicators import FeatureFrame
from .bayesnet import DiscreteVariable

logger = logging.getLogger(__name__)

DEFAULT_BINS = 3
DIRECTION = "direction"
UP, DOWN = 1, 0


def direction_labels(closes: np.ndarray) -> np.ndarray:
    """direction_t = Up iff close_{t+1} > close_t; length is len(closes) - 1."""
    closes = np.asarray(closes, dtype=float)
    return (np.diff(closes) > 0).astype(int)


def fit_bin_edges(values: np.ndarray, bins: int) -> tuple[float, ...]:
    """Interior quantile cut points over the fit rows (len = bins - 1).

    A constant column yields no usable quantile spread; it degrades to a
    single bin with a warning rather than failing.
    """
    values = np.asarray(values, dtype=float)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if float(np.min(values)) == float(np.max(values)):
        logger.warning("constant column: falling back to a single bin")
        return ()
    qs = np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1])
    return tuple(sorted(set(float(q) for q in qs)))


def assign_bins(values: np.ndarray, edges: tuple[float, ...]) -> np.ndarray:
    """Map values to bin indices 0..len(edges); values == edge go right."""
    return np.searchsorted(np.asarray(edges), np.asarray(values, dtype=float), side="left").astype(int)


def discretize_frame(
    frame: FeatureFrame,
    closes: np.ndarray,
    bins: int = DEFAULT_BINS,
    fit_rows: np.ndarray | None = None,
) -> tuple[dict[str, np.ndarray], dict[str, DiscreteVariable]]:
    """Discretize all feature columns and attach the direction target.

    ``fit_rows`` is a boolean mask (over the frame's rows) selecting the
    rows used to fit quantile edges; defaults to every unmasked row. The
    returned frame drops warm-up rows and the final row (which has no
    next-day direction); all returned columns are aligned and equal length.
    """
    n = len(frame)
    usable = ~frame.mask
    usable[-1:] = False  # last row has no next-day direction
    if fit_rows is None:
        fit_rows = usable
    else:
        fit_rows = np.asarray(fit_rows, dtype=bool) & usable
    if not fit_rows.any():
        raise ValueError("no usable fit rows")

    variables: dict[str, DiscreteVariable] = {}
    data: dict[str, np.ndarray] = {}
    for name, col in frame.columns.items():
        edges = fit_bin_edges(col[fit_rows], bins)
        variables[name] = DiscreteVariable(name, len(edges) + 1, edges)
        data[name] = assign_bins(col[usable], edges)

    direction_full = np.full(n, -1)
    direction_full[:-1] = direction_labels(closes)
    data[DIRECTION] = direction_full[usable]
    variables[DIRECTION] = DiscreteVariable(DIRECTION, 2)
    data["_row_index"] = np.flatnonzero(usable)
    return data, variables
