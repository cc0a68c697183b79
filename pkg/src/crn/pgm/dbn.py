"""Two-slice temporal network for next-day direction prediction.

The model is first-order: one intra-slice structure (shared by every slice)
plus inter-slice edges from each variable's previous copy to its current
copy, and BIC-selected feature(t-1) -> direction(t) edges. Prediction
consumes a 5-day evidence window by forward filtering the binary direction
chain, which is exact here because all feature copies are observed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bayesnet import BayesNet, DiscreteVariable, PgmError, fit_cpts
from .discretize import DIRECTION, DOWN, UP
from .structure import InsufficientDataError, _Scorer, learn_structure

WINDOW_LENGTH = 5
MIN_TRAIN_ROWS = 100
MAX_INTER_DIRECTION_PARENTS = 3

PREV = "prev__"  # name prefix for the t-1 copy inside the transition net


@dataclass(frozen=True)
class DirectionPrediction:
    """Posterior probabilities of next-day Up and Down movements."""

    p_up: float
    p_down: float

    def __post_init__(self):
        if not (0.0 <= self.p_up <= 1.0 and 0.0 <= self.p_down <= 1.0):
            raise PgmError("probabilities out of [0, 1]")
        if abs(self.p_up + self.p_down - 1.0) > 1e-12:
            raise PgmError("p_up + p_down must equal 1")


@dataclass
class DbnModel:
    """Fitted two-slice model.

    ``initial`` covers the first slice (intra-slice parents only);
    ``transition`` covers slice t given slice t-1, with prev-copy variables
    named with the :data:`PREV` prefix.
    """

    variables: dict[str, DiscreteVariable]
    intra_parents: dict[str, list[str]]
    inter_parents: dict[str, list[str]]  # current var -> prev-slice parent names
    initial: BayesNet
    transition: BayesNet
    window_length: int = WINDOW_LENGTH
    feature_group: str | None = None

    @property
    def feature_names(self) -> list[str]:
        return [n for n in self.variables if n != DIRECTION]

    def unroll(self, n_slices: int) -> BayesNet:
        """Expand into an explicit BN over ``n_slices`` slices.

        Variable ``x`` in slice ``s`` (1-based) is named ``f"{x}@{s}"``.
        Used by the enumeration oracle; prediction goes through filtering.
        """
        variables: dict[str, DiscreteVariable] = {}
        parents: dict[str, list[str]] = {}
        cpts: dict[str, np.ndarray] = {}
        for s in range(1, n_slices + 1):
            for name, var in self.variables.items():
                key = f"{name}@{s}"
                variables[key] = DiscreteVariable(key, var.cardinality, var.bin_edges)
                if s == 1:
                    parents[key] = [f"{p}@1" for p in self.initial.parents[name]]
                    cpts[key] = self.initial.cpts[name]
                else:
                    ps = []
                    for p in self.transition.parents[name]:
                        if p.startswith(PREV):
                            ps.append(f"{p[len(PREV):]}@{s - 1}")
                        else:
                            ps.append(f"{p}@{s}")
                    parents[key] = ps
                    cpts[key] = self.transition.cpts[name]
        return BayesNet(variables=variables, parents=parents, cpts=cpts)


def _lagged_data(data: dict[str, np.ndarray], row_index: np.ndarray) -> dict[str, np.ndarray]:
    """Pair consecutive-day rows into (prev, cur) columns."""
    keep = np.flatnonzero(np.diff(row_index) == 1)
    lagged: dict[str, np.ndarray] = {}
    for name, col in data.items():
        lagged[PREV + name] = col[keep]
        lagged[name] = col[keep + 1]
    return lagged


def fit_dbn(
    data: dict[str, np.ndarray],
    variables: dict[str, DiscreteVariable],
    feature_group: str | None = None,
    max_parents: int = 3,
) -> DbnModel:
    """Fit the two-slice model from a discretized single-slice frame.

    ``data`` must contain every variable column plus ``_row_index`` (the
    original row number of each usable row, used to pair consecutive days).
    """
    row_index = np.asarray(data["_row_index"], dtype=int)
    slice_data = {k: np.asarray(v, dtype=int) for k, v in data.items() if k != "_row_index"}
    n = len(row_index)
    if n < MIN_TRAIN_ROWS:
        raise InsufficientDataError(f"need >= {MIN_TRAIN_ROWS} usable training rows, got {n}")

    intra_net = learn_structure(slice_data, variables, target=DIRECTION, max_parents=max_parents)
    intra_parents = {k: list(v) for k, v in intra_net.parents.items()}

    # Fixed inter-slice persistence edges: every variable keeps its own
    # previous copy as a parent.
    inter_parents = {name: [name] for name in variables}

    lagged = _lagged_data(slice_data, row_index)
    lag_cards = {}
    for name, var in variables.items():
        lag_cards[name] = var.cardinality
        lag_cards[PREV + name] = var.cardinality
    scorer = _Scorer(lagged, lag_cards)

    def dir_parents(extra: list[str]) -> list[str]:
        return sorted(intra_parents[DIRECTION]) + [PREV + p for p in inter_parents[DIRECTION] + extra]

    # Greedy BIC selection of feature(t-1) -> direction(t) edges.
    chosen: list[str] = []
    candidates = sorted(n_ for n_ in variables if n_ != DIRECTION)
    while len(chosen) < MAX_INTER_DIRECTION_PARENTS:
        base = scorer.family(DIRECTION, dir_parents(chosen))
        best, best_delta = None, 0.0
        for cand in candidates:
            if cand in chosen:
                continue
            delta = scorer.family(DIRECTION, dir_parents(chosen + [cand])) - base
            if delta > best_delta + 1e-12:
                best, best_delta = cand, delta
        if best is None:
            break
        chosen.append(best)
    inter_parents[DIRECTION] = sorted(inter_parents[DIRECTION] + chosen)

    initial = fit_cpts(variables, {k: list(v) for k, v in intra_parents.items()}, slice_data)

    trans_variables = dict(variables)
    trans_parents: dict[str, list[str]] = {}
    for name, var in variables.items():
        trans_variables[PREV + name] = DiscreteVariable(PREV + name, var.cardinality, var.bin_edges)
        trans_parents[PREV + name] = []
        trans_parents[name] = sorted(intra_parents[name]) + sorted(PREV + p for p in inter_parents[name])
    transition = fit_cpts(trans_variables, trans_parents, lagged)

    return DbnModel(
        variables=variables,
        intra_parents=intra_parents,
        inter_parents=inter_parents,
        initial=initial,
        transition=transition,
        feature_group=feature_group,
    )


def filter_window(model: DbnModel, window: list[dict[str, int]]) -> np.ndarray:
    """Forward-filter the direction chain over an observation window.

    Each window entry maps every feature name to its bin index. Returns the
    posterior over the direction variable at the final slice.
    """
    if not window:
        raise PgmError("window must be nonempty")
    for obs in window:
        missing = [f for f in model.feature_names if f not in obs]
        if missing:
            raise PgmError(f"window is missing observed features: {missing}")

    def slice_likelihood(net: BayesNet, obs: dict[str, int], prev_obs: dict[str, int] | None):
        """Per-direction-state product of all factors local to one slice."""
        belief_factor = np.ones(2)
        for d in (DOWN, UP):
            p = 1.0
            state = {DIRECTION: d}
            state.update(obs)
            if prev_obs is not None:
                state.update({PREV + k: v for k, v in prev_obs.items()})
            for name in model.feature_names:
                idx = tuple(state[par] for par in net.parents[name]) + (state[name],)
                p *= net.cpts[name][idx]
            belief_factor[d] = p
        return belief_factor

    first = window[0]
    belief = np.empty(2)
    for d in (DOWN, UP):
        state = {DIRECTION: d, **first}
        idx = tuple(state[p] for p in model.initial.parents[DIRECTION]) + (d,)
        belief[d] = model.initial.cpts[DIRECTION][idx]
    belief *= slice_likelihood(model.initial, first, None)
    if belief.sum() <= 0:
        raise PgmError("window has zero probability under the model")
    belief /= belief.sum()

    for s in range(1, len(window)):
        obs, prev_obs = window[s], window[s - 1]
        new_belief = np.zeros(2)
        for d in (DOWN, UP):
            for d_prev in (DOWN, UP):
                state = {DIRECTION: d, PREV + DIRECTION: d_prev}
                state.update(obs)
                state.update({PREV + k: v for k, v in prev_obs.items()})
                idx = tuple(state[p] for p in model.transition.parents[DIRECTION]) + (d,)
                new_belief[d] += belief[d_prev] * model.transition.cpts[DIRECTION][idx]
        new_belief *= slice_likelihood(model.transition, obs, prev_obs)
        if new_belief.sum() <= 0:
            raise PgmError("window has zero probability under the model")
        belief = new_belief / new_belief.sum()
    return belief


def dbn_predict(model: DbnModel, window: list[dict[str, int]]) -> DirectionPrediction:
    """Posterior direction probabilities after filtering a 5-day window."""
    if len(window) != model.window_length:
        raise PgmError(f"window must hold exactly {model.window_length} days, got {len(window)}")
    belief = filter_window(model, window)
    return DirectionPrediction(p_up=float(belief[UP]), p_down=float(belief[DOWN]))


def save_json(model: DbnModel, path) -> None:
    from . import bayesnet

    doc = {
        "window_length": model.window_length,
        "feature_group": model.feature_group,
        "variables": [
            {"name": v.name, "cardinality": v.cardinality, "bin_edges": list(v.bin_edges)}
            for v in model.variables.values()
        ],
        "intra_parents": model.intra_parents,
        "inter_parents": model.inter_parents,
        "initial": bayesnet.to_json_dict(model.initial),
        "transition": bayesnet.to_json_dict(model.transition),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def load_json(path) -> DbnModel:
    from . import bayesnet

    with open(path) as fh:
        doc = json.load(fh)
    variables = {
        v["name"]: DiscreteVariable(v["name"], v["cardinality"], tuple(v["bin_edges"]))
        for v in doc["variables"]
    }
    return DbnModel(
        variables=variables,
        intra_parents={k: list(v) for k, v in doc["intra_parents"].items()},
        inter_parents={k: list(v) for k, v in doc["inter_parents"].items()},
        initial=bayesnet.from_json_dict(doc["initial"]),
        transition=bayesnet.from_json_dict(doc["transition"]),
        window_length=doc["window_length"],
        feature_group=doc["feature_group"],
    )
