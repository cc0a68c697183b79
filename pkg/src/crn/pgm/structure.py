"""Score-based structure learning: greedy hill climbing over BIC.

The search considers add / remove / reverse single-edge moves, keeps the
graph acyclic and the in-degree bounded, and is fully deterministic: moves
are enumerated in lexicographic order and only strictly improving moves are
taken.
"""

from __future__ import annotations

import math

import numpy as np

from .bayesnet import BayesNet, DiscreteVariable, PgmError, fit_cpts, topological_order

MAX_PARENTS = 3
MIN_ROWS = 50


class InsufficientDataError(PgmError):
    pass


def _local_bic(
    data: dict[str, np.ndarray],
    cards: dict[str, int],
    child: str,
    parents: tuple[str, ...],
    n: int,
) -> float:
    """BIC contribution of one family: log-likelihood minus 0.5 log(n) * params."""
    card = cards[child]
    pcards = [cards[p] for p in parents]
    shape = tuple(pcards) + (card,)
    counts = np.zeros(shape)
    idx = tuple(data[p] for p in parents) + (data[child],)
    np.add.at(counts, idx, 1.0)
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.where(counts > 0, np.log(counts / np.where(totals > 0, totals, 1.0)), 0.0)
    loglik = float((counts * log_p).sum())
    num_params = (card - 1) * int(np.prod(pcards)) if pcards else (card - 1)
    return loglik - 0.5 * math.log(n) * num_params


class _Scorer:
    """Caches per-family BIC scores."""

    def __init__(self, data: dict[str, np.ndarray], cards: dict[str, int]):
        self.data = {k: np.asarray(v, dtype=int) for k, v in data.items()}
        self.cards = cards
        self.n = len(next(iter(self.data.values())))
        self._cache: dict[tuple[str, tuple[str, ...]], float] = {}

    def family(self, child: str, parents) -> float:
        key = (child, tuple(sorted(parents)))
        if key not in self._cache:
            self._cache[key] = _local_bic(self.data, self.cards, child, key[1], self.n)
        return self._cache[key]


def _creates_cycle(parents: dict[str, list[str]], src: str, dst: str) -> bool:
    """Would adding src -> dst close a cycle? (is src reachable from dst?)"""
    stack, seen = [src], set()
    while stack:
        node = stack.pop()
        if node == dst:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(parents.get(node, []))
    return False


def learn_structure(
    data: dict[str, np.ndarray],
    variables: dict[str, DiscreteVariable],
    target: str | None = None,
    max_parents: int = MAX_PARENTS,
) -> BayesNet:
    """Greedy BIC hill climbing from the empty graph.

    ``target`` is only validated to exist; all nodes (including the target)
    participate in the search. Returns a net with fitted CPTs.
    """
    names = sorted(variables)
    if target is not None and target not in variables:
        raise PgmError(f"target {target!r} not among variables")
    n = len(next(iter(data.values()))) if data else 0
    if n < MIN_ROWS:
        raise InsufficientDataError(f"need >= {MIN_ROWS} rows, got {n}")
    for name in names:
        col = np.asarray(data[name])
        if np.isnan(col.astype(float)).any():
            raise PgmError(f"column {name!r} contains missing values")

    cards = {name: variables[name].cardinality for name in names}
    scorer = _Scorer(data, cards)
    parents: dict[str, list[str]] = {name: [] for name in names}

    while True:
        best_delta = 0.0
        best_move = None
        for src in names:
            for dst in names:
                if src == dst:
                    continue
                if src in parents[dst]:
                    # remove src -> dst
                    new_ps = [p for p in parents[dst] if p != src]
                    delta = scorer.family(dst, new_ps) - scorer.family(dst, parents[dst])
                    if delta > best_delta + 1e-12:
                        best_delta, best_move = delta, ("remove", src, dst)
                    # reverse src -> dst
                    if len(parents[src]) < max_parents and not _creates_cycle(
                        {**parents, dst: new_ps}, dst, src
                    ):
                        delta = (
                            scorer.family(dst, new_ps)
                            - scorer.family(dst, parents[dst])
                            + scorer.family(src, parents[src] + [dst])
                            - scorer.family(src, parents[src])
                        )
                        if delta > best_delta + 1e-12:
                            best_delta, best_move = delta, ("reverse", src, dst)
                elif len(parents[dst]) < max_parents and not _creates_cycle(parents, src, dst):
                    delta = scorer.family(dst, parents[dst] + [src]) - scorer.family(dst, parents[dst])
                    if delta > best_delta + 1e-12:
                        best_delta, best_move = delta, ("add", src, dst)
        if best_move is None:
            break
        kind, src, dst = best_move
        if kind == "add":
            parents[dst] = sorted(parents[dst] + [src])
        elif kind == "remove":
            parents[dst] = [p for p in parents[dst] if p != src]
        else:
            parents[dst] = [p for p in parents[dst] if p != src]
            parents[src] = sorted(parents[src] + [dst])

    topological_order(parents)  # sanity: acyclic by construction
    return fit_cpts(variables, parents, {k: np.asarray(v, dtype=int) for k, v in data.items()})
