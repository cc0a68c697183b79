"""Discrete Bayesian network: CPT fitting and exact inference.

The network is a DAG over named discrete variables. Each variable carries a
CPT of shape ``(card(parent_1), ..., card(parent_k), card(var))``; every row
(last axis) sums to 1. Inference is exact: variable elimination for the
production path and full joint enumeration as the independent oracle.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

CPT_ROW_TOL = 1e-9


class PgmError(Exception):
    pass


class ZeroProbabilityEvidenceError(PgmError):
    """Evidence has probability zero under the model."""


@dataclass(frozen=True)
class DiscreteVariable:
    """A discrete variable, optionally with the bin edges it was built from."""

    name: str
    cardinality: int
    bin_edges: tuple[float, ...] = ()

    def __post_init__(self):
        if self.cardinality < 1:
            raise PgmError(f"{self.name}: cardinality must be >= 1")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise PgmError(f"{self.name}: bin edges not strictly increasing")


@dataclass
class BayesNet:
    """DAG + CPTs over discrete variables."""

    variables: dict[str, DiscreteVariable]
    parents: dict[str, list[str]]
    cpts: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        order = topological_order(self.parents)  # raises on cycles
        for name in self.variables:
            if name not in self.parents:
                self.parents[name] = []
        for name, cpt in self.cpts.items():
            self._check_cpt(name, cpt)
        self._order = order

    def _check_cpt(self, name: str, cpt: np.ndarray) -> None:
        expected = tuple(self.variables[p].cardinality for p in self.parents[name])
        expected += (self.variables[name].cardinality,)
        if cpt.shape != expected:
            raise PgmError(f"{name}: CPT shape {cpt.shape} != {expected}")
        if not np.allclose(cpt.sum(axis=-1), 1.0, atol=CPT_ROW_TOL):
            raise PgmError(f"{name}: CPT rows do not sum to 1")

    def topo_order(self) -> list[str]:
        return list(self._order)


def topological_order(parents: dict[str, list[str]]) -> list[str]:
    """Deterministic (lexicographic) topological order; raises on cycles."""
    nodes = sorted(set(parents) | {p for ps in parents.values() for p in ps})
    remaining = {n: set(parents.get(n, [])) for n in nodes}
    order = []
    while remaining:
        ready = sorted(n for n, ps in remaining.items() if not ps)
        if not ready:
            raise PgmError("graph contains a cycle")
        for n in ready:
            order.append(n)
            del remaining[n]
        for ps in remaining.values():
            ps.difference_update(ready)
    return order


def fit_cpts(
    variables: dict[str, DiscreteVariable],
    parents: dict[str, list[str]],
    data: dict[str, np.ndarray],
) -> BayesNet:
    """Maximum-likelihood CPTs with Laplace (+1) smoothing.

    Each CPT entry is ``(count + 1) / (total + cardinality)``, so unseen
    parent configurations fall back to uniform rows.
    """
    net = BayesNet(variables=variables, parents=dict(parents), cpts={})
    n = len(next(iter(data.values()))) if data else 0
    for name, var in variables.items():
        pnames = net.parents[name]
        pcards = [variables[p].cardinality for p in pnames]
        counts = np.zeros(tuple(pcards) + (var.cardinality,))
        if n:
            idx = tuple(np.asarray(data[p], dtype=int) for p in pnames)
            np.add.at(counts, idx + (np.asarray(data[name], dtype=int),), 1.0)
        totals = counts.sum(axis=-1, keepdims=True)
        net.cpts[name] = (counts + 1.0) / (totals + var.cardinality)
        net._check_cpt(name, net.cpts[name])
    return net


def _factor_for(net: BayesNet, name: str, evidence: dict[str, int]):
    """CPT of ``name`` as (scope, table) with evidence slices applied."""
    scope = net.parents[name] + [name]
    table = net.cpts[name]
    kept = []
    for axis, var in enumerate(scope):
        if var in evidence:
            table = np.take(table, evidence[var], axis=len(kept))
        else:
            kept.append(var)
    return kept, table


def infer(net: BayesNet, evidence: dict[str, int], query: str) -> np.ndarray:
    """Exact posterior P(query | evidence) by variable elimination."""
    if query in evidence:
        raise PgmError(f"query {query!r} is part of the evidence")
    for var in list(evidence) + [query]:
        if var not in net.variables:
            raise PgmError(f"unknown variable {var!r}")

    factors = [_factor_for(net, name, evidence) for name in net.variables]
    hidden = sorted(set(net.variables) - set(evidence) - {query})
    for var in hidden:
        touching = [f for f in factors if var in f[0]]
        if not touching:
            continue
        factors = [f for f in factors if var not in f[0]]
        scope, table = _multiply(touching, net)
        axis = scope.index(var)
        table = table.sum(axis=axis)
        scope = [v for v in scope if v != var]
        factors.append((scope, table))
    scope, table = _multiply(factors, net)
    # remaining scope is [query] (plus nothing else); squeeze scalars in
    if scope != [query]:
        axes = tuple(i for i, v in enumerate(scope) if v != query)
        table = table.sum(axis=axes) if axes else table
    total = table.sum()
    if total <= 0.0:
        raise ZeroProbabilityEvidenceError("evidence has zero probability under the model")
    return table / total


def _multiply(factors, net: BayesNet):
    """Multiply factors into one table over the union of their scopes."""
    scope: list[str] = []
    for fscope, _ in factors:
        for v in fscope:
            if v not in scope:
                scope.append(v)
    shape = tuple(net.variables[v].cardinality for v in scope)
    out = np.ones(shape)
    for fscope, table in factors:
        # broadcast the factor into the joint scope
        perm_shape = [1] * len(scope)
        src = table
        order = [fscope.index(v) for v in scope if v in fscope]
        src = np.transpose(src, axes=order) if src.ndim > 1 else src
        for i, v in enumerate(scope):
            if v in fscope:
                perm_shape[i] = net.variables[v].cardinality
        out = out * src.reshape(perm_shape)
    return scope, out


def brute_force_joint(net: BayesNet, evidence: dict[str, int], query: str) -> np.ndarray:
    """Oracle: sum the full joint over all states consistent with evidence."""
    names = net.topo_order()
    free = [n for n in names if n not in evidence]
    if query in evidence:
        raise PgmError(f"query {query!r} is part of the evidence")
    space = 1
    for n in free:
        space *= net.variables[n].cardinality
    if space > 2**20:
        raise PgmError(f"state space {space} too large for the enumeration oracle")
    out = np.zeros(net.variables[query].cardinality)
    cards = [net.variables[n].cardinality for n in free]
    for assignment in itertools.product(*(range(c) for c in cards)):
        state = dict(evidence)
        state.update(zip(free, assignment))
        p = 1.0
        for name in names:
            idx = tuple(state[p_] for p_ in net.parents[name]) + (state[name],)
            p *= net.cpts[name][idx]
        out[state[query]] += p
    total = out.sum()
    if total <= 0.0:
        raise ZeroProbabilityEvidenceError("evidence has zero probability under the model")
    return out / total


def to_json_dict(net: BayesNet) -> dict:
    """Serializable form: variables, bin edges, parents, row-major CPTs."""
    return {
        "variables": [
            {
                "name": v.name,
                "cardinality": v.cardinality,
                "bin_edges": list(v.bin_edges),
            }
            for v in net.variables.values()
        ],
        "parents": {k: list(ps) for k, ps in net.parents.items()},
        "cpts": {k: {"shape": list(c.shape), "values": c.ravel().tolist()} for k, c in net.cpts.items()},
    }


def from_json_dict(doc: dict) -> BayesNet:
    variables = {
        v["name"]: DiscreteVariable(v["name"], v["cardinality"], tuple(v["bin_edges"]))
        for v in doc["variables"]
    }
    cpts = {
        k: np.array(c["values"]).reshape(c["shape"]) for k, c in doc["cpts"].items()
    }
    return BayesNet(variables=variables, parents={k: list(v) for k, v in doc["parents"].items()}, cpts=cpts)


def save_json(net: BayesNet, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(net), fh, indent=2, sort_keys=True)


def load_json(path) -> BayesNet:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
