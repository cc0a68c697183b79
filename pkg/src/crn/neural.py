"""Minimal dense networks with reverse-mode gradients and Adam.

Enough machinery for small actor/critic heads: fully-connected layers with
tanh / relu / linear activations, exact backprop, a finite-difference
gradient checker, and JSON checkpointing. No ML framework involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "relu", "linear")


class NeuralError(Exception):
    pass


@dataclass(frozen=True)
class NetSpec:
    """Layer sizes (input first) and one activation per weight layer."""

    sizes: tuple[int, ...]
    activations: tuple[str, ...]
    seed: int = 0

    def __post_init__(self):
        if len(self.sizes) < 2:
            raise NeuralError("need at least input and output sizes")
        if len(self.activations) != len(self.sizes) - 1:
            raise NeuralError("one activation per weight layer required")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise NeuralError(f"unknown activation {a!r}")


def mlp_spec(in_size: int, out_size: int, hidden=(64, 64), hidden_act="tanh", out_act="linear", seed=0) -> NetSpec:
    sizes = (in_size, *hidden, out_size)
    acts = tuple([hidden_act] * len(hidden) + [out_act])
    return NetSpec(sizes=sizes, activations=acts, seed=seed)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0).astype(z.dtype)
    return np.ones_like(z)


class Network:
    """Feed-forward net; weights He-initialized for relu, Xavier otherwise."""

    def __init__(self, spec: NetSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out, act in zip(spec.sizes, spec.sizes[1:], spec.activations):
            if act == "relu":
                scale = np.sqrt(2.0 / fan_in)
            else:
                scale = np.sqrt(2.0 / (fan_in + fan_out))
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._cache = None

    @property
    def parameters(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        """Forward pass over a batch (2-D) or a single vector (1-D)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.spec.sizes[0]:
            raise NeuralError(f"input size {a.shape[1]} != {self.spec.sizes[0]}")
        zs, acts = [], [a]
        for W, b, name in zip(self.weights, self.biases, self.spec.activations):
            z = a @ W + b
            a = _act(name, z)
            zs.append(z)
            acts.append(a)
        if cache:
            self._cache = (zs, acts)
        return a[0] if single else a

    def backward(self, upstream: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Backprop the upstream gradient dL/d(output).

        Returns (parameter gradients aligned with :attr:`parameters`,
        gradient with respect to the input batch).
        """
        if self._cache is None:
            raise NeuralError("forward() with cache=True must run before backward()")
        zs, acts = self._cache
        grad = np.asarray(upstream, dtype=float)
        if grad.ndim == 1:
            grad = grad[None, :]
        w_grads = [np.zeros_like(W) for W in self.weights]
        b_grads = [np.zeros_like(b) for b in self.biases]
        for i in reversed(range(len(self.weights))):
            grad = grad * _act_grad(self.spec.activations[i], zs[i], acts[i + 1])
            w_grads[i] = acts[i].T @ grad
            b_grads[i] = grad.sum(axis=0)
            grad = grad @ self.weights[i].T
        return w_grads + b_grads, grad

    def copy(self) -> "Network":
        other = Network(self.spec)
        other.weights = [W.copy() for W in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def flat_parameters(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters])

    def set_flat_parameters(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if not np.isfinite(flat).all():
            raise NeuralError("non-finite parameters")
        expected = sum(p.size for p in self.parameters)
        if flat.size != expected:
            raise NeuralError(f"parameter vector length {flat.size} != {expected}")
        offset = 0
        for p in self.parameters:
            p[...] = flat[offset : offset + p.size].reshape(p.shape)
            offset += p.size

    def save_json(self, path) -> None:
        doc = {
            "sizes": list(self.spec.sizes),
            "activations": list(self.spec.activations),
            "seed": self.spec.seed,
            "parameters": self.flat_parameters().tolist(),
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def load_json(cls, path) -> "Network":
        with open(path) as fh:
            doc = json.load(fh)
        net = cls(NetSpec(tuple(doc["sizes"]), tuple(doc["activations"]), doc["seed"]))
        net.set_flat_parameters(np.array(doc["parameters"]))
        return net


@dataclass
class Adam:
    """Standard Adam over a list of parameter arrays."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(params) != len(grads):
            raise NeuralError("params and grads must align")
        for g in grads:
            if not np.isfinite(g).all():
                raise NeuralError("non-finite gradient")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m[...] = self.beta1 * m + (1 - self.beta1) * g
            v[...] = self.beta2 * v + (1 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def gradient_check(net: Network, loss_fn, h: float = 1e-5, tol: float = 1e-4) -> dict:
    """Central finite differences against backprop for an arbitrary loss.

    ``loss_fn(net)`` must return ``(loss, flat_gradient)`` where the
    gradient comes from the net's own backward pass; the checker re-derives
    it numerically and reports per-parameter relative errors.
    """
    _, analytic = loss_fn(net)
    flat = net.flat_parameters()
    if flat.size > 10_000:
        raise NeuralError("gradient_check limited to 10k parameters")
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + h
        net.set_flat_parameters(bumped)
        up, _ = loss_fn(net)
        bumped[i] = flat[i] - h
        net.set_flat_parameters(bumped)
        down, _ = loss_fn(net)
        numeric[i] = (up - down) / (2 * h)
    net.set_flat_parameters(flat)
    denom = np.maximum(np.abs(numeric) + np.abs(analytic), 1e-8)
    rel = np.abs(numeric - analytic) / denom
    return {
        "max_relative_error": float(rel.max()) if rel.size else 0.0,
        "passed": bool(rel.size == 0 or rel.max() < tol),
        "per_parameter": rel,
    }
