"""Shared numerical building blocks.

Matrices are plain float64 numpy arrays. Everything here is a pure function
except ``SeededRng``, which owns a generator stream.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .errors import DivergenceError, ProbeError, ScalerError, ShapeError

RNG_ALGORITHM = "PCG64"


def as_matrix(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def sigmoid(x):
    x = as_matrix(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x):
    return np.tanh(as_matrix(x))


def softplus(x):
    """log(1 + e^x) without overflow."""
    x = as_matrix(x)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def hadamard(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


class SeededRng:
    """Reproducible random stream (PCG64).

    With ``seed=None`` a seed is drawn from OS entropy and kept on
    ``self.seed`` so the run can be replayed.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int | None = None):
        if seed is None:
            seed = secrets.randbits(63)
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def normal(self, size=None, loc=0.0, scale=1.0):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def choice(self, n, size=None, p=None):
        return self._gen.choice(n, size=size, p=p)

    def permutation(self, n):
        return self._gen.permutation(n)

    def __repr__(self):
        return f"SeededRng(algorithm={self.algorithm!r}, seed={self.seed})"


@dataclass(frozen=True)
class MinMaxScaler:
    """Affine map of the observed ``[data_min, data_max]`` onto ``[lower, upper]``."""

    data_min: float
    data_max: float
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.data_min) and np.isfinite(self.data_max)):
            raise ScalerError("scaler bounds must be finite")
        if not self.data_min < self.data_max:
            raise ScalerError(
                f"degenerate scaler: min={self.data_min} must be below max={self.data_max}"
            )
        if not self.lower < self.upper:
            raise ScalerError("target interval must satisfy lower < upper")

    @classmethod
    def fit(cls, values, lower=-1.0, upper=1.0) -> "MinMaxScaler":
        v = as_matrix(values).ravel()
        v = v[np.isfinite(v)]
        if v.size == 0:
            raise ScalerError("cannot fit a scaler on no finite values")
        return cls(float(v.min()), float(v.max()), lower, upper)

    @property
    def _ratio(self):
        return (self.upper - self.lower) / (self.data_max - self.data_min)

    def transform(self, values):
        return (as_matrix(values) - self.data_min) * self._ratio + self.lower

    def inverse_transform(self, scaled):
        return (as_matrix(scaled) - self.lower) / self._ratio + self.data_min

    def to_dict(self):
        return {"min": self.data_min, "max": self.data_max, "lower": self.lower, "upper": self.upper}


def scale(values, scaler: MinMaxScaler):
    return scaler.transform(values)


def unscale(scaled, scaler: MinMaxScaler):
    return scaler.inverse_transform(scaled)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState):
    """One bias-corrected Adam update.

    Returns ``(new_params, new_state)``; the inputs are left untouched.
    """
    for name, g in grads.items():
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter {name!r}")
        if np.shape(g) != np.shape(params[name]):
            raise ShapeError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(params[name])} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for parameter {name!r}", name=name)

    t = state.step + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        if name not in grads:
            new_params[name] = p
            continue
        g = np.asarray(grads[name], dtype=np.float64)
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        new_params[name] = p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_m[name], new_v[name] = m, v
    return new_params, replace(state, step=t, m=new_m, v=new_v)


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: float):
    """Rescale ``grads`` so their joint L2 norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm <= max_norm or norm == 0.0:
        return dict(grads), norm
    k = max_norm / norm
    return {n: g * k for n, g in grads.items()}, norm


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    if h <= 0:
        raise ProbeError("finite-difference step must be positive")
    x = as_matrix(x).ravel().copy()
    grad = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ProbeError(f"non-finite function value probing coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def flatten_params(params: Mapping[str, np.ndarray], names=None) -> np.ndarray:
    names = list(params) if names is None else names
    return np.concatenate([np.ravel(params[n]) for n in names]) if names else np.zeros(0)


def unflatten_params(flat, template: Mapping[str, np.ndarray], names=None) -> dict:
    names = list(template) if names is None else names
    out, i = {}, 0
    for n in names:
        shape = np.shape(template[n])
        size = int(np.prod(shape)) if shape else 1
        out[n] = np.asarray(flat[i : i + size], dtype=np.float64).reshape(shape)
        i += size
    return out
