"""Feed-forward layers with hand-written backward passes.

A network is a tuple of layer objects (architecture only) plus a flat dict of
named parameter arrays. Layer ``k`` owns the keys ``"{k}.weight"`` and
``"{k}.bias"``. ``forward`` returns the output and a cache list that
``backward`` consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import SeededRng, sigmoid


@dataclass(frozen=True)
class Dense:
    n_in: int
    n_out: int

    def param_shapes(self):
        return {"weight": (self.n_out, self.n_in), "bias": (self.n_out,)}

    def forward(self, p, x):
        if x.shape[-1] != self.n_in:
            raise ShapeError(f"dense layer expects {self.n_in} inputs, got {x.shape[-1]}")
        return x @ p["weight"].T + p["bias"], x

    def backward(self, p, cache, dout):
        x = cache
        return dout @ p["weight"], {"weight": dout.T @ x, "bias": dout.sum(axis=0)}


@dataclass(frozen=True)
class Reshape:
    shape: tuple

    def param_shapes(self):
        return {}

    def forward(self, p, x):
        return x.reshape((x.shape[0],) + tuple(self.shape)), x.shape

    def backward(self, p, cache, dout):
        return dout.reshape(cache), {}


@dataclass(frozen=True)
class Activation:
    kind: str
    slope: float = 0.2

    def param_shapes(self):
        return {}

    def forward(self, p, x):
        if self.kind == "relu":
            y = np.maximum(x, 0.0)
        elif self.kind == "leaky_relu":
            y = np.where(x > 0, x, self.slope * x)
        elif self.kind == "tanh":
            y = np.tanh(x)
        elif self.kind == "sigmoid":
            y = sigmoid(x)
        else:
            raise ValueError(f"unknown activation {self.kind!r}")
        return y, (x, y)

    def backward(self, p, cache, dout):
        x, y = cache
        if self.kind == "relu":
            return dout * (x > 0), {}
        if self.kind == "leaky_relu":
            return dout * np.where(x > 0, 1.0, self.slope), {}
        if self.kind == "tanh":
            return dout * (1.0 - y * y), {}
        return dout * y * (1.0 - y), {}


def _conv_index(length_in, kernel, stride):
    """(L_out, kernel) positions into the padded input."""
    n_out = (length_in - kernel) // stride + 1
    return np.arange(n_out)[:, None] * stride + np.arange(kernel)[None, :]


@dataclass(frozen=True)
class Conv1d:
    """Strided 1-D convolution on (batch, channels, length) input."""

    c_in: int
    c_out: int
    kernel: int = 4
    stride: int = 2
    padding: int = 1

    def param_shapes(self):
        return {"weight": (self.c_out, self.c_in, self.kernel), "bias": (self.c_out,)}

    def out_length(self, length):
        return (length + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, p, x):
        if x.ndim != 3 or x.shape[1] != self.c_in:
            raise ShapeError(f"conv expects (batch, {self.c_in}, length), got {x.shape}")
        xp = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding)))
        idx = _conv_index(xp.shape[2], self.kernel, self.stride)
        patches = xp[:, :, idx]  # (B, C_in, L_out, k)
        out = np.einsum("bclk,ock->bol", patches, p["weight"]) + p["bias"][None, :, None]
        return out, (xp.shape, idx, patches)

    def backward(self, p, cache, dout):
        xp_shape, idx, patches = cache
        dw = np.einsum("bol,bclk->ock", dout, patches)
        db = dout.sum(axis=(0, 2))
        dpatches = np.einsum("bol,ock->bclk", dout, p["weight"])
        dxp = np.zeros(xp_shape)
        np.add.at(dxp, (slice(None), slice(None), idx), dpatches)
        end = xp_shape[2] - self.padding
        return dxp[:, :, self.padding : end], {"weight": dw, "bias": db}


@dataclass(frozen=True)
class ConvTranspose1d:
    """Adjoint of ``Conv1d`` with the same geometry: length L -> (L-1)*stride - 2*padding + kernel."""

    c_in: int
    c_out: int
    kernel: int = 4
    stride: int = 2
    padding: int = 1

    def param_shapes(self):
        return {"weight": (self.c_in, self.c_out, self.kernel), "bias": (self.c_out,)}

    def out_length(self, length):
        return (length - 1) * self.stride - 2 * self.padding + self.kernel

    def forward(self, p, z):
        if z.ndim != 3 or z.shape[1] != self.c_in:
            raise ShapeError(f"transposed conv expects (batch, {self.c_in}, length), got {z.shape}")
        B, _, L = z.shape
        full = (L - 1) * self.stride + self.kernel
        idx = np.arange(L)[:, None] * self.stride + np.arange(self.kernel)[None, :]
        contrib = np.einsum("bcl,cok->bolk", z, p["weight"])
        outp = np.zeros((B, self.c_out, full))
        np.add.at(outp, (slice(None), slice(None), idx), contrib)
        out = outp[:, :, self.padding : full - self.padding] + p["bias"][None, :, None]
        return out, (z, idx, full)

    def backward(self, p, cache, dout):
        z, idx, full = cache
        doutp = np.zeros((dout.shape[0], self.c_out, full))
        doutp[:, :, self.padding : full - self.padding] = dout
        dcontrib = doutp[:, :, idx]  # (B, C_out, L, k)
        dz = np.einsum("bolk,cok->bcl", dcontrib, p["weight"])
        dw = np.einsum("bcl,bolk->cok", z, dcontrib)
        return dz, {"weight": dw, "bias": dout.sum(axis=(0, 2))}


def layer_params(params, k, layer):
    return {name: params[f"{k}.{name}"] for name in layer.param_shapes()}


def init_params(layers, rng: SeededRng, scale: float = 0.02) -> dict:
    """N(0, scale^2) weights, zero biases; the usual recipe for adversarial nets."""
    params = {}
    for k, layer in enumerate(layers):
        for name, shape in layer.param_shapes().items():
            key = f"{k}.{name}"
            params[key] = np.zeros(shape) if name == "bias" else rng.normal(size=shape) * scale
    return params


def zero_params(layers) -> dict:
    return {f"{k}.{n}": np.zeros(s) for k, layer in enumerate(layers) for n, s in layer.param_shapes().items()}


def forward(layers, params, x):
    caches = []
    for k, layer in enumerate(layers):
        x, c = layer.forward(layer_params(params, k, layer), x)
        caches.append(c)
    return x, caches


def backward(layers, params, caches, dout):
    """Returns (d input, {param key: gradient})."""
    grads = {}
    for k in range(len(layers) - 1, -1, -1):
        layer = layers[k]
        dout, g = layer.backward(layer_params(params, k, layer), caches[k], dout)
        for name, v in g.items():
            grads[f"{k}.{name}"] = v
    return dout, grads
