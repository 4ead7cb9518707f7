"""Gated recurrent cell, BPTT training and autoregressive price generation.

The cell follows the gate wiring used throughout this package: the ``W*``
matrices act on the previous output ``y_{t-1}`` and the ``V*`` matrices on the
current input ``x_t``::

    s_t = sig(Ws y + Vs x + bs) * s_{t-1} + sig(Wi y + Vi x + bi) * tanh(W y + V x + b)
    y_t = sig(Wo y + Vo x + bo) * tanh(s_t)

A linear readout ``w_out . y_t + b_out`` turns the hidden output into one price.
Inputs and targets are in scaled units; ``MinMaxScaler`` handles EUR/MWh.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError, DomainError, ShapeError
from .market_data import DayProfile
from .numerics import AdamState, MinMaxScaler, SeededRng, adam_step, clip_global_norm, sigmoid

GATES = ("", "i", "o", "s")
PARAM_NAMES = (
    "W", "Wi", "Wo", "Ws",
    "V", "Vi", "Vo", "Vs",
    "b", "bi", "bo", "bs",
    "w_out", "b_out",
)


@dataclass(frozen=True)
class LstmParams:
    W: np.ndarray
    Wi: np.ndarray
    Wo: np.ndarray
    Ws: np.ndarray
    V: np.ndarray
    Vi: np.ndarray
    Vo: np.ndarray
    Vs: np.ndarray
    b: np.ndarray
    bi: np.ndarray
    bo: np.ndarray
    bs: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        h, d = self.V.shape
        for g in GATES:
            if getattr(self, "W" + g).shape != (h, h):
                raise ShapeError(f"W{g} must be ({h}, {h}), got {getattr(self, 'W' + g).shape}")
            if getattr(self, "V" + g).shape != (h, d):
                raise ShapeError(f"V{g} must be ({h}, {d}), got {getattr(self, 'V' + g).shape}")
            if getattr(self, "b" + g).shape != (h,):
                raise ShapeError(f"b{g} must be ({h},), got {getattr(self, 'b' + g).shape}")
        if self.w_out.shape != (h,) or np.shape(self.b_out) != ():
            raise ShapeError("readout must be w_out (hidden,) and scalar b_out")
        for name in PARAM_NAMES:
            if not np.all(np.isfinite(getattr(self, name))):
                raise DomainError(f"parameter {name} has non-finite entries")

    @property
    def hidden_dim(self) -> int:
        return self.V.shape[0]

    @property
    def input_dim(self) -> int:
        return self.V.shape[1]

    def to_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d) -> "LstmParams":
        return cls(**{n: np.asarray(d[n], dtype=np.float64) for n in PARAM_NAMES})

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "LstmParams":
        h, d = hidden_dim, input_dim
        kw = {}
        for g in GATES:
            kw["W" + g] = np.zeros((h, h))
            kw["V" + g] = np.zeros((h, d))
            kw["b" + g] = np.zeros(h)
        return cls(**kw, w_out=np.zeros(h), b_out=np.array(0.0))

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: SeededRng) -> "LstmParams":
        """Uniform(-k, k) with k = 1/sqrt(hidden_dim) for every entry."""
        k = 1.0 / np.sqrt(hidden_dim)
        template = cls.zeros(input_dim, hidden_dim).to_dict()
        out = {}
        for n in PARAM_NAMES:
            shape = template[n].shape
            out[n] = np.asarray(rng.uniform(-k, k, size=shape), dtype=np.float64)
        return cls.from_dict(out)


@dataclass(frozen=True)
class LstmState:
    s: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class LstmHyper:
    hidden_dim: int = 32
    window: int = 24
    epochs: int = 500
    learning_rate: float = 1e-2
    clip_norm: float = 5.0
    seed: int = 42

    def __post_init__(self):
        for name, v in asdict(self).items():
            if name == "seed":
                continue
            if not v > 0:
                raise DomainError(f"LstmHyper.{name} must be positive, got {v}")


def lstm_cell_forward(params: LstmParams, x_t, y_prev, s_prev):
    """One step of the cell. Works on a single vector or a (batch, dim) block."""
    x_t = np.asarray(x_t, dtype=np.float64)
    y_prev = np.asarray(y_prev, dtype=np.float64)
    s_prev = np.asarray(s_prev, dtype=np.float64)
    h, d = params.hidden_dim, params.input_dim
    if x_t.shape[-1:] != (d,) or y_prev.shape[-1:] != (h,) or s_prev.shape != y_prev.shape:
        raise ShapeError(f"cell expects x (..., {d}), y/s (..., {h}); got {x_t.shape}, {y_prev.shape}, {s_prev.shape}")
    cache = _cell(params, x_t, y_prev, s_prev)
    return cache["y"], cache["s"]


def _fused(p: LstmParams):
    """Stack the four gate blocks (candidate, input, output, skip) row-wise."""
    Wc = np.concatenate([p.W, p.Wi, p.Wo, p.Ws], axis=0)
    Vc = np.concatenate([p.V, p.Vi, p.Vo, p.Vs], axis=0)
    bc = np.concatenate([p.b, p.bi, p.bo, p.bs])
    return Wc, Vc, bc


def _cell(p: LstmParams, x, y_prev, s_prev, fused=None) -> dict:
    Wc, Vc, bc = _fused(p) if fused is None else fused
    h = p.hidden_dim
    pre = y_prev @ Wc.T + x @ Vc.T + bc
    g = np.tanh(pre[..., :h])
    gates = 0.5 * (1.0 + np.tanh(0.5 * pre[..., h:]))
    i, o, f = gates[..., :h], gates[..., h : 2 * h], gates[..., 2 * h :]
    s = f * s_prev + i * g
    ts = np.tanh(s)
    y = o * ts
    return {"x": x, "y_prev": y_prev, "s_prev": s_prev, "g": g, "i": i, "o": o, "f": f, "s": s, "ts": ts, "y": y}


def _as_batch(xs, input_dim):
    xs = np.asarray(xs, dtype=np.float64)
    single = False
    if xs.ndim == 1:
        xs = xs[:, None] if input_dim == 1 else xs[None, :]
    if xs.ndim == 2:
        single = True
        xs = xs[None]
    if xs.ndim != 3 or xs.shape[2] != input_dim:
        raise ShapeError(f"expected sequence of shape (T, {input_dim}) or (batch, T, {input_dim}), got {xs.shape}")
    if xs.shape[1] == 0:
        raise DomainError("sequence must be non-empty")
    return xs, single


def _forward(p: LstmParams, xs):
    B, T, _ = xs.shape
    y = np.zeros((B, p.hidden_dim))
    s = np.zeros((B, p.hidden_dim))
    caches = []
    preds = np.empty((B, T))
    fused = _fused(p)
    for t in range(T):
        c = _cell(p, xs[:, t, :], y, s, fused)
        y, s = c["y"], c["s"]
        preds[:, t] = y @ p.w_out + p.b_out
        caches.append(c)
    return preds, caches


def lstm_sequence_forward(params: LstmParams, xs):
    """Run the cell over ``xs`` from a zero state.

    ``xs`` is (T,) / (T, input_dim) for one sequence or (batch, T, input_dim).
    Returns per-step predictions with the matching leading shape and the final
    ``LstmState``.
    """
    xs, single = _as_batch(xs, params.input_dim)
    preds, caches = _forward(params, xs)
    last = caches[-1]
    if single:
        return preds[0], LstmState(last["s"][0], last["y"][0])
    return preds, LstmState(last["s"], last["y"])


def mse_loss(predicted, target) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ShapeError(f"prediction shape {predicted.shape} != target shape {target.shape}")
    if predicted.size == 0:
        raise DomainError("mean squared error of an empty set is undefined")
    diff = predicted - target
    return float(np.mean(diff * diff))


def _backward(p: LstmParams, caches, dpred) -> dict:
    """Gradients given dL/dprediction of shape (batch, T)."""
    h = p.hidden_dim
    Wc, _, _ = _fused(p)
    dWc = np.zeros_like(Wc)
    dVc = np.zeros((4 * h, p.input_dim))
    dbc = np.zeros(4 * h)
    dw_out = np.zeros(h)
    db_out = 0.0
    B = dpred.shape[0]
    dy_next = np.zeros((B, h))
    ds_next = np.zeros((B, h))
    for t in range(len(caches) - 1, -1, -1):
        c = caches[t]
        dp = dpred[:, t]
        dw_out += dp @ c["y"]
        db_out += dp.sum()
        dy = dp[:, None] * p.w_out + dy_next
        do = dy * c["ts"]
        ds = dy * c["o"] * (1.0 - c["ts"] ** 2) + ds_next
        i, o, f, g = c["i"], c["o"], c["f"], c["g"]
        dpre = np.concatenate(
            [
                ds * i * (1.0 - g * g),
                ds * g * i * (1.0 - i),
                do * o * (1.0 - o),
                ds * c["s_prev"] * f * (1.0 - f),
            ],
            axis=1,
        )
        dWc += dpre.T @ c["y_prev"]
        dVc += dpre.T @ c["x"]
        dbc += dpre.sum(axis=0)
        dy_next = dpre @ Wc
        ds_next = ds * f
        if not (np.all(np.isfinite(ds_next)) and np.all(np.isfinite(dy_next)) and np.all(np.isfinite(dVc))):
            raise DivergenceError(f"non-finite gradient during backpropagation at step {t}", step=t)
    grads = {"w_out": dw_out, "b_out": np.array(db_out)}
    for k, gname in enumerate(GATES):
        rows = slice(k * h, (k + 1) * h)
        grads["W" + gname] = dWc[rows]
        grads["V" + gname] = dVc[rows]
        grads["b" + gname] = dbc[rows]
    return {n: grads[n] for n in PARAM_NAMES}


def lstm_backprop(params: LstmParams, xs, targets) -> dict:
    """Exact gradient of the mean squared error over every step's prediction."""
    xs, single = _as_batch(xs, params.input_dim)
    targets = np.asarray(targets, dtype=np.float64)
    if single:
        targets = targets[None]
    if targets.shape != xs.shape[:2]:
        raise ShapeError(f"targets shape {targets.shape} does not match sequence shape {xs.shape[:2]}")
    preds, caches = _forward(params, xs)
    _check_finite(caches)
    dpred = 2.0 * (preds - targets) / preds.size
    return _backward(params, caches, dpred)


def _check_finite(caches):
    for t, c in enumerate(caches):
        if not np.all(np.isfinite(c["s"])):
            raise DivergenceError(f"non-finite cell state at step {t}", step=t)


def window_loss_and_grad(params: LstmParams, X, y):
    """MSE of the last-step prediction over a batch of windows, and its gradient.

    ``X`` is (n, window) of scalar inputs, ``y`` the (n,) next values.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xs = X[:, :, None]
    preds, caches = _forward(params, xs)
    _check_finite(caches)
    last = preds[:, -1]
    loss = mse_loss(last, y)
    dpred = np.zeros_like(preds)
    dpred[:, -1] = 2.0 * (last - y) / y.size
    return loss, _backward(params, caches, dpred)


def predict_windows(params: LstmParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    preds, _ = _forward(params, X[:, :, None])
    return preds[:, -1]


@dataclass
class LstmTrainResult:
    params: LstmParams
    train_loss: np.ndarray
    test_loss: np.ndarray
    hyper: LstmHyper = field(default_factory=LstmHyper)


def train_lstm(train_windows, hyper: LstmHyper, test_windows=None) -> LstmTrainResult:
    """Full-batch Adam with global-norm clipping over scaled (window, next) pairs.

    ``train_windows``/``test_windows`` are either lists of pairs or ``(X, y)``
    tuples. Entry ``e`` of each loss curve is the loss of the parameters going
    into epoch ``e + 1``'s update; the returned parameters are those after the
    final update.
    """
    X, y = _pairs_to_xy(train_windows)
    if len(y) == 0:
        raise DomainError("at least one training window is required")
    if X.shape[1] != hyper.window:
        raise ShapeError(f"windows have length {X.shape[1]}, hyper.window is {hyper.window}")
    Xt, yt = _pairs_to_xy(test_windows) if test_windows is not None else (None, None)
    has_test = yt is not None and len(yt) > 0

    rng = SeededRng(hyper.seed)
    params = LstmParams.init(1, hyper.hidden_dim, rng)
    state = AdamState(lr=hyper.learning_rate)
    train_curve = np.empty(hyper.epochs)
    test_curve = np.full(hyper.epochs, np.nan)
    theta = params.to_dict()
    for epoch in range(hyper.epochs):
        loss, grads = window_loss_and_grad(params, X, y)
        if not np.isfinite(loss):
            raise DivergenceError(f"training loss became non-finite at epoch {epoch + 1}", step=epoch + 1)
        train_curve[epoch] = loss
        if has_test:
            test_curve[epoch] = mse_loss(predict_windows(params, Xt), yt)
        grads, _ = clip_global_norm(grads, hyper.clip_norm)
        theta, state = adam_step(theta, grads, state)
        params = LstmParams.from_dict(theta)
    return LstmTrainResult(params, train_curve, test_curve, hyper)


def _pairs_to_xy(pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        return np.asarray(pairs[0], dtype=np.float64), np.asarray(pairs[1], dtype=np.float64)
    pairs = list(pairs)
    if not pairs:
        return np.zeros((0, 0)), np.zeros(0)
    return np.array([p[0] for p in pairs], dtype=np.float64), np.array([p[1] for p in pairs], dtype=np.float64)


def generate_prices(params: LstmParams, scaler: MinMaxScaler, seed_window, horizon: int = 24, actuals=None) -> np.ndarray:
    """Predict ``horizon`` hourly prices in EUR/MWh after ``seed_window``.

    By default each prediction is fed back as the next input. Passing
    ``actuals`` (the realised prices, EUR/MWh) switches to one-step-ahead mode,
    where the window is advanced with observed values instead.
    """
    window = np.asarray(scaler.transform(seed_window), dtype=np.float64).ravel()
    if window.size == 0:
        raise ShapeError("seed window must be non-empty")
    if actuals is not None:
        actual_scaled = np.asarray(scaler.transform(actuals), dtype=np.float64).ravel()
        if actual_scaled.size < horizon:
            raise ShapeError(f"one-step mode needs {horizon} actual values, got {actual_scaled.size}")
    out = np.empty(horizon)
    for k in range(horizon):
        preds, _ = lstm_sequence_forward(params, window)
        out[k] = preds[-1]
        nxt = out[k] if actuals is None else actual_scaled[k]
        window = np.append(window[1:], nxt)
    return np.asarray(scaler.inverse_transform(out))


def generate_profile(params: LstmParams, scaler: MinMaxScaler, seed_window, date=None, zone: Optional[str] = None, actuals=None) -> DayProfile:
    prices = generate_prices(params, scaler, seed_window, 24, actuals=actuals)
    return DayProfile(date, zone, tuple(float(v) for v in prices), "avg")
