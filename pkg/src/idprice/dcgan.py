"""Adversarial generator/discriminator pair over scaled 24-hour price profiles.

Profiles live in scaled units in (-1, 1); the generator ends in ``tanh`` and the
discriminator in ``sigmoid``. Two architectures are available:

``conv``
    D: 24 -> conv(s=2) -> conv(s=2) -> dense -> sigmoid, leaky ReLU(0.2)
    G: latent -> dense 8x6 -> transposed conv -> transposed conv -> 24, tanh
``dense``
    G: latent -> 64 -> 64 -> 24 (ReLU, tanh out); D: 24 -> 64 -> 64 -> 1
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import layers as L
from .errors import DivergenceError, DomainError, ShapeError
from .numerics import AdamState, MinMaxScaler, SeededRng, adam_step, sigmoid, softplus

PROFILE_LEN = 24
LOG_EPS = 1e-7


@dataclass(frozen=True)
class GanHyper:
    latent_dim: int = 16
    architecture: str = "conv"
    hidden: int = 64
    channels: tuple = (8, 16)
    epochs: int = 2000
    batch_size: int = 32
    lr_g: float = 1e-4
    lr_d: float = 1e-3
    beta1: float = 0.5
    seed: int = 42

    def __post_init__(self):
        if self.architecture not in ("conv", "dense"):
            raise DomainError(f"architecture must be 'conv' or 'dense', got {self.architecture!r}")
        for name in ("latent_dim", "hidden", "epochs", "batch_size", "lr_g", "lr_d"):
            if not getattr(self, name) > 0:
                raise DomainError(f"GanHyper.{name} must be positive")
        if not 0 <= self.beta1 < 1:
            raise DomainError("beta1 must lie in [0, 1)")
        if len(self.channels) != 2 or min(self.channels) <= 0:
            raise DomainError("channels must be two positive widths")

    def to_dict(self):
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["channels"] = tuple(d.get("channels", (8, 16)))
        return cls(**d)


def generator_layers(hyper: GanHyper) -> tuple:
    if hyper.architecture == "dense":
        h = hyper.hidden
        return (
            L.Dense(hyper.latent_dim, h), L.Activation("relu"),
            L.Dense(h, h), L.Activation("relu"),
            L.Dense(h, PROFILE_LEN), L.Activation("tanh"),
        )
    c1, c2 = hyper.channels
    return (
        L.Dense(hyper.latent_dim, c2 * 6), L.Activation("relu"), L.Reshape((c2, 6)),
        L.ConvTranspose1d(c2, c1), L.Activation("relu"),
        L.ConvTranspose1d(c1, 1), L.Reshape((PROFILE_LEN,)), L.Activation("tanh"),
    )


def discriminator_layers(hyper: GanHyper) -> tuple:
    """Layers up to the logit; ``discriminator_forward`` applies the sigmoid."""
    if hyper.architecture == "dense":
        h = hyper.hidden
        return (
            L.Dense(PROFILE_LEN, h), L.Activation("leaky_relu"),
            L.Dense(h, h), L.Activation("leaky_relu"),
            L.Dense(h, 1),
        )
    c1, c2 = hyper.channels
    return (
        L.Reshape((1, PROFILE_LEN)),
        L.Conv1d(1, c1), L.Activation("leaky_relu"),
        L.Conv1d(c1, c2), L.Activation("leaky_relu"),
        L.Reshape((c2 * 6,)),
        L.Dense(c2 * 6, 1),
    )


@dataclass(frozen=True)
class Network:
    layers: tuple
    params: dict

    def with_params(self, params) -> "Network":
        return Network(self.layers, params)


# Parameter sets of the generator and discriminator networks.
GeneratorParams = Network
DiscriminatorParams = Network


def init_networks(hyper: GanHyper, rng: SeededRng):
    g_layers, d_layers = generator_layers(hyper), discriminator_layers(hyper)
    return Network(g_layers, L.init_params(g_layers, rng)), Network(d_layers, L.init_params(d_layers, rng))


def _latent_check(G: Network, l):
    l = np.asarray(l, dtype=np.float64)
    n_in = G.layers[0].n_in
    if l.shape[-1] != n_in:
        raise ShapeError(f"latent vector must have length {n_in}, got {l.shape[-1]}")
    if not np.all(np.isfinite(l)):
        raise DomainError("latent vector must be finite")
    return l


def generator_forward(G: Network, l) -> np.ndarray:
    """Scaled profile(s) for latent vector(s) ``l`` of shape (latent,) or (n, latent)."""
    l = _latent_check(G, l)
    single = l.ndim == 1
    out, _ = L.forward(G.layers, G.params, l[None] if single else l)
    return out[0] if single else out


def discriminator_logit(D: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != PROFILE_LEN:
        raise ShapeError(f"discriminator input must have {PROFILE_LEN} hours, got {x.shape[-1]}")
    single = x.ndim == 1
    out, _ = L.forward(D.layers, D.params, x[None] if single else x)
    return out[0, 0] if single else out[:, 0]


_P_LO = np.finfo(np.float64).tiny
_P_HI = 1.0 - np.finfo(np.float64).epsneg


def discriminator_forward(D: Network, x):
    """Probability that ``x`` is a real profile, kept strictly inside (0, 1)."""
    return np.clip(sigmoid(discriminator_logit(D, x)), _P_LO, _P_HI)


def gan_value(d_real, d_fake, eps: float = LOG_EPS) -> float:
    """Minimax value mean log D(x) + mean log(1 - D(G(l))); at most 0."""
    d_real = np.asarray(d_real, dtype=np.float64).ravel()
    d_fake = np.asarray(d_fake, dtype=np.float64).ravel()
    if d_real.size == 0 or d_fake.size == 0:
        raise DomainError("gan_value needs non-empty real and generated batches")
    d_real = np.clip(d_real, eps, 1.0 - eps)
    d_fake = np.clip(d_fake, eps, 1.0 - eps)
    return float(np.mean(np.log(d_real)) + np.mean(np.log1p(-d_fake)))


def discriminator_grads(D: Network, real, fake):
    """Gradient of the minimax value w.r.t. D's parameters (ascent direction).

    Returns (value, grads). Computed from logits: log sig(z) = -softplus(-z).
    """
    zr, cr = L.forward(D.layers, D.params, real)
    zf, cf = L.forward(D.layers, D.params, fake)
    zr, zf = zr[:, 0], zf[:, 0]
    value = float(-np.mean(softplus(-zr)) - np.mean(softplus(zf)))
    # d/dz log sig(z) = 1 - sig(z);  d/dz log(1 - sig(z)) = -sig(z)
    dzr = (1.0 - sigmoid(zr)) / zr.size
    dzf = -sigmoid(zf) / zf.size
    _, gr = L.backward(D.layers, D.params, cr, dzr[:, None])
    _, gf = L.backward(D.layers, D.params, cf, dzf[:, None])
    return value, {k: gr[k] + gf[k] for k in gr}


def generator_loss_grads(G: Network, D: Network, latents):
    """Non-saturating generator loss -mean log D(G(l)) and its gradient w.r.t. G."""
    fake, cg = L.forward(G.layers, G.params, latents)
    z, cd = L.forward(D.layers, D.params, fake)
    z = z[:, 0]
    loss = float(np.mean(softplus(-z)))
    dz = -(1.0 - sigmoid(z)) / z.size
    dfake, _ = L.backward(D.layers, D.params, cd, dz[:, None])
    _, g = L.backward(G.layers, G.params, cg, dfake)
    return loss, g


def _check_finite(value, what, epoch):
    if not np.isfinite(value):
        raise DivergenceError(f"{what} became non-finite at epoch {epoch}", step=epoch)


def discriminator_step(D: Network, real, fake, state: AdamState):
    """One Adam ascent step on the minimax value for fixed real/fake batches."""
    value, grads = discriminator_grads(D, real, fake)
    neg = {k: -v for k, v in grads.items()}
    params, state = adam_step(D.params, neg, state)
    return D.with_params(params), state, value


@dataclass
class GanTrainResult:
    generator: Network
    discriminator: Network
    value_history: np.ndarray
    g_loss_history: np.ndarray
    hyper: GanHyper = field(default_factory=GanHyper)


def train_dcgan(profiles, hyper: GanHyper) -> GanTrainResult:
    """Alternate one discriminator and one generator Adam step per minibatch.

    ``profiles`` is an (n, 24) array of complete profiles already scaled to
    [-1, 1]. Each epoch is one shuffled pass; the value history holds the
    per-epoch mean of the minimax value measured at the discriminator step.
    """
    X = np.asarray(profiles, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != PROFILE_LEN:
        raise ShapeError(f"profiles must be (n, {PROFILE_LEN}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("profiles must be complete (no missing hours)")
    n = X.shape[0]
    if hyper.batch_size > n:
        raise DomainError(f"batch size {hyper.batch_size} exceeds dataset size {n}")

    rng = SeededRng(hyper.seed)
    G, D = init_networks(hyper, rng)
    sd = AdamState(lr=hyper.lr_d, beta1=hyper.beta1)
    sg = AdamState(lr=hyper.lr_g, beta1=hyper.beta1)
    values = np.empty(hyper.epochs)
    g_losses = np.empty(hyper.epochs)
    n_batches = n // hyper.batch_size
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        v_sum = g_sum = 0.0
        for b in range(n_batches):
            real = X[order[b * hyper.batch_size : (b + 1) * hyper.batch_size]]
            fake = generator_forward(G, rng.normal(size=(hyper.batch_size, hyper.latent_dim)))
            D, sd, value = discriminator_step(D, real, fake, sd)
            g_loss, g_grads = generator_loss_grads(G, D, rng.normal(size=(hyper.batch_size, hyper.latent_dim)))
            params, sg = adam_step(G.params, g_grads, sg)
            G = G.with_params(params)
            v_sum += value
            g_sum += g_loss
        values[epoch] = v_sum / n_batches
        g_losses[epoch] = g_sum / n_batches
        _check_finite(values[epoch], "minimax value", epoch + 1)
        _check_finite(g_losses[epoch], "generator loss", epoch + 1)
    return GanTrainResult(G, D, values, g_losses, hyper)


def sample_prices(G: Network, scaler: MinMaxScaler, n: int, rng: SeededRng) -> np.ndarray:
    """``n`` generated 24-hour profiles in EUR/MWh, shape (n, 24)."""
    if n == 0:
        return np.zeros((0, PROFILE_LEN))
    latent_dim = G.layers[0].n_in
    scaled = generator_forward(G, rng.normal(size=(n, latent_dim)))
    prices = scaler.inverse_transform(scaled)
    # tanh can round to exactly +-1; keep the affine inverse from overshooting by an ulp.
    return np.clip(prices, scaler.data_min, scaler.data_max)
