"""No-U-Turn sampling of a Gaussian-mixture price density.

The sampler works on an unconstrained parameter vector with an identity mass
matrix. Trajectories are grown by repeated doubling; a subtree stops on a
U-turn, ``(q+ - q-) . p- < 0`` or ``(q+ - q-) . p+ < 0``, or on a divergence
(energy error above ``max_delta_h``). The draw is chosen by progressive
multinomial sampling over the trajectory, and the step size is tuned with dual
averaging during warmup.

Mixture parameterisation, for K components::

    theta = (mu_1..mu_K, log sigma_1..log sigma_K, logit_1..logit_K)
    mu_k ~ Normal(mean(data), 2 std(data))
    sigma_k ~ HalfNormal(std(data))        (plus the log-Jacobian log sigma_k)
    logit_k ~ Normal(0, 1),  weights = softmax(logits)

Component labels may switch inside a chain; that is harmless for
posterior-predictive draws and is left alone.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DensityError, DomainError, QualityError, TuningError
from .numerics import SeededRng

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


@dataclass(frozen=True)
class MixtureModel:
    """K-component Gaussian mixture with data-scaled weakly informative priors."""

    n_components: int = 2
    prior_mean: float = 0.0
    prior_scale: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_components <= 5:
            raise DomainError(f"component count must be in 1..5, got {self.n_components}")
        if not self.prior_scale > 0:
            raise DomainError("prior scale must be positive")

    @classmethod
    def from_data(cls, data, n_components: int = 2) -> "MixtureModel":
        data = _as_data(data)
        scale = float(np.std(data, ddof=1)) if data.size > 1 else 1.0
        if not scale > 0:
            scale = 1.0
        return cls(n_components, float(np.mean(data)), scale)

    @property
    def dim(self) -> int:
        return 3 * self.n_components

    @property
    def param_names(self) -> tuple:
        k = range(1, self.n_components + 1)
        return tuple([f"mu_{i}" for i in k] + [f"sigma_{i}" for i in k] + [f"weight_{i}" for i in k])

    def split(self, theta):
        K = self.n_components
        theta = np.asarray(theta, dtype=np.float64)
        return theta[:K], theta[K : 2 * K], theta[2 * K :]

    def initial_point(self, data) -> np.ndarray:
        """Means at evenly spaced data quantiles, common sigma, equal weights."""
        data = _as_data(data)
        K = self.n_components
        qs = (np.arange(K) + 0.5) / K
        mu = np.quantile(data, qs)
        log_sigma = np.full(K, math.log(self.prior_scale / K))
        return np.concatenate([mu, log_sigma, np.zeros(K)])

    def constrain(self, theta) -> np.ndarray:
        mu, log_sigma, logits = self.split(theta)
        w = np.exp(logits - logits.max())
        return np.concatenate([mu, np.exp(log_sigma), w / w.sum()])

    def log_density(self, theta, data):
        """Log posterior (up to a constant) on the unconstrained scale and its gradient."""
        data = _as_data(data)
        mu, log_sigma, logits = self.split(theta)
        if not np.all(np.isfinite(theta)):
            raise DensityError("log density requested at a non-finite parameter vector")
        sigma = np.exp(log_sigma)
        log_w = logits - _logsumexp(logits, axis=0)

        z = (data[:, None] - mu[None, :]) / sigma[None, :]
        comp = log_w[None, :] - log_sigma[None, :] - LOG_SQRT_2PI - 0.5 * z * z
        ll_i = _logsumexp(comp, axis=1)
        resp = np.exp(comp - ll_i[:, None])

        m0, s0 = self.prior_mean, self.prior_scale
        mu_scale = 2.0 * s0
        lp_mu = -0.5 * ((mu - m0) / mu_scale) ** 2 - math.log(mu_scale) - LOG_SQRT_2PI
        lp_sigma = math.log(2.0) - math.log(s0) - LOG_SQRT_2PI - 0.5 * (sigma / s0) ** 2 + log_sigma
        lp_logit = -0.5 * logits**2 - LOG_SQRT_2PI
        value = float(ll_i.sum() + lp_mu.sum() + lp_sigma.sum() + lp_logit.sum())

        g_mu = np.sum(resp * z, axis=0) / sigma - (mu - m0) / mu_scale**2
        g_ls = np.sum(resp * (z * z - 1.0), axis=0) - (sigma / s0) ** 2 + 1.0
        g_logit = resp.sum(axis=0) - data.size * np.exp(log_w) - logits
        grad = np.concatenate([g_mu, g_ls, g_logit])
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            raise DensityError("log density or its gradient is non-finite")
        return value, grad

    def predictive(self, row, n, rng: SeededRng) -> np.ndarray:
        """Draws from the mixture given one constrained parameter row."""
        K = self.n_components
        mu, sigma, w = row[:K], row[K : 2 * K], row[2 * K :]
        comp = rng.choice(K, size=n, p=w / w.sum())
        return mu[comp] + sigma[comp] * rng.normal(size=n)


@dataclass(frozen=True)
class GaussianTarget:
    """Independent normal target on R^dim; the data argument is ignored."""

    loc: float = 0.0
    scale: float = 1.0
    dim: int = 1

    @property
    def param_names(self):
        return tuple(f"x_{i + 1}" for i in range(self.dim))

    def initial_point(self, data=None):
        return np.full(self.dim, float(self.loc))

    def constrain(self, theta):
        return np.asarray(theta, dtype=np.float64).copy()

    def log_density(self, theta, data=None):
        theta = np.asarray(theta, dtype=np.float64)
        z = (theta - self.loc) / self.scale
        return float(-0.5 * np.sum(z * z)), -z / self.scale

    def predictive(self, row, n, rng):
        return np.asarray(row)[rng.integers(0, self.dim, size=n)]


def _as_data(data):
    if data is None:
        return np.zeros(0)
    data = np.asarray(data, dtype=np.float64).ravel()
    return data


def log_posterior(model, theta, data):
    """(value, gradient) of the model's log density at ``theta``."""
    data = _as_data(data)
    if isinstance(model, MixtureModel) and data.size == 0:
        raise DomainError("log_posterior needs at least one observation")
    return model.log_density(theta, data)


@dataclass(frozen=True)
class NutsConfig:
    warmup: int = 1000
    samples: int = 5000
    target_accept: float = 0.8
    max_depth: int = 10
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    mu_da: float | None = None
    max_delta_h: float = 1000.0
    max_divergent_fraction: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.target_accept < 1.0:
            raise DomainError(f"target acceptance must lie in (0, 1), got {self.target_accept}")
        if not 1 <= self.max_depth <= 12:
            raise DomainError(f"max tree depth must be in 1..12, got {self.max_depth}")
        if self.samples <= 0 or self.warmup < 0:
            raise DomainError("need a positive number of kept draws and non-negative warmup")
        if not (self.gamma > 0 and self.t0 >= 0 and 0.5 < self.kappa <= 1.0):
            raise DomainError("dual averaging requires gamma > 0, t0 >= 0 and kappa in (0.5, 1]")

    def to_dict(self):
        return asdict(self)


def leapfrog(theta, r, eps, grad_fn):
    """One leapfrog step for the Hamiltonian -log pi(theta) + |r|^2 / 2.

    ``grad_fn`` returns the gradient of log pi. Momentum and position are
    updated in half/full/half steps.
    """
    theta = np.asarray(theta, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    r_half = r + 0.5 * eps * grad_fn(theta)
    theta_new = theta + eps * r_half
    r_new = r_half + 0.5 * eps * grad_fn(theta_new)
    return theta_new, r_new


class _Target:
    """Caches-free wrapper returning (logp, grad) and tolerating density failures."""

    def __init__(self, model, data):
        self.model = model
        self.data = _as_data(data)
        self.n_evals = 0

    def __call__(self, theta):
        self.n_evals += 1
        if not np.all(np.isfinite(theta)):
            return -np.inf, np.full_like(theta, np.nan)
        try:
            return self.model.log_density(theta, self.data)
        except DensityError:
            return -np.inf, np.full_like(theta, np.nan)


def _step(target, theta, r, grad, eps):
    r_half = r + 0.5 * eps * grad
    theta_new = theta + eps * r_half
    logp, grad_new = target(theta_new)
    r_new = r_half + 0.5 * eps * grad_new
    return theta_new, r_new, logp, grad_new


@dataclass
class Point:
    theta: np.ndarray
    r: np.ndarray
    logp: float
    grad: np.ndarray


@dataclass
class Subtree:
    minus: Point
    plus: Point
    proposal: Point
    log_weight: float
    turning: bool
    divergent: bool
    accept_sum: float
    n_leapfrog: int
    depth: int

    @property
    def stop(self):
        return self.turning or self.divergent


def _is_turning(minus: Point, plus: Point) -> bool:
    span = plus.theta - minus.theta
    return bool(span @ minus.r < 0 or span @ plus.r < 0)


def build_tree(target, point: Point, direction: int, depth: int, eps: float, h0: float, rng: SeededRng, max_delta_h: float = 1000.0) -> Subtree:
    """Grow 2**depth leapfrog steps from ``point`` in ``direction`` (+1/-1).

    ``h0`` is the Hamiltonian at the start of the transition. Within the
    subtree, the candidate is drawn in proportion to exp(-H).
    """
    if depth == 0:
        theta, r, logp, grad = _step(target, point.theta, point.r, point.grad, direction * eps)
        h = -logp + 0.5 * float(r @ r)
        delta = h - h0
        if not math.isfinite(delta):
            delta = math.inf
        divergent = delta > max_delta_h
        leaf = Point(theta, r, logp, grad)
        return Subtree(
            minus=leaf,
            plus=leaf,
            proposal=leaf,
            log_weight=-delta if not divergent else -math.inf,
            turning=False,
            divergent=divergent,
            accept_sum=math.exp(min(0.0, -delta)) if math.isfinite(delta) else 0.0,
            n_leapfrog=1,
            depth=0,
        )

    first = build_tree(target, point, direction, depth - 1, eps, h0, rng, max_delta_h)
    if first.stop:
        return first
    edge = first.plus if direction > 0 else first.minus
    second = build_tree(target, edge, direction, depth - 1, eps, h0, rng, max_delta_h)

    accept_sum = first.accept_sum + second.accept_sum
    n_leapfrog = first.n_leapfrog + second.n_leapfrog
    minus, plus = (first.minus, second.plus) if direction > 0 else (second.minus, first.plus)
    if second.stop:
        return Subtree(minus, plus, first.proposal, first.log_weight, second.turning, second.divergent, accept_sum, n_leapfrog, depth)

    log_weight = float(np.logaddexp(first.log_weight, second.log_weight))
    proposal = first.proposal
    if math.log(rng.uniform()) < second.log_weight - log_weight:
        proposal = second.proposal
    turning = _is_turning(minus, plus)
    return Subtree(minus, plus, proposal, log_weight, turning, False, accept_sum, n_leapfrog, depth)


@dataclass(frozen=True)
class Transition:
    point: Point
    depth: int
    n_leapfrog: int
    divergent: bool
    accept_stat: float


def nuts_transition(target, current: Point, eps: float, rng: SeededRng, max_depth: int = 10, max_delta_h: float = 1000.0) -> Transition:
    r0 = rng.normal(size=current.theta.shape)
    start = Point(current.theta, r0, current.logp, current.grad)
    h0 = -current.logp + 0.5 * float(r0 @ r0)
    minus = plus = start
    proposal = start
    log_weight = 0.0
    depth = 0
    accept_sum = 0.0
    n_leapfrog = 0
    divergent = False
    while depth < max_depth:
        direction = 1 if rng.uniform() < 0.5 else -1
        edge = plus if direction > 0 else minus
        sub = build_tree(target, edge, direction, depth, eps, h0, rng, max_delta_h)
        accept_sum += sub.accept_sum
        n_leapfrog += sub.n_leapfrog
        depth += 1
        if direction > 0:
            plus = sub.plus
        else:
            minus = sub.minus
        if sub.stop:
            divergent = sub.divergent
            break
        # biased progressive sampling favours the newer half of the trajectory
        if math.log(rng.uniform()) < sub.log_weight - log_weight:
            proposal = sub.proposal
        log_weight = float(np.logaddexp(log_weight, sub.log_weight))
        if _is_turning(minus, plus):
            break
    accept = accept_sum / n_leapfrog if n_leapfrog else 0.0
    return Transition(proposal, depth, n_leapfrog, divergent, accept)


def find_reasonable_epsilon(model, theta0, data, rng: SeededRng, max_iter: int = 100) -> float:
    """Double or halve a trial step until one-step acceptance crosses 0.5."""
    target = _Target(model, data)
    theta0 = np.asarray(theta0, dtype=np.float64)
    logp0, grad0 = target(theta0)
    if not math.isfinite(logp0):
        raise TuningError("log density is not finite at the initial point")
    eps = 1.0
    r0 = rng.normal(size=theta0.shape)
    h0 = -logp0 + 0.5 * float(r0 @ r0)

    def log_ratio(e):
        _, r, logp, _ = _step(target, theta0, r0, grad0, e)
        val = h0 - (-logp + 0.5 * float(r @ r))
        return val if math.isfinite(val) else -math.inf

    lr = log_ratio(eps)
    a = 1.0 if lr > math.log(0.5) else -1.0
    for _ in range(max_iter):
        if not a * lr > -a * math.log(2.0):
            return eps
        eps *= 2.0**a
        lr = log_ratio(eps)
    raise TuningError(f"step size search did not cross acceptance 0.5 within {max_iter} iterations (eps={eps:g})")


class DualAveraging:
    """Step-size adaptation toward a target mean acceptance statistic."""

    def __init__(self, eps0, target_accept=0.8, gamma=0.05, t0=10.0, kappa=0.75, mu=None):
        self.mu = math.log(10.0 * eps0) if mu is None else mu
        self.target = target_accept
        self.gamma, self.t0, self.kappa = gamma, t0, kappa
        self.h_bar = 0.0
        self.log_eps_bar = 0.0
        self.m = 0
        self.log_eps = math.log(eps0)

    def update(self, accept_stat) -> float:
        self.m += 1
        m = self.m
        w = 1.0 / (m + self.t0)
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_stat)
        self.log_eps = self.mu - math.sqrt(m) / self.gamma * self.h_bar
        eta = m ** (-self.kappa)
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar
        return math.exp(self.log_eps)

    @property
    def final_eps(self) -> float:
        return math.exp(self.log_eps_bar)


@dataclass(frozen=True)
class PosteriorSamples:
    """Kept draws on the constrained scale plus per-draw diagnostics."""

    draws: np.ndarray
    names: tuple
    tree_depth: np.ndarray
    divergent: np.ndarray
    step_size: np.ndarray
    accept_stat: np.ndarray
    n_leapfrog: np.ndarray
    unconstrained: np.ndarray

    def __len__(self):
        return self.draws.shape[0]

    @property
    def divergence_rate(self) -> float:
        return float(np.mean(self.divergent)) if len(self) else 0.0


def nuts_sample(model, data, config: NutsConfig, theta0=None) -> PosteriorSamples:
    """Warm up the step size by dual averaging, then draw with it fixed."""
    data = _as_data(data)
    if isinstance(model, MixtureModel) and data.size == 0:
        raise DomainError("cannot fit a density to no observations")
    rng = SeededRng(config.seed)
    target = _Target(model, data)
    theta = model.initial_point(data) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    logp, grad = target(theta)
    if not math.isfinite(logp):
        raise DensityError("log density is not finite at the initial point")
    current = Point(theta, np.zeros_like(theta), logp, grad)

    eps = find_reasonable_epsilon(model, theta, data, rng)
    adapt = DualAveraging(eps, config.target_accept, config.gamma, config.t0, config.kappa, config.mu_da)
    for _ in range(config.warmup):
        tr = nuts_transition(target, current, eps, rng, config.max_depth, config.max_delta_h)
        current = tr.point
        eps = adapt.update(tr.accept_stat)
    if config.warmup:
        eps = adapt.final_eps

    n = config.samples
    raw = np.empty((n, theta.size))
    depth = np.empty(n, dtype=np.int64)
    div = np.zeros(n, dtype=bool)
    acc = np.empty(n)
    nlf = np.empty(n, dtype=np.int64)
    for i in range(n):
        tr = nuts_transition(target, current, eps, rng, config.max_depth, config.max_delta_h)
        current = tr.point
        raw[i] = current.theta
        depth[i] = tr.depth
        div[i] = tr.divergent
        acc[i] = tr.accept_stat
        nlf[i] = tr.n_leapfrog
    draws = np.array([model.constrain(row) for row in raw])
    samples = PosteriorSamples(
        draws=draws,
        names=tuple(model.param_names),
        tree_depth=depth,
        divergent=div,
        step_size=np.full(n, eps),
        accept_stat=acc,
        n_leapfrog=nlf,
        unconstrained=raw,
    )
    if samples.divergence_rate > config.max_divergent_fraction:
        raise QualityError(samples.divergence_rate, config.max_divergent_fraction)
    return samples


def posterior_predictive(model, samples: PosteriorSamples, n: int, rng: SeededRng) -> np.ndarray:
    """``n`` price draws, each from a uniformly chosen posterior row."""
    if len(samples) == 0:
        raise DomainError("posterior predictive needs at least one posterior draw")
    if n == 0:
        return np.zeros(0)
    rows = rng.integers(0, len(samples), size=n)
    out = np.empty(n)
    for i, row in enumerate(rows):
        out[i] = model.predictive(samples.draws[row], 1, rng)[0]
    return out
