import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idprice.errors import DensityError, DomainError, QualityError, TuningError
from idprice.numerics import SeededRng, finite_diff_grad
from idprice.nuts import (
    DualAveraging,
    GaussianTarget,
    MixtureModel,
    NutsConfig,
    Point,
    PosteriorSamples,
    _Target,
    build_tree,
    find_reasonable_epsilon,
    leapfrog,
    log_posterior,
    nuts_sample,
    nuts_transition,
    posterior_predictive,
)


def _std_normal_grad(theta):
    return -np.asarray(theta)


def _hamiltonian(theta, r):
    return 0.5 * float(np.sum(theta**2)) + 0.5 * float(np.sum(r**2))


def _point(model, theta, r, data=None):
    logp, grad = model.log_density(np.asarray(theta, float), data)
    return Point(np.asarray(theta, float), np.asarray(r, float), logp, grad)


def _mixture_data(n=50, seed=0):
    g = np.random.default_rng(seed)
    return np.concatenate([g.normal(-2, 0.7, n // 2), g.normal(3, 1.2, n - n // 2)])


class TestLeapfrog:
    def test_hand_step(self):
        th, r = leapfrog(np.array([1.0]), np.array([0.0]), 0.1, _std_normal_grad)
        assert th[0] == pytest.approx(0.995, abs=1e-12)
        assert r[0] == pytest.approx(-0.09975, abs=1e-12)
        dh = _hamiltonian(th, r) - _hamiltonian(np.array([1.0]), np.array([0.0]))
        assert abs(dh) == pytest.approx(1.25e-5, abs=1e-7)

    def test_zero_step_is_identity(self):
        th, r = leapfrog(np.array([0.3, -1.2]), np.array([0.5, 0.1]), 0.0, _std_normal_grad)
        np.testing.assert_array_equal(th, [0.3, -1.2])
        np.testing.assert_array_equal(r, [0.5, 0.1])

    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.01, 0.5))
    def test_reversible(self, theta, r, eps):
        theta, r = np.array(theta), np.array(r)
        t1, r1 = leapfrog(theta, r, eps, _std_normal_grad)
        t2, r2 = leapfrog(t1, -r1, eps, _std_normal_grad)
        np.testing.assert_allclose(t2, theta, rtol=0, atol=1e-12)
        np.testing.assert_allclose(-r2, r, rtol=0, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0.01, 0.1))
    def test_reversible_on_mixture(self, theta, r, eps):
        # stable step sizes only; exp(log sigma) terms carry a little more rounding
        theta, r = np.array(theta), np.array(r)
        grad = lambda t: log_posterior(MixtureModel(1, 0.0, 1.0), t, np.array([0.2, -0.4, 1.1]))[1]
        t1, r1 = leapfrog(theta, r, eps, grad)
        t2, r2 = leapfrog(t1, -r1, eps, grad)
        np.testing.assert_allclose(t2, theta, rtol=0, atol=1e-10)
        np.testing.assert_allclose(-r2, r, rtol=0, atol=1e-10)

    def test_volume_preserving(self):
        model = MixtureModel(1, 0.0, 1.0)
        data = np.array([0.2, -0.4, 1.1, 0.7])
        grad = lambda t: log_posterior(model, t, data)[1]
        g = np.random.default_rng(4)
        for _ in range(3):
            z0 = np.concatenate([g.normal(scale=0.5, size=3), g.normal(size=3)])

            def flow(z, i):
                t, r = leapfrog(z[:3], z[3:], 0.2, grad)
                return np.concatenate([t, r])[i]

            J = np.array([finite_diff_grad(lambda z: flow(z, i), z0) for i in range(6)])
            assert abs(np.linalg.det(J) - 1.0) < 1e-8

    def test_energy_error_is_third_order(self):
        def drift(eps):
            th, r = leapfrog(np.array([1.0]), np.array([0.0]), eps, _std_normal_grad)
            return abs(_hamiltonian(th, r) - 0.5)

        assert drift(0.1) / drift(0.05) >= 6.0


class TestLogPosterior:
    @pytest.mark.parametrize("K", [1, 2, 3])
    def test_gradient_matches_finite_differences(self, K):
        data = _mixture_data()
        model = MixtureModel.from_data(data, K)
        theta = model.initial_point(data) + np.random.default_rng(K).normal(scale=0.3, size=model.dim)
        _, g = log_posterior(model, theta, data)
        fd = finite_diff_grad(lambda t: log_posterior(model, t, data)[0], theta, h=1e-6)
        rel = np.abs(g - fd) / np.maximum(np.abs(g), 1e-3)
        assert np.max(rel) < 1e-5

    def test_label_permutation_invariant(self):
        data = _mixture_data()
        model = MixtureModel.from_data(data, 3)
        theta = np.random.default_rng(1).normal(size=9)
        perm = [2, 0, 1]
        swapped = np.concatenate([theta[:3][perm], theta[3:6][perm], theta[6:][perm]])
        assert log_posterior(model, swapped, data)[0] == pytest.approx(log_posterior(model, theta, data)[0], rel=1e-12)

    def test_single_component_stationary_at_mean(self):
        # a very wide prior makes the mean gradient that of the likelihood alone
        data = np.array([1.0, 2.0, 4.5, 7.0])
        model = MixtureModel(1, prior_mean=data.mean(), prior_scale=1e8)
        _, g = log_posterior(model, np.array([data.mean(), math.log(2.0), 0.0]), data)
        assert g[0] == pytest.approx(0.0, abs=1e-12)

    def test_single_component_is_normal_likelihood(self):
        data = np.array([0.5, -1.0, 2.0])
        m = MixtureModel(1, 0.0, 1.0)
        mu, ls = 0.3, math.log(1.5)
        v, _ = log_posterior(m, np.array([mu, ls, 0.4]), data)
        sigma = 1.5
        ll = sum(-math.log(sigma) - 0.5 * math.log(2 * math.pi) - 0.5 * ((x - mu) / sigma) ** 2 for x in data)
        prior = (
            -0.5 * (mu / 2.0) ** 2 - math.log(2.0) - 0.5 * math.log(2 * math.pi)
            + math.log(2) - 0.5 * math.log(2 * math.pi) - 0.5 * sigma**2 + ls
            - 0.5 * 0.4**2 - 0.5 * math.log(2 * math.pi)
        )
        assert v == pytest.approx(ll + prior, abs=1e-12)

    def test_constrained_rows_valid(self):
        m = MixtureModel(3)
        row = m.constrain(np.array([0, 1, 2, -30, 0, 5, 100, -100, 0.0]))
        assert np.all(row[3:6] > 0)
        assert row[6:].sum() == pytest.approx(1.0)

    def test_empty_data(self):
        with pytest.raises(DomainError):
            log_posterior(MixtureModel(2), np.zeros(6), [])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite(self):
        with pytest.raises(DensityError):
            log_posterior(MixtureModel(1), np.array([np.nan, 0.0, 0.0]), [1.0])
        with pytest.raises(DensityError):
            log_posterior(MixtureModel(1), np.array([0.0, -800.0, 0.0]), [1.0])

    @pytest.mark.parametrize("K", [0, 6])
    def test_component_range(self, K):
        with pytest.raises(DomainError):
            MixtureModel(K)


class TestStepSize:
    def test_unit_gaussian(self):
        eps = find_reasonable_epsilon(GaussianTarget(), np.zeros(1), None, SeededRng(42))
        assert 0.5 <= eps <= 4

    def test_tiny_scale(self):
        eps = find_reasonable_epsilon(GaussianTarget(scale=1e-3), np.zeros(1), None, SeededRng(42))
        assert eps < 0.1

    def test_deterministic(self):
        a = find_reasonable_epsilon(GaussianTarget(dim=3), np.zeros(3), None, SeededRng(5))
        b = find_reasonable_epsilon(GaussianTarget(dim=3), np.zeros(3), None, SeededRng(5))
        assert a == b

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_failure_raises_tuning_error(self):
        with pytest.raises(TuningError):
            find_reasonable_epsilon(GaussianTarget(scale=1e-300), np.zeros(1), None, SeededRng(0), max_iter=5)

    def test_dual_averaging_moves_toward_target(self):
        da = DualAveraging(1.0, target_accept=0.8)
        for _ in range(50):
            da.update(0.2)
        assert da.final_eps < 1.0
        da = DualAveraging(1.0, target_accept=0.8)
        for _ in range(50):
            da.update(1.0)
        assert da.final_eps > 1.0


class TestBuildTree:
    def test_depth_zero_is_one_leapfrog(self):
        model = GaussianTarget()
        target = _Target(model, None)
        p = _point(model, [1.0], [0.0])
        sub = build_tree(target, p, +1, 0, 0.1, _hamiltonian(p.theta, p.r), SeededRng(0))
        assert sub.n_leapfrog == 1
        assert sub.plus.theta[0] == pytest.approx(0.995)
        assert sub.plus.r[0] == pytest.approx(-0.09975)
        assert not sub.stop

    def test_antithetic_start_turns(self):
        # released at rest from theta = 1, a long step swings across the mode and
        # the next one comes back: the endpoints move toward each other
        model = GaussianTarget()
        target = _Target(model, None)
        p = _point(model, [1.0], [0.0])
        sub = build_tree(target, p, +1, 1, 2.1, _hamiltonian(p.theta, p.r), SeededRng(0))
        assert sub.turning and sub.stop
        assert sub.n_leapfrog == 2
        np.testing.assert_allclose(sub.minus.theta, [-1.205], atol=1e-12)
        np.testing.assert_allclose(sub.plus.theta, [1.90405], atol=1e-12)

    def test_divergence_flagged(self):
        model = GaussianTarget(scale=0.01)
        target = _Target(model, None)
        p = _point(model, [0.005], [1.0])
        sub = build_tree(target, p, +1, 3, 100.0, -p.logp + 0.5, SeededRng(0))
        assert sub.divergent and sub.stop
        assert sub.n_leapfrog == 1

    def test_non_finite_density_is_divergence(self):
        data = np.array([0.0, 1.0])
        model = MixtureModel(1, 0.5, 1.0)
        target = _Target(model, data)
        p = _point(model, [0.5, 0.0, 0.0], [0.0, -1e6, 0.0], data)
        tr = nuts_transition(target, p, 1.0, SeededRng(0))
        assert np.all(np.isfinite(tr.point.theta))


class TestSampler:
    def test_unit_gaussian(self):
        s = nuts_sample(GaussianTarget(), None, NutsConfig(warmup=1000, samples=5000, seed=42))
        x = s.draws[:, 0]
        assert abs(x.mean()) < 0.05
        assert 0.9 <= x.var(ddof=1) <= 1.1
        assert abs(s.accept_stat.mean() - 0.8) <= 0.1
        assert s.divergent.sum() == 0

    def test_same_seed_same_chain(self):
        data = _mixture_data(40)
        cfg = NutsConfig(warmup=30, samples=40, seed=3)
        a = nuts_sample(MixtureModel.from_data(data, 2), data, cfg)
        b = nuts_sample(MixtureModel.from_data(data, 2), data, cfg)
        np.testing.assert_array_equal(a.draws, b.draws)
        np.testing.assert_array_equal(a.tree_depth, b.tree_depth)
        np.testing.assert_array_equal(a.accept_stat, b.accept_stat)

    def test_rows_satisfy_constraints(self):
        data = _mixture_data(40)
        s = nuts_sample(MixtureModel.from_data(data, 2), data, NutsConfig(warmup=50, samples=50, seed=1))
        assert np.all(np.isfinite(s.draws))
        assert np.all(s.draws[:, 2:4] > 0)
        np.testing.assert_allclose(s.draws[:, 4:].sum(axis=1), 1.0)
        assert s.names == ("mu_1", "mu_2", "sigma_1", "sigma_2", "weight_1", "weight_2")
        assert np.all(s.tree_depth <= 10)

    def test_quality_error_on_divergences(self):
        # a fixed huge step size (no warmup) diverges on nearly every transition
        cfg = NutsConfig(warmup=0, samples=20, seed=0)
        with pytest.raises(QualityError) as ei:
            nuts_sample(GaussianTarget(scale=1.0, dim=50), None, cfg, theta0=np.full(50, 40.0))
        assert ei.value.rate > 0.1

    def test_empty_data(self):
        with pytest.raises(DomainError):
            nuts_sample(MixtureModel(1), [], NutsConfig(warmup=1, samples=1))

    @pytest.mark.parametrize("kw", [{"target_accept": 1.5}, {"target_accept": 0.0}, {"max_depth": 13}, {"samples": 0}])
    def test_config_validation(self, kw):
        with pytest.raises(DomainError):
            NutsConfig(**kw)


class TestPredictive:
    def _samples(self, rows):
        rows = np.asarray(rows, float)
        n = rows.shape[0]
        z = np.zeros(n)
        return PosteriorSamples(rows, ("mu_1", "sigma_1", "weight_1"), z.astype(int), z.astype(bool), z, z, z.astype(int), rows)

    def test_degenerate_posterior(self):
        s = self._samples([[4.2, 1e-12, 1.0]] * 10)
        out = posterior_predictive(MixtureModel(1), s, 100, SeededRng(0))
        np.testing.assert_allclose(out, 4.2, atol=1e-9)

    def test_mean_within_two_standard_errors(self):
        g = np.random.default_rng(7)
        data = g.normal(10.0, 2.0, 300)
        model = MixtureModel.from_data(data, 1)
        s = nuts_sample(model, data, NutsConfig(warmup=300, samples=600, seed=2))
        n = 4000
        gen = posterior_predictive(model, s, n, SeededRng(3))
        se = data.std(ddof=1) * math.sqrt(1 / data.size + 1 / n)
        assert abs(gen.mean() - data.mean()) < 2 * se

    def test_deterministic_and_empty(self):
        s = self._samples([[0.0, 1.0, 1.0], [5.0, 2.0, 1.0]])
        a = posterior_predictive(MixtureModel(1), s, 50, SeededRng(9))
        b = posterior_predictive(MixtureModel(1), s, 50, SeededRng(9))
        np.testing.assert_array_equal(a, b)
        assert posterior_predictive(MixtureModel(1), s, 0, SeededRng(9)).size == 0
        with pytest.raises(DomainError):
            posterior_predictive(MixtureModel(1), self._samples(np.zeros((0, 3))), 5, SeededRng(0))
