"""Quadrature rule exactness and bivariate expectation checks."""

import numpy as np
import pytest

from hdlogit import (
    BivariateGaussianSpec,
    expect_bivariate,
    gh_rule,
    prox_rho_vec,
    rho_double_prime,
    rho_prime,
)

SPEC_MAIN = BivariateGaussianSpec(alpha=1.2, sigma=3.3, kappa=0.1, gamma=np.sqrt(5.0))


def draw_pair(spec, size, rng):
    """Monte Carlo sampler with the spec's covariance (independent oracle)."""
    z1 = rng.normal(size=size)
    z2 = rng.normal(size=size)
    q1 = spec.gamma * z1
    q2 = -spec.alpha * spec.gamma * z1 + np.sqrt(spec.kappa) * spec.sigma * z2
    return q1, q2


class TestRule:
    def test_weights_sum_to_one(self):
        for order in (2, 16, 48, 96):
            r = gh_rule(order)
            assert np.sum(r.weights) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("k,expected", [(1, 0.0), (2, 1.0), (3, 0.0), (4, 3.0),
                                            (5, 0.0), (6, 15.0), (7, 0.0), (8, 105.0)])
    def test_normal_moments_exact(self, k, expected):
        r = gh_rule(16)
        val = np.sum(r.weights * r.nodes**k)
        assert val == pytest.approx(expected, abs=1e-10)

    def test_low_order_moment_floor(self):
        assert gh_rule(2).expect(lambda z: z**2) == pytest.approx(1.0, abs=1e-12)
        assert gh_rule(3).expect(lambda z: z**4) == pytest.approx(3.0, abs=1e-10)

    def test_unsupported_orders(self):
        for bad in (1, 0, 257):
            with pytest.raises(ValueError):
                gh_rule(bad)


class TestBivariate:
    def test_first_component_variance(self):
        spec = BivariateGaussianSpec(alpha=1.2, sigma=3.0, kappa=0.1, gamma=np.sqrt(5.0))
        v = expect_bivariate(lambda q1, q2: q1**2, spec, gh_rule(48))
        assert v == pytest.approx(5.0, abs=1e-10)

    def test_cross_covariance(self):
        spec = BivariateGaussianSpec(alpha=1.2, sigma=3.0, kappa=0.1, gamma=np.sqrt(5.0))
        v = expect_bivariate(lambda q1, q2: q1 * q2, spec, gh_rule(48))
        assert v == pytest.approx(-6.0, abs=1e-10)

    def test_sigmoid_tilt_normalizes(self):
        # E[2 rho'(G)] = 1 for centered Gaussian G by rho'(t) + rho'(-t) = 1
        spec = BivariateGaussianSpec(alpha=1.2, sigma=3.0, kappa=0.1, gamma=np.sqrt(5.0))
        v = expect_bivariate(lambda q1, q2: 2.0 * rho_prime(q1), spec, gh_rule(48))
        assert v == pytest.approx(1.0, abs=1e-8)
        rng = np.random.default_rng(11)
        q1, _ = draw_pair(spec, 10**7, rng)
        mc = 2.0 * rho_prime(q1)
        assert abs(v - mc.mean()) < 4.0 * mc.std() / np.sqrt(mc.size)

    def test_degenerate_gamma_reduces_to_1d(self):
        spec = BivariateGaussianSpec(alpha=0.0, sigma=2.0, kappa=0.25, gamma=0.0)
        # Q2 = sqrt(kappa)*sigma*Z = Z here
        v = expect_bivariate(lambda q1, q2: q2**2 + q1**2, spec, gh_rule(48))
        assert v == pytest.approx(0.25 * 4.0, abs=1e-10)

    def test_degenerate_sigma_reduces_to_1d(self):
        spec = BivariateGaussianSpec(alpha=1.5, sigma=0.0, kappa=0.2, gamma=2.0)
        v = expect_bivariate(lambda q1, q2: (q2 + spec.alpha * q1)**2, spec, gh_rule(48))
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            BivariateGaussianSpec(alpha=1.0, sigma=-0.1, kappa=0.1, gamma=1.0)
        with pytest.raises(ValueError):
            BivariateGaussianSpec(alpha=1.0, sigma=1.0, kappa=1.5, gamma=1.0)
        with pytest.raises(ValueError):
            BivariateGaussianSpec(alpha=1.0, sigma=1.0, kappa=0.1, gamma=-1.0)

    def test_covariance_psd(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            spec = BivariateGaussianSpec(alpha=rng.normal(0, 2), sigma=rng.uniform(0, 5),
                                         kappa=rng.uniform(0.01, 0.99), gamma=rng.uniform(0, 4))
            cov = spec.covariance()
            eig = np.linalg.eigvalsh(cov)
            assert eig.min() >= -1e-12
            det = spec.kappa * spec.sigma**2 * spec.gamma**2
            assert np.linalg.det(cov) == pytest.approx(det, rel=1e-8, abs=1e-10)


def _system_integrands(lam):
    """The three fixed-point integrands at proximal scale lam."""
    def f_third(q1, q2):
        return 2.0 * rho_prime(q1) / (1.0 + lam * rho_double_prime(prox_rho_vec(lam, q2)))

    def f_alpha(q1, q2):
        return 2.0 * rho_prime(q1) * q1 * lam * rho_prime(prox_rho_vec(lam, q2))

    def f_sigma(q1, q2):
        return 2.0 * rho_prime(q1) * (lam * rho_prime(prox_rho_vec(lam, q2)))**2

    return f_third, f_alpha, f_sigma


class TestSystemIntegrands:
    def test_quadrature_matches_monte_carlo(self):
        # each integrand at order 48 within 4 MC standard errors of 1e7 draws
        rng = np.random.default_rng(123)
        q1, q2 = draw_pair(SPEC_MAIN, 10**7, rng)
        rule = gh_rule(48)
        for f in _system_integrands(1.0):
            quad = expect_bivariate(f, SPEC_MAIN, rule)
            vals = f(q1, q2)
            se = vals.std() / np.sqrt(vals.size)
            assert abs(quad - vals.mean()) < 4.0 * se

    def test_order_stability(self):
        # the solver's default order is stable below 1e-8 against a doubled
        # rule across the working grid (48 leaves ~1e-7 at the widest point)
        r64, r128 = gh_rule(64), gh_rule(128)
        for kappa in (0.05, 0.1, 0.2, 0.3):
            for gamma in (0.5, 1.0, np.sqrt(5.0)):
                spec = BivariateGaussianSpec(alpha=1.5, sigma=4.8, kappa=kappa, gamma=gamma)
                for f in _system_integrands(3.03):
                    a = expect_bivariate(f, spec, r64)
                    b = expect_bivariate(f, spec, r128)
                    assert abs(a - b) < 1e-8
