"""Message-passing tests: fixed-point identities and the Newton oracle."""

import numpy as np
import pytest

from hdlogit import (
    Dataset,
    NonConvergenceError,
    amp_run,
    fit_mle,
    gradient,
    prox_rho,
    psi,
    rho_prime,
    simulation_init,
    solve_system,
)
from hdlogit.amp import trajectory_to_csv
from hdlogit.simulate import gen_beta, gen_gaussian_design, gen_response


def make_instance(n, p, gamma, seed):
    rng = np.random.default_rng(seed)
    beta = gen_beta({"kind": "half_const", "value": 1.0}, p, gamma, 1.0 / n, rng)
    X = gen_gaussian_design(n, p, rng)
    y = gen_response(X, beta, rng)
    return Dataset(X=X, y=y), beta, rng


class TestPsi:
    def test_tails_vanish(self):
        assert psi(0.0, -80.0, 1.0) == pytest.approx(0.0, abs=1e-12)
        assert psi(1.0, 80.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_against_prox_oracle(self):
        # lam=1, y=1, s=0: 1 - rho'(prox_1(1)) with the prox from bisection
        lo, hi = 0.0, 1.0
        f = lambda x: 1.0 / (1.0 + np.exp(-x)) + x - 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        expected = 1.0 - rho_prime(0.5 * (lo + hi))
        assert psi(1.0, 0.0, 1.0) == pytest.approx(expected, abs=1e-12)
        # here 1 - rho'(prox) equals the prox point itself since rho'(x)+x = 1
        assert psi(1.0, 0.0, 1.0) == pytest.approx(0.4010581375415, abs=1e-10)

    def test_requires_positive_lambda(self):
        with pytest.raises(ValueError):
            psi(1.0, 0.0, 0.0)


class TestAmpRun:
    def test_fixed_point_seeding_is_stationary(self):
        data, beta, rng = make_instance(800, 80, 1.0, 5)
        triple = solve_system(0.1, 1.0)
        fit = fit_mle(data, tol=1e-14, max_iter=200)
        lam = triple.lambda_star
        eta = data.X @ fit.beta_hat
        # the prox identity fixes S so that Psi reproduces the score residual
        S = eta - lam * (data.y - rho_prime(eta))
        corr = psi(data.y, S, lam)
        beta1 = fit.beta_hat + (data.X.T @ corr) / (data.p / data.n)
        assert np.abs(beta1 - fit.beta_hat).max() < 1e-8

    def test_matches_newton_mle(self):
        data, beta, rng = make_instance(1000, 100, 1.0, 7)
        triple = solve_system(0.1, 1.0)
        fit = fit_mle(data, tol=1e-12, max_iter=200)
        traj = amp_run(data, triple, simulation_init(beta, triple, rng), 200,
                       reference=fit.beta_hat)
        assert traj.dist_to_ref[-1] < 1e-4
        assert traj.grad_norms[-1] < 1e-6

    def test_bulk_spread_tracks_sigma_star(self):
        # average squared deviation from alpha* beta approaches sigma*^2;
        # the single-replicate statistic has ~9.5% relative SD at p = 400,
        # so four replicates are averaged to hold the 10% tolerance
        triple = solve_system(0.1, np.sqrt(5.0))
        ratios = []
        for seed in (1, 2, 3, 4):
            data, beta, rng = make_instance(4000, 400, np.sqrt(5.0), seed)
            traj = amp_run(data, triple, simulation_init(beta, triple, rng), 200)
            dev = traj.final.beta_t - triple.alpha_star * beta
            ratios.append(float(dev @ dev / data.p) / triple.sigma_star**2)
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.10)

    def test_gradient_norm_eventually_decreasing(self):
        data, beta, rng = make_instance(600, 60, 1.0, 13)
        triple = solve_system(0.1, 1.0)
        traj = amp_run(data, triple, simulation_init(beta, triple, rng), 120)
        g = traj.grad_norms
        tail = g[len(g) // 2:]
        assert np.all(np.diff(np.log(np.maximum(tail, 1e-300))) < 0.5)
        assert tail[-1] < tail[0]

    def test_blowup_guard_raises(self):
        data, beta, rng = make_instance(60, 24, 1.0, 17)
        triple = solve_system(0.1, 1.0)
        with pytest.raises(NonConvergenceError):
            amp_run(data, triple, np.full(data.p, 1e307), 50)

    def test_separated_data_never_converges(self):
        # without an MLE the iterates drift instead of settling
        rng = np.random.default_rng(17)
        n, p = 60, 24
        X = rng.normal(0, 1 / np.sqrt(n), (n, p))
        y = (X @ rng.normal(size=p) > 0).astype(float)
        triple = solve_system(0.1, 1.0)
        traj = amp_run(Dataset(X=X, y=y), triple, None, 400)
        assert not traj.converged
        assert traj.grad_norms[-1] > 1e-9 * n

    def test_trajectory_csv(self, tmp_path):
        data, beta, rng = make_instance(300, 30, 1.0, 19)
        triple = solve_system(0.1, 1.0)
        fit = fit_mle(data)
        traj = amp_run(data, triple, simulation_init(beta, triple, rng), 50,
                       reference=fit.beta_hat)
        path = tmp_path / "traj.csv"
        trajectory_to_csv(traj, path)
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        assert body.shape == (traj.iterations, 3)
        np.testing.assert_allclose(body[:, 1], traj.grad_norms, rtol=1e-15)
