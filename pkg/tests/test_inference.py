"""Adjusted-inference tests: survival function oracles, debiasing, reports."""

import json
import math

import numpy as np
import pytest

from hdlogit import (
    Dataset,
    adjust,
    chi2_survival,
    corrected_se,
    debias,
    debiased_predict,
    fit_mle,
    lrt_pvalue,
    rho_prime,
    solve_system,
)
from hdlogit.simulate import gen_beta, gen_gaussian_design, gen_response

SQRT5 = np.sqrt(5.0)


def upper_gamma_cf(a, x, iters=300):
    """Regularized upper incomplete gamma Q(a, x) by Lentz's continued
    fraction (independent oracle, valid for x > a + 1)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, iters):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
    log_prefix = -x + a * math.log(x) - math.lgamma(a)
    return math.exp(log_prefix) * h


class TestChiSquareSurvival:
    def test_zero_statistic(self):
        assert lrt_pvalue(0.0, 1.166, 1) == 1.0
        assert chi2_survival(0.0, 3) == 1.0

    def test_classical_quantile(self):
        assert lrt_pvalue(3.8415, 1.0, 1) == pytest.approx(0.05, abs=1e-4)

    def test_against_continued_fraction_oracle(self):
        for df in (1, 2, 5):
            for x in (4.0, 9.0, 25.0, 60.0):
                if x > df / 2 + 1:
                    assert chi2_survival(x, df) == pytest.approx(
                        upper_gamma_cf(df / 2, x / 2), rel=1e-10)

    def test_gaussian_tail_identity(self):
        # survival of chi^2_1 at x equals 2 Phi(-sqrt(x))
        from scipy.special import ndtr
        for x in (0.5, 2.0, 7.0, 20.0):
            assert chi2_survival(x, 1) == pytest.approx(2 * ndtr(-np.sqrt(x)), abs=1e-10)

    def test_strictly_decreasing(self):
        xs = np.linspace(0.1, 30, 50)
        vals = [lrt_pvalue(x, 1.2, 1) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            lrt_pvalue(-1.0, 1.0, 1)
        with pytest.raises(ValueError):
            lrt_pvalue(1.0, 0.0, 1)
        with pytest.raises(ValueError):
            chi2_survival(1.0, 0)


class TestDebias:
    def test_identity_at_one(self):
        b = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(debias(b, 1.0), b)

    def test_probe_estimate_close_to_theory(self):
        # the estimated multiplier 1.511 debiases within 1% of 1.499
        b = np.linspace(-10, 10, 33)
        np.testing.assert_allclose(debias(b, 1.511), debias(b, 1.499), rtol=0.01)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            debias(np.ones(2), 0.0)

    def test_null_mean_centered_after_debias(self):
        rng = np.random.default_rng(31)
        n, p = 4000, 800
        beta = gen_beta({"kind": "half_null_gauss", "mean": 7.0, "var": 1.0},
                        p, SQRT5, 1.0 / n, rng)
        X = gen_gaussian_design(n, p, rng)
        y = gen_response(X, beta, rng)
        fit = fit_mle(Dataset(X=X, y=y))
        triple = solve_system(0.2, SQRT5)
        deb = debias(fit.beta_hat, triple.alpha_star)
        nulls = deb[p // 2:]
        se = triple.sigma_star / triple.alpha_star / np.sqrt(nulls.size)
        assert abs(nulls.mean()) < 3 * se


class TestCorrectedSe:
    def test_native_scaling_returns_sigma(self):
        triple = solve_system(0.2, SQRT5)
        n = 4000
        assert corrected_se(triple, n, 1.0 / n) == pytest.approx(triple.sigma_star, rel=1e-12)

    def test_ratio_to_classical(self):
        from hdlogit import classical_se_theoretical
        triple = solve_system(0.2, SQRT5)
        ratio = corrected_se(triple, 4000, 1.0 / 4000) / classical_se_theoretical(SQRT5)
        assert ratio == pytest.approx(4.744 / 2.66, abs=0.01)

    def test_unit_variance_scaling(self):
        triple = solve_system(0.2, SQRT5)
        assert corrected_se(triple, 4000, 1.0) == pytest.approx(
            triple.sigma_star / np.sqrt(4000), rel=1e-12)

    def test_rejects_bad_variance(self):
        triple = solve_system(0.1, 1.0)
        with pytest.raises(ValueError):
            corrected_se(triple, 100, 0.0)


class TestDebiasedPredict:
    def test_at_origin(self):
        assert debiased_predict(np.zeros(3), np.array([1.0, 2.0, 3.0]), 1.3) == 0.5

    def test_alpha_one_is_plugin(self):
        x = np.array([0.2, -0.1])
        b = np.array([1.0, 2.0])
        assert debiased_predict(x, b, 1.0) == pytest.approx(rho_prime(x @ b), rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            debiased_predict(np.zeros(3), np.zeros(2), 1.0)

    def test_calibration_beats_raw_plugin(self):
        # raw plugin predictions at fresh covariates stretch the log-odds
        # by alpha* and pile mass onto the extremes; debiasing restores
        # unit slope, shrinks the extreme mass, and lowers pointwise error
        triple = solve_system(0.2, SQRT5)
        slopes = []
        n, p = 4000, 800
        for seed in (37, 38, 39):
            rng = np.random.default_rng(seed)
            beta = gen_beta({"kind": "iid_gauss", "mean": 3.0, "var": 16.0},
                            p, SQRT5, 1.0 / n, rng)
            X = gen_gaussian_design(n, p, rng)
            y = gen_response(X, beta, rng)
            fit = fit_mle(Dataset(X=X, y=y))
            X_new = gen_gaussian_design(4000, p, rng)
            t_true = X_new @ beta
            slopes.append((t_true @ (X_new @ fit.beta_hat)) / (t_true @ t_true))
            if seed == 37:
                p_true = rho_prime(t_true)
                p_raw = debiased_predict(X_new, fit.beta_hat, 1.0)
                p_deb = debiased_predict(X_new, fit.beta_hat, triple.alpha_star)
                tail = lambda q: np.mean((q < 0.05) | (q > 0.95))
                assert tail(p_raw) > 1.7 * tail(p_true)
                assert tail(p_deb) < 1.35 * tail(p_true)
                assert np.abs(p_deb - p_true).mean() < np.abs(p_raw - p_true).mean() - 0.01
        # per-replicate slope SD is ~0.13 at this size; average three
        assert np.mean(slopes) == pytest.approx(triple.alpha_star, abs=0.15)
        assert np.mean(slopes) / triple.alpha_star == pytest.approx(1.0, abs=0.10)


class TestAdjustReport:
    def test_report_round_trips_and_flags(self):
        rng = np.random.default_rng(41)
        n, p = 600, 30
        beta = gen_beta({"kind": "half_const", "value": 1.0}, p, 1.0, 1.0 / n, rng)
        X = gen_gaussian_design(n, p, rng)
        y = gen_response(X, beta, rng)
        data = Dataset(X=X, y=y)
        fit = fit_mle(data)
        triple = solve_system(p / n, 1.0)
        inf = adjust(data, fit, triple, test=[p - 1, p - 2], column_variance="paper")
        assert inf.lrt_factor == triple.lrt_factor
        assert np.all((inf.pvalues >= 0) & (inf.pvalues <= 1))
        np.testing.assert_allclose(inf.se_corrected, triple.sigma_star, rtol=1e-12)
        report = inf.to_report()
        blob = json.dumps(report)
        back = json.loads(blob)
        assert back["triple"]["lrt_factor"] == pytest.approx(triple.lrt_factor)
        assert back["tests"]["coordinates"] == [p - 1, p - 2]
        assert "heuristic" in back["standard_errors"]["corrected_note"]

    def test_sample_variance_mode(self):
        rng = np.random.default_rng(43)
        n, p = 400, 10
        X = gen_gaussian_design(n, p, rng)
        y = (rng.random(n) < 0.5).astype(float)
        data = Dataset(X=X, y=y)
        fit = fit_mle(data)
        triple = solve_system(p / n, 0.5)
        inf = adjust(data, fit, triple, column_variance="sample")
        expected = triple.sigma_star / np.sqrt(n * X.var(axis=0, ddof=1))
        np.testing.assert_allclose(inf.se_corrected, expected, rtol=1e-12)

    def test_unconverged_fit_rejected(self):
        rng = np.random.default_rng(47)
        X = gen_gaussian_design(50, 5, rng)
        y = (rng.random(50) < 0.5).astype(float)
        data = Dataset(X=X, y=y)
        from hdlogit import FitResult
        bogus = FitResult(beta_hat=np.zeros(5), converged=False, separated=False,
                          neg_log_likelihood=0.0, iterations=0, grad_norm=1.0)
        with pytest.raises(ValueError):
            adjust(data, bogus, solve_system(0.1, 0.5))
