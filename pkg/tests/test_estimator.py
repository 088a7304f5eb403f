"""sklearn-facing estimator tests."""

import numpy as np
import pytest
from sklearn.base import clone

from hdlogit import AdjustedLogisticRegression, NonConvergenceError
from hdlogit.simulate import gen_beta, gen_gaussian_design, gen_response


def make_xy(n, p, gamma, seed):
    rng = np.random.default_rng(seed)
    beta = gen_beta({"kind": "half_const", "value": 1.0}, p, gamma, 1.0 / n, rng)
    X = gen_gaussian_design(n, p, rng)
    y = gen_response(X, beta, rng)
    return X, y, beta


class TestApi:
    def test_get_set_params_and_clone(self):
        est = AdjustedLogisticRegression(gamma=2.0, quad_order=64)
        params = est.get_params()
        assert params["gamma"] == 2.0
        assert params["quad_order"] == 64
        est2 = clone(est)
        assert est2.get_params() == params
        est2.set_params(gamma=None)
        assert est2.gamma is None

    def test_fit_known_gamma(self):
        X, y, beta = make_xy(1000, 100, 1.0, 3)
        est = AdjustedLogisticRegression(gamma=1.0).fit(X, y)
        assert est.alpha_ > 1.0
        assert est.coef_.shape == (100,)
        np.testing.assert_allclose(est.coef_debiased_, est.coef_ / est.alpha_, rtol=1e-12)
        assert est.lrt_factor_ > 1.0
        assert est.n_features_in_ == 100

    def test_predict_proba_shape_and_debiasing(self):
        X, y, beta = make_xy(800, 80, 1.5, 5)
        est = AdjustedLogisticRegression(gamma=1.5).fit(X, y)
        P = est.predict_proba(X[:7])
        assert P.shape == (7, 2)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
        from hdlogit import debiased_predict
        np.testing.assert_allclose(
            P[:, 1], debiased_predict(X[:7], est.coef_, est.alpha_), rtol=1e-12)
        yhat = est.predict(X[:7])
        assert set(np.unique(yhat)) <= {0.0, 1.0}

    def test_probe_path(self):
        X, y, beta = make_xy(700, 70, 2.0, 7)
        est = AdjustedLogisticRegression(gamma=None, probe_B=15, probe_mode="bisect",
                                         random_state=11, workers=1).fit(X, y)
        assert hasattr(est, "probe_result_")
        assert est.gamma_ == est.probe_result_.gamma_hat
        assert 1.0 < est.gamma_ < 3.5
        assert est.inference_.provenance == "probe-frontier"

    def test_tested_coordinates(self):
        X, y, beta = make_xy(500, 40, 1.0, 9)
        est = AdjustedLogisticRegression(gamma=1.0, test=[38, 39]).fit(X, y)
        assert est.pvalues_.shape == (2,)
        assert np.all((est.pvalues_ >= 0) & (est.pvalues_ <= 1))

    def test_rejects_nonbinary_labels(self):
        X, y, _ = make_xy(100, 5, 0.5, 13)
        with pytest.raises(ValueError):
            AdjustedLogisticRegression(gamma=0.5).fit(X, y + 1.0)

    def test_rejects_separated_data(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(60, 6))
        y = (X @ rng.normal(size=6) > 0).astype(float)
        with pytest.raises(NonConvergenceError):
            AdjustedLogisticRegression(gamma=1.0).fit(X, y)

    def test_feature_count_checked_at_predict(self):
        X, y, _ = make_xy(300, 20, 1.0, 17)
        est = AdjustedLogisticRegression(gamma=1.0).fit(X, y)
        with pytest.raises(ValueError):
            est.predict_proba(X[:, :10])
