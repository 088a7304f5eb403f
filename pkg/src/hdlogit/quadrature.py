"""Gaussian expectation engine.

Gauss-Hermite rules in the probabilists' normalization (weights sum to
one, nodes integrate against the standard normal), and tensorized 2D
expectations over the correlated pair (Q1, Q2) whose covariance is
parameterized by the bias/spread pair (alpha, sigma) together with the
dimensionality kappa and the signal strength gamma:

    Cov = [[ gamma^2,            -alpha*gamma^2           ],
           [-alpha*gamma^2,  alpha^2*gamma^2 + kappa*sigma^2]]

The Cholesky factor is taken lower-triangular with L[0,0] = gamma, so
Q1 = gamma*Z1 and Q2 = -alpha*gamma*Z1 + sqrt(kappa)*sigma*Z2; the
gamma = 0 and sigma = 0 degeneracies then collapse to explicit 1D paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss

__all__ = ["QuadratureRule", "BivariateGaussianSpec", "gh_rule", "expect_bivariate"]

_MIN_ORDER = 2
_MAX_ORDER = 256


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights normalized for E[f(Z)], Z ~ N(0,1)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def expect(self, f):
        """E[f(Z)] for a vectorized integrand f."""
        return float(np.sum(self.weights * f(self.nodes)))


@dataclass(frozen=True)
class BivariateGaussianSpec:
    """Parameters of the correlated Gaussian pair (Q1, Q2).

    Invariant: the implied covariance is positive semidefinite with
    determinant kappa * sigma^2 * gamma^2 >= 0; this holds automatically
    for sigma >= 0, gamma >= 0, kappa in (0, 1), which are validated.
    """

    alpha: float
    sigma: float
    kappa: float
    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 < self.kappa < 1:
            raise ValueError(f"kappa must be in (0, 1), got {self.kappa}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    def covariance(self) -> np.ndarray:
        g2 = self.gamma**2
        return np.array(
            [
                [g2, -self.alpha * g2],
                [-self.alpha * g2, self.alpha**2 * g2 + self.kappa * self.sigma**2],
            ]
        )


def gh_rule(order: int) -> QuadratureRule:
    """Gauss-Hermite rule of the given order on the standard normal.

    Physicists' nodes/weights from the Golub-Welsch eigen-decomposition
    are rescaled by sqrt(2) and 1/sqrt(pi) so that
    sum_i w_i f(x_i) ~ E[f(Z)] and the weights sum to one.

    Raises
    ------
    ValueError
        For orders outside [2, 256].
    """
    if not _MIN_ORDER <= order <= _MAX_ORDER:
        raise ValueError(f"unsupported quadrature order {order} (need {_MIN_ORDER}..{_MAX_ORDER})")
    x, w = hermgauss(order)
    return QuadratureRule(nodes=x * np.sqrt(2.0), weights=w / np.sqrt(np.pi), order=order)


def expect_bivariate(f, spec: BivariateGaussianSpec, rule: QuadratureRule) -> float:
    """E[f(Q1, Q2)] under the spec's covariance, by tensorized quadrature.

    ``f`` must accept two equal-shape arrays and evaluate elementwise.
    Degenerate directions (gamma = 0, or kappa*sigma^2 = 0) reduce to 1D
    quadrature along the live coordinate; the doubly degenerate case is
    the point evaluation f(0, 0).
    """
    g = spec.gamma
    t2 = spec.kappa * spec.sigma**2  # conditional variance of Q2 given Q1
    t = np.sqrt(t2)
    x, w = rule.nodes, rule.weights
    if g == 0.0 and t2 == 0.0:
        return float(f(np.zeros(1), np.zeros(1))[0])
    if g == 0.0:
        vals = f(np.zeros_like(x), t * x)
        return float(np.sum(w * vals))
    if t2 == 0.0:
        vals = f(g * x, -spec.alpha * g * x)
        return float(np.sum(w * vals))
    q1 = g * x[:, None]
    q2 = -spec.alpha * g * x[:, None] + t * x[None, :]
    w2 = w[:, None] * w[None, :]
    return float(np.sum(w2 * f(np.broadcast_to(q1, q2.shape), q2)))
