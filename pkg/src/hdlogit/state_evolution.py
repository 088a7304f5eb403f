"""Fixed point of the three-variable asymptotic system.

The triple (alpha*, sigma*, lambda*) solving

    sigma^2   = E[ 2 rho'(Q1) (lambda rho'(prox_{lambda rho}(Q2)))^2 ] / kappa^2
    0         = E[ rho'(Q1) Q1 lambda rho'(prox_{lambda rho}(Q2)) ]
    1 - kappa = E[ 2 rho'(Q1) / (1 + lambda rho''(prox_{lambda rho}(Q2))) ]

drives every inference correction in this package: alpha* is the bias
multiplier of the MLE coordinates, sigma* their spread after centering,
and kappa*sigma*^2/lambda* rescales the likelihood-ratio statistic.
(Q1, Q2) is the correlated Gaussian pair of
:class:`~hdlogit.quadrature.BivariateGaussianSpec`.

The solver runs the variance-map iteration: given (alpha_t, sigma_t),
lambda_t solves the third equation by bracketed root-finding, then

    alpha_{t+1}   = alpha_t + E[2 rho'(Q1) Q1 lambda_t rho'(prox(Q2))] / (kappa gamma^2)
    sigma_{t+1}^2 = E[2 rho'(Q1) (lambda_t rho'(prox(Q2)))^2] / kappa^2

damped until stationary.  At gamma = 0 the pair degenerates (Q1 = 0)
and the system reduces to two equations in (sigma, lambda) with
Q2 = tau*Z, tau^2 = kappa*sigma^2; :func:`solve_reduced` solves that
form directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .boundary import g_mle
from .errors import NonConvergenceError, OutsideExistenceRegionError
from .quadrature import QuadratureRule, gh_rule
from .scalars import prox_rho_vec, rho_double_prime, rho_prime

__all__ = ["SolutionTriple", "solve_lambda", "variance_map_step", "solve_system", "solve_reduced"]

_LAMBDA_BRACKET_HI = 8.0
_LAMBDA_BRACKET_MAX = 512.0
_EXISTENCE_MARGIN = 0.999
_DEFAULT_ORDER = 64  # 48 leaves ~1e-7 quadrature error at the widest acceptance point


@dataclass(frozen=True)
class SolutionTriple:
    """Solution of the three-variable system at a given (kappa, gamma).

    ``residual_norm`` is the largest absolute residual of the three
    equations at the returned triple.
    """

    alpha_star: float
    sigma_star: float
    lambda_star: float
    kappa: float
    gamma: float
    residual_norm: float
    iterations: int

    @property
    def lrt_factor(self) -> float:
        """Rescaling constant kappa * sigma*^2 / lambda* for the LRT."""
        return self.kappa * self.sigma_star**2 / self.lambda_star


class _Expectations:
    """The three integrands evaluated on a shared tensor grid.

    Grid layout follows the lower-triangular whitening with L[0,0]=gamma:
    Q1 = gamma*z1, Q2 = -alpha*gamma*z1 + sqrt(kappa)*sigma*z2.  For
    gamma = 0 only the z2 line survives and the 2*rho'(Q1) tilt is 1.
    """

    def __init__(self, alpha, sigma, kappa, gamma, rule: QuadratureRule):
        x, w = rule.nodes, rule.weights
        tau = np.sqrt(kappa) * sigma
        if gamma == 0.0:
            self.q1 = np.zeros_like(x)
            self.q2 = tau * x
            self.w = w
        else:
            self.q1 = np.repeat(gamma * x, rule.order)
            self.q2 = (-alpha * gamma * x[:, None] + tau * x[None, :]).ravel()
            self.w = (w[:, None] * w[None, :]).ravel()
        self.tilt = 2.0 * rho_prime(self.q1)

    def at_lambda(self, lam):
        p = prox_rho_vec(lam, self.q2)
        sp = lam * rho_prime(p)
        e_third = float(np.sum(self.w * self.tilt / (1.0 + lam * rho_double_prime(p))))
        e_alpha = float(np.sum(self.w * self.tilt * self.q1 * sp))
        e_sigma2 = float(np.sum(self.w * self.tilt * sp * sp))
        return e_third, e_alpha, e_sigma2

    def third_equation(self, lam):
        p = prox_rho_vec(lam, self.q2)
        return float(np.sum(self.w * self.tilt / (1.0 + lam * rho_double_prime(p))))


def _solve_lambda_on(expect: _Expectations, kappa: float) -> float:
    target = 1.0 - kappa
    f = lambda lam: expect.third_equation(lam) - target
    hi = _LAMBDA_BRACKET_HI
    fhi = f(hi)
    while fhi > 0.0:
        hi *= 2.0
        if hi > _LAMBDA_BRACKET_MAX:
            raise OutsideExistenceRegionError(
                f"lambda bracket expansion failed (reached [1e-8, {hi:g}]); "
                f"(kappa, gamma) is outside the admissible region"
            )
        fhi = f(hi)
    return brentq(f, 1e-8, hi, xtol=1e-13, rtol=8.9e-16)


def solve_lambda(alpha: float, sigma: float, kappa: float, gamma: float,
                 rule: QuadratureRule | None = None) -> float:
    """Root of E[2 rho'(Q1) / (1 + lambda rho''(prox(Q2)))] = 1 - kappa.

    The left side equals 1 at lambda = 0 (E[2 rho'(Q1)] = 1 for centered
    Gaussian Q1) and decreases in lambda, so a root exists for any
    kappa > 0; it is located by bracketed root-finding on [1e-8, 8] with
    the upper end doubled up to 512 before reporting failure.
    """
    if rule is None:
        rule = gh_rule(_DEFAULT_ORDER)
    return _solve_lambda_on(_Expectations(alpha, sigma, kappa, gamma, rule), kappa)


def variance_map_step(alpha_t: float, sigma_t: float, kappa: float, gamma: float,
                      rule: QuadratureRule | None = None):
    """One variance-map update: returns (alpha_next, sigma_next, lambda_t).

    For gamma = 0 the alpha update is skipped (Q1 = 0 kills the
    integrand) and alpha stays pinned at 0.
    """
    if rule is None:
        rule = gh_rule(_DEFAULT_ORDER)
    expect = _Expectations(alpha_t, sigma_t, kappa, gamma, rule)
    lam = _solve_lambda_on(expect, kappa)
    _, e_alpha, e_sigma2 = expect.at_lambda(lam)
    if gamma == 0.0:
        alpha_next = 0.0
    else:
        alpha_next = alpha_t + e_alpha / (kappa * gamma**2)
    sigma_next = np.sqrt(e_sigma2) / kappa
    return alpha_next, sigma_next, lam


def _residuals(alpha, sigma, lam, kappa, gamma, rule):
    expect = _Expectations(alpha, sigma, kappa, gamma, rule)
    e_third, e_alpha, e_sigma2 = expect.at_lambda(lam)
    r_sigma = abs(sigma**2 - e_sigma2 / kappa**2)
    r_alpha = abs(0.5 * e_alpha)  # E[rho'(Q1) Q1 lam rho'(prox(Q2))], no tilt factor 2
    r_lambda = abs(e_third - (1.0 - kappa))
    return max(r_sigma, r_alpha, r_lambda)


def _iterate(kappa, gamma, rule, alpha0, sigma0, tol, max_iter, damping0):
    """Damped fixed-point iteration shared by the full and reduced systems.

    Returns (status, alpha, sigma, lambda, iterations) with status one of
    "converged", "diverged", "maxiter"; on failure the returned state is
    the iterate with the smallest step seen (the best available seed for
    the root polish).
    """
    alpha, sigma2 = alpha0, sigma0**2
    damping = damping0
    prev_step = np.inf
    best_step = np.inf
    best = (alpha0, max(sigma0, 1e-3), 1.0)
    shrink_streak = 0
    lam = None
    for it in range(1, max_iter + 1):
        sigma = np.sqrt(sigma2)
        try:
            alpha_next, sigma_next, lam = variance_map_step(alpha, sigma, kappa, gamma, rule)
        except OutsideExistenceRegionError:
            return "diverged", *best, it
        step = max(abs(alpha_next - alpha), abs(sigma_next - sigma))
        if step < tol:
            return "converged", alpha_next, sigma_next, lam, it
        if step < best_step:
            best_step = step
            best = (alpha, sigma, lam)
        if sigma_next > 1e3:
            return "diverged", *best, it
        # relax the damping once the step sizes shrink monotonically
        if step < prev_step:
            shrink_streak += 1
            if shrink_streak >= 5:
                damping = min(1.0, damping * 1.25)
        else:
            shrink_streak = 0
            damping = damping0
        prev_step = step
        alpha = alpha + damping * (alpha_next - alpha)
        sigma2 = sigma2 + damping * (sigma_next**2 - sigma2)
    return "maxiter", *best, max_iter


def _root_polish(kappa, gamma, rule, start):
    """Direct root-find on the system, parameterized to keep sigma, lambda > 0.

    The damped iteration is locally repulsive in part of the existence
    region (e.g. kappa = 0.3, gamma = 2); a quasi-Newton solve seeded
    from its best iterate recovers the fixed point there.
    """
    from scipy.optimize import root

    a0, s0, l0 = start
    if gamma == 0.0:
        def fun(v):
            s = np.exp(0.5 * v[0])
            lam = np.exp(v[1])
            ex = _Expectations(0.0, s, kappa, 0.0, rule)
            e3, _, es2 = ex.at_lambda(lam)
            return [s * s - es2 / kappa**2, e3 - (1.0 - kappa)]

        sol = root(fun, [2.0 * np.log(s0), np.log(l0)], method="hybr", tol=1e-13)
        resid = float(np.abs(sol.fun).max())
        return 0.0, float(np.exp(0.5 * sol.x[0])), float(np.exp(sol.x[1])), resid

    def fun(v):
        a = v[0]
        s = np.exp(0.5 * v[1])
        lam = np.exp(v[2])
        ex = _Expectations(a, s, kappa, gamma, rule)
        e3, ea, es2 = ex.at_lambda(lam)
        return [ea, s * s - es2 / kappa**2, e3 - (1.0 - kappa)]

    sol = root(fun, [a0, 2.0 * np.log(s0), np.log(l0)], method="hybr", tol=1e-13)
    resid = float(np.abs(sol.fun).max())
    return float(sol.x[0]), float(np.exp(0.5 * sol.x[1])), float(np.exp(sol.x[2])), resid


def solve_system(kappa: float, gamma: float, *, quad_order: int = _DEFAULT_ORDER, tol: float = 1e-9,
                 max_iter: int = 2000, damping: float = 0.5,
                 check_existence: bool = True) -> SolutionTriple:
    """Solve the three-variable system at (kappa, gamma).

    Damped fixed-point iteration of :func:`variance_map_step` from
    (alpha, sigma) = (1, 1), iterating in sigma^2 internally.  The
    existence pre-check requires gamma < 0.999 * boundary(kappa); pass
    ``check_existence=False`` to skip it (near-boundary experiments).

    Raises
    ------
    OutsideExistenceRegionError
        If the pre-check fails or the iteration diverges.
    NonConvergenceError
        If the iteration cap is reached.
    """
    if not 0.0 < kappa < 0.5:
        raise ValueError(f"kappa must be in (0, 0.5), got {kappa}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if check_existence and gamma > 0:
        gamma_max = g_mle(kappa)
        if gamma >= _EXISTENCE_MARGIN * gamma_max:
            raise OutsideExistenceRegionError(
                f"gamma={gamma:.6g} is not below {_EXISTENCE_MARGIN} * boundary "
                f"({gamma_max:.6g}) at kappa={kappa}"
            )
    rule = gh_rule(quad_order)
    status, alpha, sigma, lam, iters = _iterate(kappa, gamma, rule, 1.0, 1.0,
                                                tol, max_iter, damping)
    if status != "converged":
        alpha, sigma, lam, resid = _root_polish(kappa, gamma, rule, (alpha, sigma, lam))
        if resid > 1e-9:
            if status == "diverged":
                raise OutsideExistenceRegionError(
                    f"variance iteration diverged at (kappa={kappa}, gamma={gamma}) "
                    f"and the root polish left residual {resid:.3g}")
            raise NonConvergenceError(
                f"variance map hit the {max_iter}-iteration cap at "
                f"(kappa={kappa}, gamma={gamma}); root polish residual {resid:.3g}")
    if gamma == 0.0:
        alpha = 0.0
    res = _residuals(alpha, sigma, lam, kappa, gamma, rule)
    return SolutionTriple(alpha_star=float(alpha), sigma_star=float(sigma),
                          lambda_star=float(lam), kappa=float(kappa), gamma=float(gamma),
                          residual_norm=res, iterations=iters)


def solve_reduced(kappa: float, *, quad_order: int = _DEFAULT_ORDER, tol: float = 1e-9,
                  max_iter: int = 2000, damping: float = 0.5):
    """Solve the gamma = 0 reduction: two equations in (sigma, lambda).

    With tau^2 = kappa * sigma^2 and Z standard normal,

        sigma^2   = E[(lambda rho'(prox_{lambda rho}(tau Z)))^2] / kappa^2
        1 - kappa = E[1 / (1 + lambda rho''(prox_{lambda rho}(tau Z)))]

    Returns (sigma_star, lambda_star).
    """
    if not 0.0 < kappa < 0.5:
        raise ValueError(f"kappa must be in (0, 0.5), got {kappa}")
    rule = gh_rule(quad_order)
    status, _, sigma, lam, _ = _iterate(kappa, 0.0, rule, 0.0, 1.0, tol, max_iter, damping)
    if status != "converged":
        _, sigma, lam, resid = _root_polish(kappa, 0.0, rule, (0.0, sigma, lam))
        if resid > 1e-9:
            raise NonConvergenceError(
                f"reduced system failed at kappa={kappa}: status {status}, "
                f"polish residual {resid:.3g}")
    return float(sigma), float(lam)
