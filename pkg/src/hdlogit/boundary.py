"""Existence boundary for the logistic MLE in the (kappa, gamma) plane.

The boundary dimensionality at signal strength gamma is

    kappa(gamma) = min_t E (Z - t V)_+^2,

with Z standard normal and V an independent variable with density
2 * rho'(gamma v) * phi(v).  The inner expectation over Z has the closed
form used by :func:`positive_part_mse`, so only the V-average needs
quadrature.  The inverse map gamma(kappa) is obtained by bisection,
since the boundary is continuous and strictly decreasing in gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .quadrature import QuadratureRule, gh_rule
from .scalars import rho_prime

__all__ = ["BoundaryPoint", "positive_part_mse", "g_mle_inverse", "g_mle"]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_DEFAULT_ORDER = 96


@dataclass(frozen=True)
class BoundaryPoint:
    """One point of the existence boundary.

    ``kappa_boundary`` is the minimized objective; ``t_argmin`` is where
    the minimum is attained (exposed for inspection only, no structural
    claims are made about it).
    """

    gamma: float
    kappa_boundary: float
    t_argmin: float


def positive_part_mse(c):
    """E[(Z - c)_+^2] for standard normal Z, in closed form.

    Equals (1 + c^2) * Phi(-c) - c * phi(c).  At c = 0 this is 1/2; for
    c -> -inf the positive part is inactive and the value tends to
    1 + c^2.
    """
    c = np.asarray(c, dtype=float)
    phi = np.exp(-0.5 * c * c) / np.sqrt(2.0 * np.pi)
    out = (1.0 + c * c) * ndtr(-c) - c * phi
    return out if out.ndim else float(out)


def _objective(t: float, gamma: float, rule: QuadratureRule) -> float:
    # F(t) = E_V[(Z - tV)_+^2] with V-density 2*rho'(gamma v) phi(v)
    dens = 2.0 * rho_prime(gamma * rule.nodes)
    return float(np.sum(rule.weights * dens * positive_part_mse(t * rule.nodes)))


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol * (1.0 + abs(a) + abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def g_mle_inverse(gamma: float, rule: QuadratureRule | None = None) -> BoundaryPoint:
    """Boundary dimensionality kappa(gamma) = min_t E (Z - tV)_+^2.

    The objective is scanned on an expanding coarse grid over both signs
    of t (robust to any non-unimodality) and then refined by
    golden-section inside the bracketing cell.

    Parameters
    ----------
    gamma : float
        Signal strength, >= 0.
    rule : QuadratureRule, optional
        1D rule for the V-average; defaults to order 96.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if rule is None:
        rule = gh_rule(_DEFAULT_ORDER)
    f = lambda t: _objective(t, gamma, rule)

    # expand the half-width until the grid minimum is strictly interior
    half = 2.0
    for _ in range(30):
        grid = np.linspace(-half, half, 65)
        vals = np.array([f(t) for t in grid])
        k = int(np.argmin(vals))
        if 0 < k < len(grid) - 1:
            break
        half *= 2.0
    else:
        raise RuntimeError(f"boundary optimizer bracket expansion failed at gamma={gamma}")
    t_star, k_star = _golden_min(f, grid[k - 1], grid[k + 1])
    return BoundaryPoint(gamma=float(gamma), kappa_boundary=k_star, t_argmin=t_star)


def g_mle(kappa: float, rule: QuadratureRule | None = None, tol: float = 1e-6) -> float:
    """Signal strength gamma at which the boundary sits at the given kappa.

    Inverts :func:`g_mle_inverse` by bisection on gamma; tolerance is on
    the kappa residual.

    Raises
    ------
    ValueError
        For kappa outside (0, 0.5).
    """
    if not 0.0 < kappa < 0.5:
        raise ValueError(f"kappa must be in (0, 0.5), got {kappa}")
    if rule is None:
        rule = gh_rule(_DEFAULT_ORDER)
    lo, hi = 0.0, 1.0
    while g_mle_inverse(hi, rule).kappa_boundary > kappa:
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError(f"gamma bracket expansion failed at kappa={kappa}")
    # boundary is decreasing in gamma: kappa(lo) >= kappa > kappa(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        km = g_mle_inverse(mid, rule).kappa_boundary
        if km > kappa:
            lo = mid
        else:
            hi = mid
        if abs(km - kappa) < tol:
            return mid
    return 0.5 * (lo + hi)
