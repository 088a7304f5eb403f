"""Message-passing iteration that tracks the logistic MLE.

Serves as an independent numerical oracle for the Newton MLE and as a
validator of the asymptotic triple: with the stationary scalar
lambda* from :mod:`~hdlogit.state_evolution`, the iteration

    beta^t = beta^{t-1} + kappa^{-1} X' Psi(y, S^{t-1})
    S^t    = X beta^t - Psi(y, S^{t-1})
    Psi(y, s) = lambda* (y - rho'(prox_{lambda* rho}(lambda* y + s)))

has fixed points satisfying the MLE score equation exactly (the prox
identity turns X beta* into prox_{lambda* rho}(lambda* y + S*)).

S^0 = X beta^0 as written; the first step is therefore uncorrected.
kappa is taken as p/n of the supplied dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._threads import single_thread_blas
from .errors import NonConvergenceError
from .glm import Dataset
from .scalars import prox_rho_vec, rho_prime
from .state_evolution import SolutionTriple

__all__ = ["AmpState", "AmpTrajectory", "psi", "amp_run", "simulation_init", "trajectory_to_csv"]

_CONV_TOL = 1e-9
_BLOWUP = 1e8


@dataclass(frozen=True)
class AmpState:
    """Iterate of the message-passing scheme."""

    beta_t: np.ndarray
    s_t: np.ndarray
    t: int
    lambda_t: float


@dataclass(frozen=True)
class AmpTrajectory:
    """Final state plus per-iteration diagnostics.

    ``grad_norms[t]`` is the max-norm of the likelihood score at
    iteration t+1; ``dist_to_ref`` tracks the max-norm distance to a
    reference coefficient vector (usually the Newton MLE) when one was
    supplied.
    """

    final: AmpState
    grad_norms: np.ndarray
    dist_to_ref: np.ndarray | None
    converged: bool
    iterations: int


def psi(y, s, lam: float):
    """Elementwise correction lambda * (y - rho'(prox_{lambda rho}(lambda y + s)))."""
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    out = lam * (y - rho_prime(prox_rho_vec(lam, lam * y + s)))
    return out if out.ndim else float(out)


def simulation_init(beta_true: np.ndarray, triple: SolutionTriple, rng) -> np.ndarray:
    """Calibrated starting point alpha* beta + sigma* Z for simulation runs.

    Satisfies ||beta0 - alpha* beta||^2 / p ~ sigma*^2, the calibration
    under which the iterates stay on the asymptotic track.
    """
    beta_true = np.asarray(beta_true, dtype=float)
    return triple.alpha_star * beta_true + triple.sigma_star * rng.normal(size=beta_true.size)


def amp_run(data: Dataset, triple: SolutionTriple, beta0: np.ndarray | None,
            T: int, *, reference: np.ndarray | None = None,
            tol: float = _CONV_TOL) -> AmpTrajectory:
    """Run T iterations (stopping early at the fixed-point tolerance).

    Parameters
    ----------
    beta0 : array or None
        Starting point.  None starts from zero, which carries no
        stationarity guarantee; use :func:`simulation_init` when the
        true signal is known.
    reference : array, optional
        Coefficients to track distance against (e.g. a Newton MLE).

    Raises
    ------
    NonConvergenceError
        On norm blowup, which signals (kappa, gamma) outside the
        existence region or a bad calibration.
    """
    X, y = data.X, data.y
    n, p = X.shape
    kappa = p / n
    lam = triple.lambda_star
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    grad_norms = np.empty(T)
    dists = np.empty(T) if reference is not None else None
    converged = False
    it = 0
    with single_thread_blas():
        S = X @ beta
        for it in range(1, T + 1):
            corr = psi(y, S, lam)
            beta_new = beta + (X.T @ corr) / kappa
            S = X @ beta_new - corr
            delta = float(np.abs(beta_new - beta).max())
            beta = beta_new
            if not np.isfinite(beta).all() or np.abs(beta).max() > _BLOWUP:
                raise NonConvergenceError(
                    f"iterates blew up at t={it}: ||beta||_inf="
                    f"{np.abs(beta[np.isfinite(beta)]).max() if np.isfinite(beta).any() else np.inf:.3g}"
                )
            gnorm = float(np.abs(X.T @ (rho_prime(X @ beta) - y)).max())
            grad_norms[it - 1] = gnorm
            if dists is not None:
                dists[it - 1] = float(np.abs(beta - reference).max())
            if max(delta, gnorm / n) < tol:
                converged = True
                break
    final = AmpState(beta_t=beta, s_t=S, t=it, lambda_t=lam)
    return AmpTrajectory(final=final, grad_norms=grad_norms[:it],
                         dist_to_ref=None if dists is None else dists[:it],
                         converged=converged, iterations=it)


def trajectory_to_csv(traj: AmpTrajectory, path) -> None:
    """Dump (iteration, grad-norm, distance-to-reference) rows."""
    cols = [np.arange(1, traj.iterations + 1), traj.grad_norms]
    header = "iteration,grad_norm"
    if traj.dist_to_ref is not None:
        cols.append(traj.dist_to_ref)
        header += ",dist_to_mle"
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
               comments="", fmt="%.17g")
