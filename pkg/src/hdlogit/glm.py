"""Logistic regression fitting and classical (Fisher) baselines.

Dense damped-Newton maximum likelihood, constrained refits for
likelihood-ratio statistics, plugin and population-level Fisher standard
errors, and dataset I/O (CSV and a compact binary container).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import blas as _blas
from scipy.linalg import cho_factor, cho_solve

from ._threads import single_thread_blas
from .errors import DataFormatError
from .quadrature import gh_rule
from .scalars import rho_double_prime, rho_prime

__all__ = [
    "Dataset",
    "FitResult",
    "neg_log_likelihood",
    "gradient",
    "hessian",
    "fit_mle",
    "llr_statistic",
    "classical_se_theoretical",
    "classical_se_plugin",
    "load_csv",
    "save_csv",
    "load_binary",
    "save_binary",
]

_BINARY_MAGIC = b"HDLR1"
_DEFAULT_TOL = 1e-8  # on max|grad| / n
_JITTER = 1e-10


@dataclass(frozen=True)
class Dataset:
    """Design matrix plus binary response.

    ``design_tag`` records provenance: "gaussian" and "snp" for the
    built-in generators, "external" for loaded data.
    """

    X: np.ndarray
    y: np.ndarray
    design_tag: str = "external"

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("y entries must be 0 or 1")
        if self.design_tag not in ("gaussian", "snp", "external"):
            raise ValueError(f"unknown design_tag {self.design_tag!r}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FitResult:
    """Outcome of a maximum-likelihood fit.

    ``converged`` implies grad_norm < tol * n and ``separated`` False.
    """

    beta_hat: np.ndarray
    converged: bool
    separated: bool
    neg_log_likelihood: float
    iterations: int
    grad_norm: float


def _nll_from_eta(eta: np.ndarray, y: np.ndarray) -> float:
    # sum rho(eta_i) - y_i eta_i, with rho evaluated branch-free
    return float(np.maximum(eta, 0.0).sum()
                 + np.log1p(np.exp(-np.abs(eta))).sum() - y @ eta)


def neg_log_likelihood(beta: np.ndarray, data: Dataset) -> float:
    """sum_i rho(X_i'beta) - y_i * X_i'beta, overflow-safe."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    return _nll_from_eta(data.X @ beta, data.y)


def gradient(beta: np.ndarray, data: Dataset) -> np.ndarray:
    """X'(rho'(X beta) - y)."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    return data.X.T @ (rho_prime(data.X @ beta) - data.y)


def hessian(beta: np.ndarray, data: Dataset) -> np.ndarray:
    """X' diag(rho''(X beta)) X, symmetric positive semidefinite."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    w = rho_double_prime(data.X @ beta)
    Xs = data.X * np.sqrt(w)[:, None]
    H = _blas.dsyrk(1.0, Xs, trans=1)
    return H + np.triu(H, 1).T


def _newton_core(X, y, beta0, tol, max_iter):
    """Damped Newton on the negative log-likelihood.

    Step-halving keeps every iteration a descent step; the Hessian solve
    is Cholesky with a 1e-10 diagonal jitter retry when the curvature
    collapses near separation.  Returns (beta, iterations, grad_norm,
    nll, converged).
    """
    n, p = X.shape
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    eta = X @ beta
    nll = _nll_from_eta(eta, y)
    scratch = np.empty_like(X)
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        mu = rho_prime(eta)
        g = X.T @ (mu - y)
        gnorm = float(np.abs(g).max())
        if gnorm < tol * n:
            return beta, it, gnorm, nll, True
        np.multiply(X, np.sqrt(mu * (1.0 - mu))[:, None], out=scratch)
        H = _blas.dsyrk(1.0, scratch, trans=1)
        try:
            cf = cho_factor(H, lower=False, check_finite=False)
        except np.linalg.LinAlgError:
            H[np.diag_indices_from(H)] += _JITTER
            cf = cho_factor(H, lower=False, check_finite=False)
        step = cho_solve(cf, -g, check_finite=False)
        eta_step = X @ step
        t = 1.0
        while True:
            eta_new = eta + t * eta_step
            nll_new = _nll_from_eta(eta_new, y)
            if nll_new <= nll + 1e-12 * abs(nll) or t < 1e-10:
                break
            t *= 0.5
        beta = beta + t * step
        eta, nll = eta_new, nll_new
    return beta, max_iter, gnorm, nll, False


def fit_mle(data: Dataset, *, tol: float = _DEFAULT_TOL, max_iter: int = 100,
            check_separation: bool = False, beta0: np.ndarray | None = None) -> FitResult:
    """Maximum-likelihood fit by damped Newton from beta = 0.

    With ``check_separation=True`` the separation test runs first and a
    separated dataset returns immediately (separated=True, no
    iterations) instead of letting Newton diverge.

    ``beta0`` warm-starts the iteration (used by constrained refits).
    """
    if data.n <= data.p:
        raise ValueError(f"need n > p for fitting, got n={data.n}, p={data.p}")
    if check_separation:
        from .separation import check_separation as _check
        if _check(data):
            return FitResult(beta_hat=np.zeros(data.p), converged=False, separated=True,
                             neg_log_likelihood=float(data.n) * np.log(2.0),
                             iterations=0, grad_norm=np.inf)
    with single_thread_blas():
        beta, it, gnorm, nll, conv = _newton_core(data.X, data.y, beta0, tol, max_iter)
    return FitResult(beta_hat=beta, converged=conv, separated=False,
                     neg_log_likelihood=nll, iterations=it, grad_norm=gnorm)


def llr_statistic(data: Dataset, drop, *, full_fit: FitResult | None = None,
                  tol: float = _DEFAULT_TOL, max_iter: int = 100) -> float:
    """Log-likelihood-ratio statistic for dropping a set of coordinates.

    Lambda = min_{b: b_drop = 0} l(b) - min_b l(b) >= 0.  The
    constrained problem refits Newton on the reduced column set,
    warm-started from the full fit with the dropped coordinates removed.
    """
    drop = np.atleast_1d(np.asarray(drop, dtype=int))
    if drop.size == 0:
        return 0.0
    if np.any(drop < 0) or np.any(drop >= data.p) or len(np.unique(drop)) != drop.size:
        raise ValueError(f"invalid drop set {drop} for p={data.p}")
    if full_fit is None:
        full_fit = fit_mle(data, tol=tol, max_iter=max_iter)
    keep = np.setdiff1d(np.arange(data.p), drop)
    Xr = np.ascontiguousarray(data.X[:, keep])
    with single_thread_blas():
        _, _, _, nll_c, conv = _newton_core(Xr, data.y, full_fit.beta_hat[keep],
                                            tol, max_iter)
    if not (conv and full_fit.converged):
        raise RuntimeError("llr_statistic requires both fits to converge")
    return max(0.0, nll_c - full_fit.neg_log_likelihood)


def classical_se_theoretical(gamma: float, beta: np.ndarray | None = None,
                             quad_order: int = 96):
    """Population Fisher-information standard errors under the Gaussian design.

    With nu = E[rho''(gamma X)] and
    delta = (E[rho''(gamma X) X^2] - nu) / nu for standard normal X, the
    inverse information gives per-coordinate variance
    nu^-1 (1 - delta/(1+delta) * beta_j^2 / ||beta||^2).

    ``beta=None`` queries a null coordinate and returns the scalar
    nu^(-1/2); otherwise the per-coordinate SE vector is returned.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    rule = gh_rule(quad_order)
    rpp = rho_double_prime(gamma * rule.nodes)
    nu = float(np.sum(rule.weights * rpp))
    if beta is None:
        return nu ** -0.5
    beta = np.asarray(beta, dtype=float)
    nsq = float(beta @ beta)
    if nsq == 0.0:
        return np.full_like(beta, nu ** -0.5)
    delta = float(np.sum(rule.weights * rpp * rule.nodes**2) - nu) / nu
    return nu ** -0.5 * np.sqrt(1.0 - delta / (1.0 + delta) * beta**2 / nsq)


def classical_se_plugin(data: Dataset, fit: FitResult) -> np.ndarray:
    """Software-package plugin standard errors: sqrt(diag(H(beta_hat)^-1)).

    Raises on a singular observed information matrix.
    """
    if not fit.converged:
        raise ValueError("plugin standard errors need a converged fit")
    H = hessian(fit.beta_hat, data)
    cf = cho_factor(H, lower=False, check_finite=False)
    inv = cho_solve(cf, np.eye(data.p), check_finite=False)
    return np.sqrt(np.diag(inv))


# ---------------------------------------------------------------------------
# dataset I/O


def save_csv(data: Dataset, path) -> None:
    """Write the dataset as CSV with a header row; last column is y."""
    header = ",".join([f"x{j + 1}" for j in range(data.p)] + ["y"])
    body = np.column_stack([data.X, data.y])
    np.savetxt(path, body, delimiter=",", header=header, comments="", fmt="%.17g")


def load_csv(path, design_tag: str = "external") -> Dataset:
    """Read a header-row CSV whose last column is the 0/1 response."""
    try:
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"could not parse {path}: {exc}") from exc
    if body.size == 0 or body.shape[1] < 2:
        raise DataFormatError(f"{path}: need at least one feature column plus y")
    X, y = body[:, :-1], body[:, -1]
    if not np.all((y == 0.0) | (y == 1.0)):
        bad = y[(y != 0.0) & (y != 1.0)]
        raise DataFormatError(f"{path}: last column must be 0/1, found values like {bad[:3]}")
    if not np.all(np.isfinite(X)):
        raise DataFormatError(f"{path}: non-finite feature values")
    return Dataset(X=X, y=y, design_tag=design_tag)


def save_binary(data: Dataset, path) -> None:
    """Write the compact binary container.

    Layout: magic "HDLR1", little-endian u32 n, u32 p, then X as
    row-major little-endian f64, then y as u8.
    """
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<II", data.n, data.p))
        fh.write(np.ascontiguousarray(data.X, dtype="<f8").tobytes())
        fh.write(data.y.astype(np.uint8).tobytes())


def load_binary(path, design_tag: str = "external") -> Dataset:
    """Read the binary container written by :func:`save_binary`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_BINARY_MAGIC)] != _BINARY_MAGIC:
        raise DataFormatError(f"{path}: bad magic, not an HDLR1 file")
    off = len(_BINARY_MAGIC)
    if len(blob) < off + 8:
        raise DataFormatError(f"{path}: truncated header")
    n, p = struct.unpack_from("<II", blob, off)
    off += 8
    need = off + 8 * n * p + n
    if len(blob) != need:
        raise DataFormatError(f"{path}: expected {need} bytes for n={n}, p={p}, got {len(blob)}")
    X = np.frombuffer(blob, dtype="<f8", count=n * p, offset=off).reshape(n, p)
    y = np.frombuffer(blob, dtype=np.uint8, count=n, offset=off + 8 * n * p)
    return Dataset(X=X.copy(), y=y.astype(float), design_tag=design_tag)
