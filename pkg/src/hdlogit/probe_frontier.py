"""Signal-strength estimation by probing the separation frontier.

For an observed dataset with p/n well inside the existence region, the
dimensionality at which without-replacement subsamples become separable
half the time estimates the boundary crossing kappa-hat; inverting the
existence boundary then gives gamma-hat = g_mle(kappa-hat).

Grid points ascend from the observed p/n in steps of ``grid_step``; at
each point exactly B subsamples of size round(p / kappa_j) are tested
for separation, and the scan stops at the first point whose separation
proportion reaches the threshold.  Linear interpolation to the 0.5
level between that point and its predecessor yields kappa-hat.

Search modes
------------
"ascend"  evaluates every grid point in order (the reference protocol).
"coarse"  scans at ``coarse_step`` first, then refines at ``grid_step``
          inside the bracketing interval.
"bisect"  locates the coarse bracket by binary search (valid because
          the separation proportion is nondecreasing in kappa up to
          Monte Carlo noise), then refines like "coarse".  Point
          evaluations are keyed by subsample size, so all modes produce
          identical proportions wherever they evaluate the same point.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._threads import pin_worker_blas
from .boundary import g_mle
from .errors import FrontierNotReachedError, SeparatedDataError
from .glm import Dataset
from .separation import check_separation

__all__ = ["ProbeFrontierResult", "subsample", "estimate_gamma"]

_MAX_KAPPA = 0.5


@dataclass(frozen=True)
class ProbeFrontierResult:
    """Separation-proportion curve and the estimates read off it.

    ``kappa_grid`` lists the evaluated grid points in ascending order
    with ``pi_hat`` the corresponding separation proportions (each over
    exactly B subsamples).  ``kappa_hat`` interpolates the 0.5 crossing;
    ``gamma_hat`` is the boundary inverse at kappa_hat.
    """

    kappa_grid: np.ndarray
    pi_hat: np.ndarray
    kappa_hat: float
    gamma_hat: float
    B: int
    seed: int


def subsample(data: Dataset, n_j: int, rng) -> Dataset:
    """Uniform without-replacement row subsample of size n_j."""
    if not data.p < n_j <= data.n:
        raise ValueError(f"need p < n_j <= n, got n_j={n_j} with n={data.n}, p={data.p}")
    idx = rng.choice(data.n, size=n_j, replace=False)
    return Dataset(X=data.X[idx], y=data.y[idx], design_tag=data.design_tag)


# -- worker plumbing ---------------------------------------------------------

_WORKER_DATA: dict = {}


def _init_worker(X, y):
    pin_worker_blas()
    _WORKER_DATA["X"] = X
    _WORKER_DATA["y"] = y


def _one_check(args) -> bool:
    n_j, seed_key = args
    X, y = _WORKER_DATA["X"], _WORKER_DATA["y"]
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    idx = rng.choice(X.shape[0], size=n_j, replace=False)
    return check_separation(Dataset(X=X[idx], y=y[idx]))


class _PointEvaluator:
    """Separation proportions per subsample size, memoized.

    RNG streams are keyed by (seed, n_j, replicate), so results do not
    depend on evaluation order or worker scheduling.
    """

    def __init__(self, data: Dataset, B: int, seed: int, pool):
        self.data = data
        self.B = B
        self.seed = seed
        self.pool = pool
        self.cache: dict[int, float] = {}

    def pi(self, n_j: int) -> float:
        if n_j in self.cache:
            return self.cache[n_j]
        if n_j == self.data.n:
            # subsamples of full size are row permutations: one check decides all B
            val = 1.0 if check_separation(self.data) else 0.0
        else:
            tasks = [(n_j, (self.seed, n_j, b)) for b in range(self.B)]
            if self.pool is None:
                _init_worker(self.data.X, self.data.y)
                flags = [_one_check(t) for t in tasks]
            else:
                flags = list(self.pool.map(_one_check, tasks, chunksize=4))
            val = float(np.mean(flags))
        self.cache[n_j] = val
        return val


def _grid_kappas(kappa0: float, step: float):
    k = kappa0
    j = 0
    while k <= _MAX_KAPPA:
        yield k
        j += 1
        k = kappa0 + j * step


def _interpolate(kappa_a, pi_a, kappa_b, pi_b, level):
    return kappa_a + (level - pi_a) / (pi_b - pi_a) * (kappa_b - kappa_a)


def estimate_gamma(data: Dataset, *, grid_step: float = 1e-3, B: int = 50,
                   threshold: float = 0.5, seed: int | None = None,
                   mode: str = "ascend", coarse_step: float = 1e-2,
                   workers: int = 1) -> ProbeFrontierResult:
    """Estimate the signal strength of a dataset by frontier probing.

    Raises
    ------
    SeparatedDataError
        If the full data is already separated (MLE does not exist).
    FrontierNotReachedError
        If no grid point up to kappa = 0.5 reaches the threshold
        (signal strength near zero, or n too small).
    """
    if mode not in ("ascend", "coarse", "bisect"):
        raise ValueError(f"unknown mode {mode!r}")
    n, p = data.n, data.p
    kappa0 = p / n
    if kappa0 >= _MAX_KAPPA:
        raise ValueError(f"need p/n < 0.5, got {kappa0:.3f}")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    if check_separation(data):
        raise SeparatedDataError("full data is separated; the MLE does not exist")

    pool = None
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                       initargs=(data.X, data.y))
        ev = _PointEvaluator(data, B, seed, pool)
        points: dict[float, float] = {}  # kappa -> pi_hat, evaluated

        def pi_at(kappa: float) -> float:
            n_j = min(n, int(round(p / kappa)))
            val = ev.pi(n_j)
            points[kappa] = val
            return val

        step0 = grid_step if mode == "ascend" else coarse_step
        coarse = list(_grid_kappas(kappa0, step0))
        cross_idx = None
        if mode in ("ascend", "coarse"):
            for i, kap in enumerate(coarse):
                if pi_at(kap) >= threshold:
                    cross_idx = i
                    break
        else:  # bisect: smallest coarse index with pi >= threshold
            lo, hi = 0, len(coarse) - 1
            if pi_at(coarse[0]) >= threshold:
                cross_idx = 0
            elif pi_at(coarse[hi]) < threshold:
                cross_idx = None
            else:
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if pi_at(coarse[mid]) >= threshold:
                        hi = mid
                    else:
                        lo = mid
                cross_idx = hi
        if cross_idx is None:
            raise FrontierNotReachedError(
                f"separation proportion stayed below {threshold} up to kappa=0.5 "
                f"(signal strength may be near zero or n too small)")

        if mode == "ascend" or cross_idx == 0:
            kappa_b = coarse[cross_idx]
        else:
            # refine inside the bracketing coarse interval at grid_step
            left = coarse[cross_idx - 1]
            right = coarse[cross_idx]
            kappa_b = right
            m = 1
            while True:
                kap = left + m * grid_step
                if kap >= right:
                    break
                if pi_at(kap) >= threshold:
                    kappa_b = kap
                    break
                m += 1
    finally:
        if pool is not None:
            pool.shutdown()

    kappas = np.array(sorted(points))
    pis = np.array([points[k] for k in kappas])
    ib = int(np.searchsorted(kappas, kappa_b))
    if ib == 0:
        kappa_hat = float(kappa_b)  # crossed at the very first point
    else:
        kappa_hat = float(_interpolate(kappas[ib - 1], pis[ib - 1],
                                       kappas[ib], pis[ib], threshold))
    gamma_hat = g_mle(kappa_hat)
    return ProbeFrontierResult(kappa_grid=kappas, pi_hat=pis, kappa_hat=kappa_hat,
                               gamma_hat=gamma_hat, B=B, seed=seed)
