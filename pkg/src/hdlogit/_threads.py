"""BLAS threading control.

Multithreaded OpenBLAS is counterproductive inside the small, latency
bound kernels used here (measured ~4x slowdown on 2-vCPU hosts), so hot
loops pin BLAS to one thread and parallelism happens at process level.
"""

from __future__ import annotations

from contextlib import contextmanager

from threadpoolctl import threadpool_limits

_worker_limit = None


@contextmanager
def single_thread_blas():
    """Limit BLAS pools to one thread for the duration of the block."""
    with threadpool_limits(limits=1, user_api="blas"):
        yield


def pin_worker_blas():
    """Process-pool initializer: pin BLAS to one thread for the worker's life."""
    global _worker_limit
    _worker_limit = threadpool_limits(limits=1, user_api="blas")
