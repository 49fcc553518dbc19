"""Compiled inner loops for the p-harmonic solver."""

import numpy as np
from numba import njit


@njit(cache=True)
def _phi(t, start, end, f, indices, p):
    acc = 0.0
    for k in range(start, end):
        d = t - f[indices[k]]
        if d > 0.0:
            acc += d ** (p - 1.0)
        elif d < 0.0:
            acc -= (-d) ** (p - 1.0)
    return acc


@njit(cache=True)
def local_minimizer(f, indptr, indices, x, p):
    """Minimise sum_y |t - f[y]|^p over t by bisection on the monotone derivative."""
    start, end = indptr[x], indptr[x + 1]
    if end == start:
        return f[x]
    lo = f[indices[start]]
    hi = lo
    for k in range(start + 1, end):
        v = f[indices[k]]
        if v < lo:
            lo = v
        if v > hi:
            hi = v
    if lo == hi:
        return lo
    if p == 2.0:
        acc = 0.0
        for k in range(start, end):
            acc += f[indices[k]]
        t = acc / (end - start)
        return min(max(t, lo), hi)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        val = _phi(mid, start, end, f, indices, p)
        if val > 0.0:
            hi = mid
        elif val < 0.0:
            lo = mid
        else:
            return mid


@njit(cache=True)
def gauss_seidel_sweep(f, indptr, indices, free, p):
    for i in range(free.shape[0]):
        x = free[i]
        f[x] = local_minimizer(f, indptr, indices, x, p)


@njit(cache=True)
def laplacian_at(f, indptr, indices, x, p):
    start, end = indptr[x], indptr[x + 1]
    acc = 0.0
    fx = f[x]
    for k in range(start, end):
        d = fx - f[indices[k]]
        if d > 0.0:
            acc += d ** (p - 1.0)
        elif d < 0.0:
            acc -= (-d) ** (p - 1.0)
    return acc / (1.0 + (end - start))


@njit(cache=True)
def max_residual(f, indptr, indices, free, p):
    best = 0.0
    for i in range(free.shape[0]):
        r = abs(laplacian_at(f, indptr, indices, free[i], p))
        if r > best:
            best = r
    return best


@njit(cache=True)
def run_gauss_seidel(f, indptr, indices, free, p, tol, max_iter):
    """Sweep in ascending vertex order until the max residual is <= tol.

    Returns (iterations, final residual).
    """
    res = max_residual(f, indptr, indices, free, p)
    it = 0
    while res > tol and it < max_iter:
        gauss_seidel_sweep(f, indptr, indices, free, p)
        it += 1
        res = max_residual(f, indptr, indices, free, p)
    return it, res


def warmup():
    """Trigger compilation on a tiny problem."""
    indptr = np.array([0, 1, 3, 4], dtype=np.int64)
    indices = np.array([1, 0, 2, 1], dtype=np.int64)
    f = np.array([0.0, 0.3, 1.0])
    free = np.array([1], dtype=np.int64)
    run_gauss_seidel(f, indptr, indices, free, 2.0, 1e-12, 10)
    run_gauss_seidel(f, indptr, indices, free, 3.0, 1e-12, 10)
