"""p-Dirichlet energy, coarse p-Laplacian and p-harmonic functions on graphs.

Everything is at scale 1 with counting measure: the energy of ``f`` is the sum
over *ordered* adjacent pairs (x, y) of |f(x) - f(y)|^p, so each edge is counted
twice. Edge functions (:class:`EdgeChain`) are stored aligned with the CSR
adjacency of the graph and are antisymmetric.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from . import _kernels
from .errors import NonConvergenceError, RegionError
from .graph import Graph


@dataclass(frozen=True)
class TailDescriptor:
    """Closed-form function on Z^d with a certified decay of its increments.

    ``func`` maps an ``(m, d)`` integer array of points to ``m`` values. For
    adjacent x, y the increments obey
    ``|f(x) - f(y)| <= lipschitz * max(1, min(|x|, |y|)) ** -decay``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    decay: float

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points)
        if pts.ndim == 1:
            pts = pts[:, None]
        return np.asarray(self.func(pts), dtype=float)

    def increment_bound(self, r) -> np.ndarray:
        r = np.maximum(1.0, np.asarray(r, dtype=float))
        return self.lipschitz * r ** (-self.decay)


@dataclass
class VertexFunction:
    """Real function on the vertices of a graph.

    ``domain`` (boolean mask) marks a partial function; entries outside it are
    ignored. ``radial_tail`` optionally describes the function beyond the ball.
    """

    values: np.ndarray
    domain: np.ndarray | None = None
    radial_tail: TailDescriptor | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.domain is not None:
            self.domain = np.asarray(self.domain, dtype=bool)
            if self.domain.shape != self.values.shape:
                raise ValueError("domain mask and values differ in shape")
            self.values = np.where(self.domain, self.values, 0.0)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("vertex function values must be finite")

    @classmethod
    def partial(cls, n: int, assignments: dict) -> "VertexFunction":
        values = np.zeros(n)
        domain = np.zeros(n, dtype=bool)
        for x, v in assignments.items():
            values[x] = v
            domain[x] = True
        return cls(values, domain)

    @classmethod
    def from_tail(cls, g: Graph, tail: TailDescriptor) -> "VertexFunction":
        """Evaluate ``tail`` on the labelled vertices of a Z^d Cayley ball."""
        if g.group is None or g.group.kind != "zd":
            raise ValueError("closed-form tails are only supported on Z^d balls")
        pts = np.array(g.labels, dtype=np.int64)
        return cls(tail(pts), radial_tail=tail)

    @property
    def is_total(self) -> bool:
        return self.domain is None or bool(self.domain.all())

    def __len__(self):
        return len(self.values)


def _values(f, g: Graph | None = None) -> np.ndarray:
    vals = f.values if isinstance(f, VertexFunction) else np.asarray(f, dtype=float)
    if g is not None and vals.shape != (g.num_vertices,):
        raise ValueError(f"function has shape {vals.shape}, graph has {g.num_vertices} vertices")
    return vals


@dataclass
class EdgeChain:
    """Antisymmetric function on ordered adjacent pairs, aligned with ``g.indices``."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @classmethod
    def from_edges(cls, g: Graph, edge_values: dict) -> "EdgeChain":
        """Build from ``{(u, v): value}``; the reversed pair gets ``-value``."""
        lookup = {}
        for k, (u, v) in enumerate(zip(g.src.tolist(), g.indices.tolist())):
            lookup[(u, v)] = k
        vals = np.zeros(len(g.indices))
        for (u, v), val in edge_values.items():
            k = lookup.get((u, v))
            if k is None:
                raise ValueError(f"({u}, {v}) is not an edge")
            vals[k] = val
            vals[g.reverse[k]] = -val
        return cls(vals)

    def is_antisymmetric(self, g: Graph) -> bool:
        return bool(np.all(self.values == -self.values[g.reverse]))


def _chain(s: EdgeChain, g: Graph) -> np.ndarray:
    if s.values.shape != g.indices.shape:
        raise ValueError("edge chain does not match the graph")
    return s.values


@dataclass(frozen=True)
class EnergyReport:
    p: float
    energy: float
    max_residual: float | None
    iterations: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# -- calculus --------------------------------------------------------------


def gradient(f, g: Graph) -> EdgeChain:
    """c(x, y) = f(x) - f(y) on every ordered adjacent pair."""
    vals = _values(f, g)
    return EdgeChain(vals[g.src] - vals[g.indices])


def divergence(s: EdgeChain, g: Graph) -> np.ndarray:
    """div s(x) = sum over neighbours y of s(x, y)."""
    return np.bincount(g.src, weights=_chain(s, g), minlength=g.num_vertices)


def p_energy(f, g: Graph, p: float, mask: np.ndarray | None = None) -> float:
    """Sum of |f(x) - f(y)|^p over ordered adjacent pairs.

    With ``mask``, only pairs whose endpoints both lie in the mask count.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    diffs = gradient(f, g).values
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        diffs = diffs[mask[g.src] & mask[g.indices]]
    return float(np.sum(np.abs(diffs) ** p))


def chain_norm(s: EdgeChain, q: float) -> float:
    """Ordered-pair l^q norm of an edge chain."""
    return math.fsum((np.abs(s.values) ** q).tolist()) ** (1.0 / q)


def p_laplacian(f, g: Graph, p: float, x: int) -> float:
    """Coarse p-Laplacian at ``x``, normalised by the closed-ball volume 1 + deg(x)."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    if not g.is_interior(x):
        raise RegionError(f"vertex {x} is not interior; its neighbourhood is incomplete")
    vals = _values(f, g)
    return float(_kernels.laplacian_at(vals, g.indptr, g.indices, int(x), float(p)))


def laplacian_residuals(f, g: Graph, p: float) -> np.ndarray:
    """Normalised p-Laplacian at every vertex (computed within the finite graph)."""
    vals = _values(f, g)
    d = vals[g.src] - vals[g.indices]
    terms = np.sign(d) * np.abs(d) ** (p - 1)
    return np.bincount(g.src, weights=terms, minlength=g.num_vertices) / (1.0 + g.degree)


# -- solver ------------------------------------------------------------------


def default_tolerance(p: float) -> float:
    return 1e-9 if p == 2 else 1e-7


def _check_p(p: float):
    if p <= 1:
        raise ValueError(f"p must be > 1 (p = 1 has non-unique minimisers), got {p}")
    if p <= 1.01 or p >= 50:
        warnings.warn(f"p = {p} is badly conditioned; expect slow convergence", RuntimeWarning, stacklevel=3)


def solve_p_harmonic(
    g: Graph,
    boundary: VertexFunction,
    p: float,
    tol: float | None = None,
    max_iter: int = 100_000,
    initial=None,
) -> tuple[VertexFunction, EnergyReport]:
    """Minimise the p-energy over the vertices outside ``boundary.domain``.

    Nonlinear Gauss-Seidel: free vertices are visited in ascending order and
    each is moved to the exact minimiser of its local energy (bisection on the
    monotone derivative). Unless ``initial`` is given, free vertices start from
    the p = 2 solution. For p < 2, rounds of at most 500 sweeps alternate with
    line-searched IRLS steps until neither makes progress. Stops when the
    largest normalised p-Laplacian over free vertices is at most ``tol``.

    For p close to 1 the minimiser can hold neighbours closer together than
    double precision resolves; the residual then cannot reach small ``tol``
    and the error is raised rather than hidden.

    Raises
    ------
    NonConvergenceError
        If ``tol`` is not reached within ``max_iter`` sweeps plus IRLS steps.
    """
    _check_p(p)
    tol = default_tolerance(p) if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    if boundary.domain is None:
        fixed = np.ones(g.num_vertices, dtype=bool)
    else:
        fixed = boundary.domain
    if boundary.values.shape != (g.num_vertices,):
        raise ValueError("boundary data does not match the graph")
    if not fixed.any():
        raise ValueError("boundary must fix at least one vertex")
    f = boundary.values.copy()
    free = np.flatnonzero(~fixed).astype(np.int64)
    if free.size == 0:
        return VertexFunction(f), EnergyReport(float(p), p_energy(f, g, p), None, 0)

    p = float(p)
    iterations = 0
    if initial is not None:
        f[free] = _values(initial, g)[free]
    else:
        f[free] = boundary.values[fixed].mean()
        if p != 2.0:
            it, _ = _kernels.run_gauss_seidel(f, g.indptr, g.indices, free, 2.0, tol, max_iter)
            iterations += it
    if p >= 2.0:
        it, res = _kernels.run_gauss_seidel(f, g.indptr, g.indices, free, p, tol, max_iter)
        iterations += it
    else:
        # sweeps settle single vertices, IRLS steps move near-tied clusters together
        res = math.inf
        while iterations < max_iter:
            budget = min(500, max_iter - iterations)
            it, res = _kernels.run_gauss_seidel(f, g.indptr, g.indices, free, p, tol, budget)
            iterations += it
            if res <= tol or iterations >= max_iter:
                break
            before = res
            f, res, steps = _irls(g, f, free, p, tol, min(50, max_iter - iterations))
            iterations += steps
            if res <= tol or res >= before * (1 - 1e-3):
                break
    if res > tol:
        raise NonConvergenceError("p-harmonic solver did not converge", res, iterations)
    return VertexFunction(f), EnergyReport(p, p_energy(f, g, p), float(res), iterations)


def _irls(g: Graph, f: np.ndarray, free: np.ndarray, p: float, tol: float, max_steps: int):
    """Reweighted-Laplacian steps with an exact line search, for 1 < p < 2.

    The direction solves L_w delta = -r with weights w = |f(x) - f(y)|^(p - 2)
    (ties are given a huge finite weight, which moves them as one block); the
    step length minimises the energy along delta by bisection on the sign of
    the directional derivative, which stays reliable long after energy
    differences drop below rounding.

    Returns (f, normalised residual, steps taken).
    """
    f = f.copy()
    n = g.num_vertices
    u, v = g.undirected_edges[:, 0], g.undirected_edges[:, 1]
    is_free = np.zeros(n, dtype=bool)
    is_free[free] = True
    pos = -np.ones(n, dtype=np.int64)
    pos[free] = np.arange(free.size)
    both = is_free[u] & is_free[v]
    norm = 1.0 + g.degree[free]

    def slope_terms(d):
        return np.sign(d) * np.abs(d) ** (p - 1)

    res = math.inf
    for step in range(max_steps + 1):
        d = f[u] - f[v]
        phi = slope_terms(d)
        r = np.bincount(u, weights=phi, minlength=n) - np.bincount(v, weights=phi, minlength=n)
        res = float(np.max(np.abs(r[free]) / norm))
        if res <= tol or step == max_steps:
            return f, res, step
        w = np.maximum(np.abs(d), 1e-150) ** (p - 2)
        diag = np.bincount(pos[u[is_free[u]]], weights=w[is_free[u]], minlength=free.size)
        diag += np.bincount(pos[v[is_free[v]]], weights=w[is_free[v]], minlength=free.size)
        rows = np.concatenate([pos[u[both]], pos[v[both]], np.arange(free.size)])
        cols = np.concatenate([pos[v[both]], pos[u[both]], np.arange(free.size)])
        data = np.concatenate([-w[both], -w[both], diag])
        A = sparse.csr_matrix((data, (rows, cols)), shape=(free.size, free.size))
        delta = np.zeros(n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MatrixRankWarning)
            delta[free] = spsolve(A, -r[free])
        if not np.all(np.isfinite(delta)):
            return f, res, step
        dd = delta[u] - delta[v]

        def slope(t):
            return math.fsum((slope_terms(d + t * dd) * dd).tolist())

        if not slope(0.0) < 0:
            return f, res, step
        lo, hi = 0.0, 1.0
        while slope(hi) < 0 and hi < 1e6:
            lo, hi = hi, 2 * hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if slope(mid) < 0:
                lo = mid
            else:
                hi = mid
        if lo == 0.0:
            return f, res, step
        f[free] += lo * delta[free]
    return f, res, max_steps  # pragma: no cover - loop always returns


# -- cycles and cocycles -----------------------------------------------------


def coupling(c: EdgeChain, s: EdgeChain, g: Graph) -> float:
    """<c, s> = sum over ordered adjacent pairs of c(x, y) s(x, y)."""
    prod = _chain(c, g) * _chain(s, g)
    return math.fsum(prod.tolist())


def nonvanishing_lower_bound(c: EdgeChain, s: EdgeChain, g: Graph, p: float, atol: float = 1e-12) -> float:
    """Holder certificate |<c, s>| / ||s||_q for a cycle ``s`` with 1/p + 1/q = 1.

    ``s`` must be divergence-free (within ``atol``) at every interior vertex.
    """
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    q = p / (p - 1)
    div = divergence(s, g)[g.interior]
    worst = float(np.max(np.abs(div))) if div.size else 0.0
    if worst > atol:
        raise ValueError(f"chain is not divergence-free at interior vertices (max |div| = {worst:.3e})")
    norm = chain_norm(s, q)
    if norm == 0:
        raise ValueError("the cycle has zero l^q norm")
    return abs(coupling(c, s, g)) / norm


# -- CSV / JSON ----------------------------------------------------------------


def write_vertex_function(f: VertexFunction, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "value"])
        for x, v in enumerate(f.values.tolist()):
            if f.domain is None or f.domain[x]:
                w.writerow([x, repr(v)])


def read_vertex_function(path: str | os.PathLike, num_vertices: int) -> VertexFunction:
    """Read ``vertex,value`` rows; vertices not listed are outside the domain."""
    assignments = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            x = int(row["vertex"])
            if not 0 <= x < num_vertices:
                raise ValueError(f"vertex {x} out of range")
            assignments[x] = float(row["value"])
    f = VertexFunction.partial(num_vertices, assignments)
    return VertexFunction(f.values) if f.domain.all() else f


def write_edge_chain(s: EdgeChain, g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "value"])
        for k in np.flatnonzero(g.src < g.indices):
            w.writerow([int(g.src[k]), int(g.indices[k]), repr(float(s.values[k]))])


def read_edge_chain(path: str | os.PathLike, g: Graph) -> EdgeChain:
    with open(path, newline="") as fh:
        edges = {(int(r["u"]), int(r["v"])): float(r["value"]) for r in csv.DictReader(fh)}
    return EdgeChain.from_edges(g, edges)
