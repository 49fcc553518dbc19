"""1-cocycles of the right regular representation on finitely supported l^p vectors.

The representation is pi(g)v(x) = v(xg); in terms of supports,
``pi(g)`` moves the value at y to y g^-1. A cocycle satisfies
b(gh) = pi(g) b(h) + b(g); coboundaries are b(g) = f - pi(g) f.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from numbers import Rational

import numpy as np
from scipy.special import zeta

from .dirichlet import TailDescriptor
from .errors import BudgetExceededError, RegionError
from .groups import DEFAULT_BUDGET, GroupSpec, Label, lattice_sphere_size


def _is_exact(v) -> bool:
    return isinstance(v, Rational)


def power_sum(values, p) -> float | Fraction:
    """sum |v|^p; exact when p is an integer and every value is rational."""
    values = list(values)
    if float(p).is_integer() and all(_is_exact(v) for v in values):
        k = int(p)
        return sum((abs(Fraction(v)) ** k for v in values), Fraction(0))
    return math.fsum(abs(float(v)) ** p for v in values)


@dataclass(frozen=True)
class RegularRepVector:
    """Finitely supported vector in l^p(G). Zero entries are never stored.

    ``tail_bound`` bounds the l^p norm of whatever was truncated away (0 for
    exact vectors).
    """

    group: GroupSpec
    data: dict = field(default_factory=dict)
    p: float = 2.0
    tail_bound: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "data", {k: v for k, v in self.data.items() if v != 0})

    @property
    def support(self) -> frozenset:
        return frozenset(self.data)

    def norm_pp(self, p: float | None = None):
        return power_sum(self.data.values(), self.p if p is None else p)

    def norm(self, p: float | None = None) -> float:
        p = self.p if p is None else p
        return float(self.norm_pp(p)) ** (1.0 / p)

    def translate(self, g: Label) -> "RegularRepVector":
        """pi(g) v."""
        ginv = self.group.inv(g)
        mul = self.group.mul
        return RegularRepVector(self.group, {mul(y, ginv): v for y, v in self.data.items()}, self.p)

    def __add__(self, other: "RegularRepVector") -> "RegularRepVector":
        out = dict(self.data)
        for k, v in other.data.items():
            out[k] = out.get(k, 0) + v
        return RegularRepVector(self.group, out, self.p, self.tail_bound + other.tail_bound)

    def __neg__(self):
        return RegularRepVector(self.group, {k: -v for k, v in self.data.items()}, self.p, self.tail_bound)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a) -> "RegularRepVector":
        return RegularRepVector(self.group, {k: a * v for k, v in self.data.items()}, self.p, abs(a) * self.tail_bound)

    def __eq__(self, other):
        return isinstance(other, RegularRepVector) and self.group == other.group and self.data == other.data

    __hash__ = None


def delta(group: GroupSpec, x: Label | None = None, p: float = 2.0) -> RegularRepVector:
    """Indicator of a single element (the identity by default)."""
    return RegularRepVector(group, {group.identity if x is None else x: 1}, p)


# -- cocycle handles ---------------------------------------------------------


@dataclass(frozen=True)
class CocycleHandle:
    """A cocycle given either as a coboundary or by its values on generators.

    ``kind == "coboundary"``: b(g) = f - pi(g) f with ``function`` a finitely
    supported dict or ``tail`` a closed form on Z^d with certified decay.
    ``kind == "generator"``: ``images`` maps generator names to vectors and b
    is extended along geodesic words by the cocycle relation.
    """

    group: GroupSpec
    kind: str
    function: dict | None = None
    tail: TailDescriptor | None = None
    images: dict | None = None

    @classmethod
    def coboundary_of(cls, group: GroupSpec, f) -> "CocycleHandle":
        if isinstance(f, TailDescriptor):
            if group.kind != "zd":
                raise ValueError("closed-form tails are only certifiable on Z^d")
            return cls(group, "coboundary", tail=f)
        return cls(group, "coboundary", function={k: v for k, v in dict(f).items() if v != 0})

    @classmethod
    def zero(cls, group: GroupSpec) -> "CocycleHandle":
        return cls(group, "coboundary", function={})

    @classmethod
    def from_generators(cls, group: GroupSpec, images: dict) -> "CocycleHandle":
        """Extend generator images to a cocycle (Z^d and free groups).

        Images may be given for any subset of generators closed up to inverses;
        b(s^-1) = -pi(s^-1) b(s) fills in the rest. On Z^d the images must
        satisfy b(s) + pi(s) b(t) = b(t) + pi(t) b(s).
        """
        if group.kind == "lamplighter":
            raise ValueError("generator-driven cocycles are supported on Z^d and free groups")
        full = {}
        for name, img in images.items():
            vec = img if isinstance(img, RegularRepVector) else RegularRepVector(group, dict(img))
            full[name] = vec
        for name in list(full):
            inv = group.inverse_name(name)
            derived = -full[name].translate(group.generators[inv])
            if inv in full and full[inv] != derived:
                raise ValueError(f"images of {name} and {inv} are inconsistent")
            full[inv] = derived
        missing = set(group.generators) - set(full)
        if missing:
            raise ValueError(f"no image for generators {sorted(missing)}")
        if group.kind == "zd":
            names = [f"e{i + 1}" for i in range(group.rank)]
            for i, s in enumerate(names):
                for t in names[i + 1:]:
                    gs, gt = group.generators[s], group.generators[t]
                    lhs = full[s] + full[t].translate(gs)
                    rhs = full[t] + full[s].translate(gt)
                    if lhs != rhs:
                        raise ValueError(f"images of {s} and {t} violate the commutation relation")
        return cls(group, "generator", images=full)

    @property
    def exact(self) -> bool:
        return self.tail is None

    def __call__(self, g: Label, p: float = 2.0) -> RegularRepVector:
        """b(g) as an exactly supported vector."""
        if self.tail is not None:
            raise RegionError("closed-form coboundaries need a truncation; use coboundary()")
        group = self.group
        if self.kind == "coboundary":
            f = RegularRepVector(group, self.function, p)
            return f - f.translate(g)
        out = RegularRepVector(group, {}, p)
        prefix = group.identity
        for name in group.word(g):
            out = out + self.images[name].translate(prefix)
            prefix = group.mul(prefix, group.generators[name])
        return RegularRepVector(group, out.data, p)

    def relation_holds(self, g: Label, h: Label) -> bool:
        """Exact check of b(gh) == pi(g) b(h) + b(g)."""
        lhs = self(self.group.mul(g, h))
        rhs = self(h).translate(g) + self(g)
        return lhs == rhs


# -- coboundaries of closed-form functions on Z^d ----------------------------


def lattice_ball_points(d: int, radius: int) -> np.ndarray:
    """All points of Z^d with l1 norm <= radius, as an (m, d) array."""
    axis = np.arange(-radius, radius + 1)
    if d == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([gr.ravel() for gr in grids], axis=1)
    return pts[np.abs(pts).sum(axis=1) <= radius]


def tail_power_bound(d: int, step: int, tail: TailDescriptor, p: float, radius: int) -> float:
    """Upper bound on sum over |x| > radius of |f(x) - f(x + g)|^p with |g| = step.

    Along a geodesic from x to x + g every point has norm >= |x| - step, so each
    term is at most (step * L * (|x| - step)^-decay)^p. Sphere sizes are bounded
    by sum_i 2^i C(d, i) r^(i-1) / (i-1)! and the series summed with Hurwitz zeta.
    """
    a = tail.decay * p
    if a <= d:
        raise ValueError(f"tail not certifiable: decay * p = {a} must exceed the dimension {d}")
    if radius < step:
        raise ValueError("truncation radius must be at least |g|")
    start = radius - step + 1
    total = 0.0
    for i in range(1, d + 1):
        coef = 2**i * comb(d, i) / factorial(i - 1)
        m = i - 1
        for ell in range(m + 1):
            total += coef * comb(m, ell) * step ** (m - ell) * float(zeta(a - ell, start))
    return (step * tail.lipschitz) ** p * total


def _tail_terms(tail: TailDescriptor, g: tuple, radius: int):
    d = len(g)
    pts = lattice_ball_points(d, radius)
    shift = np.asarray(g, dtype=np.int64)
    return pts, tail(pts) - tail(pts + shift)


def coboundary_norm(tail: TailDescriptor, g: tuple, p: float, radius: int) -> tuple[float, float]:
    """(truncated l^p norm, certified bound on the omitted l^p norm) of f - pi(g) f."""
    _, diff = _tail_terms(tail, g, radius)
    trunc_pp = math.fsum((np.abs(diff) ** p).tolist())
    step = sum(abs(a) for a in g)
    tail_pp = tail_power_bound(len(g), step, tail, p, radius) if step else 0.0
    return trunc_pp ** (1.0 / p), tail_pp ** (1.0 / p)


def default_truncation(step: int) -> int:
    return max(256 * step, 64)


def coboundary(f, g_elt: Label, group: GroupSpec, p: float = 2.0, radius: int | None = None) -> RegularRepVector:
    """b(g) = f - pi(g) f.

    ``f`` is a finitely supported dict or a :class:`TailDescriptor` on Z^d; in
    the latter case the vector is truncated to the ball of ``radius`` and its
    ``tail_bound`` certifies the l^p norm of the rest.
    """
    if not isinstance(f, TailDescriptor):
        return CocycleHandle.coboundary_of(group, f)(g_elt, p)
    if group.kind != "zd":
        raise ValueError("tail bound not certifiable outside Z^d")
    step = group.word_length(g_elt)
    if step == 0:
        return RegularRepVector(group, {}, p)
    radius = default_truncation(step) if radius is None else radius
    pts, diff = _tail_terms(f, g_elt, radius)
    data = {tuple(int(c) for c in pt): float(v) for pt, v in zip(pts, diff) if v != 0}
    bound = tail_power_bound(group.rank, step, f, p, radius) ** (1.0 / p)
    return RegularRepVector(group, data, p, bound)


# -- sublinearity ------------------------------------------------------------


@dataclass(frozen=True)
class SublinearityProfile:
    """M(n) = max over |g| = n of ||b(g)||_p, with M(n) <= true max <= M(n) + tail_bound(n)."""

    p: float
    n: tuple
    max_norm: tuple
    tail_bound: tuple

    @property
    def ratio(self) -> tuple:
        return tuple(m / n for m, n in zip(self.max_norm, self.n))

    @property
    def upper(self) -> tuple:
        return tuple(m + t for m, t in zip(self.max_norm, self.tail_bound))

    def at(self, n: int) -> tuple[float, float]:
        """(M(n), certified upper bound) for one n."""
        i = self.n.index(n)
        return self.max_norm[i], self.upper[i]

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "max_norm", "ratio", "tail_bound"])
            for row in zip(self.n, self.max_norm, self.ratio, self.tail_bound):
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def _sphere(group: GroupSpec, n: int, budget: int):
    if group.kind == "zd":
        size = lattice_sphere_size(group.rank, n)
    elif group.kind == "free":
        size = 1 if n == 0 else 2 * group.rank * (2 * group.rank - 1) ** (n - 1)
    else:
        size = 0
    if size > budget:
        raise BudgetExceededError(f"sphere of radius {n} in {group}", size, budget)
    return group.sphere(n)


def sublinearity_profile(
    b: CocycleHandle,
    N: int,
    p: float,
    ns=None,
    radius=None,
    budget: int = DEFAULT_BUDGET,
) -> SublinearityProfile:
    """Max norms of b over spheres of radius n = 1..N (or over ``ns``).

    For closed-form coboundaries, ``radius(n)`` gives the truncation radius
    (default 256 n) and the tail bound is certified.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    ns = list(range(1, N + 1)) if ns is None else sorted(set(int(n) for n in ns))
    if any(n < 1 or n > N for n in ns):
        raise ValueError("profile radii must lie in 1..N")
    radius = default_truncation if radius is None else radius
    max_norm, tails = [], []
    for n in ns:
        best, best_upper = 0.0, 0.0
        for g in _sphere(b.group, n, budget):
            if b.tail is not None:
                trunc, tail = coboundary_norm(b.tail, g, p, radius(n))
                upper = (trunc**p + tail**p) ** (1.0 / p)
            else:
                trunc = upper = b(g, p).norm(p)
            best = max(best, trunc)
            best_upper = max(best_upper, upper)
        max_norm.append(best)
        tails.append(best_upper - best)
    return SublinearityProfile(float(p), tuple(ns), tuple(max_norm), tuple(tails))


def max_norm_in_ball(b: CocycleHandle, radius: int, p: float, budget: int = DEFAULT_BUDGET) -> float:
    """max over |g| <= radius of ||b(g)||_p (exact handles only)."""
    return max(b(g, p).norm(p) for g in b.group.ball(radius, budget=budget))


# -- mixing and separation ---------------------------------------------------


def mixing_overlap(A, g: Label, group: GroupSpec) -> int:
    """|gA intersect A| under left translation."""
    A = set(A)
    return sum(1 for a in A if group.mul(g, a) in A)


def separation_additivity(vectors, shifts, p: float | None = None):
    """(||sum_i pi(g_i) v_i||_p^p, sum_i ||v_i||_p^p).

    Both sides are summed with correctly rounded summation (or exactly for
    rational data and integer p), so disjoint translated supports give
    identical numbers.
    """
    vectors = list(vectors)
    shifts = list(shifts)
    if len(vectors) != len(shifts) or not vectors:
        raise ValueError("need one shift per vector and at least one vector")
    ps = {v.p for v in vectors}
    if p is None:
        if len(ps) != 1:
            raise ValueError("vectors carry different exponents p")
        p = ps.pop()
    elif ps != {p}:
        raise ValueError("vectors must share the exponent p")
    group = vectors[0].group
    total = RegularRepVector(group, {}, p)
    for v, g in zip(vectors, shifts):
        total = total + v.translate(g)
    separate = power_sum([x for v in vectors for x in v.data.values()], p)
    return total.norm_pp(p), separate
