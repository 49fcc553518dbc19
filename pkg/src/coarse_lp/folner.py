"""Controlled Folner sequences, their certificates, and Folner averaging.

Property (CF) asks for finite sets F_n inside the ball of radius n with
|s F_n symdiff F_n| / |F_n| <= C / n for every generator s. Translations here
are on the left, matching a left-invariant word metric (edges x -- x s).
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cocycle import CocycleHandle, RegularRepVector, _is_exact, max_norm_in_ball
from .dirichlet import VertexFunction, _values, p_energy
from .errors import BudgetExceededError, RegionError
from .graph import Graph
from .groups import DEFAULT_BUDGET, GroupSpec


@dataclass(frozen=True)
class FolnerSequence:
    group: GroupSpec
    sets: tuple  # sets[n - 1] is F_n, a frozenset of normal forms

    def __post_init__(self):
        if any(len(s) == 0 for s in self.sets):
            raise ValueError("Folner sets must be nonempty")

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, n: int) -> frozenset:
        if not 1 <= n <= len(self.sets):
            raise IndexError(f"F_{n} not in sequence of length {len(self.sets)}")
        return self.sets[n - 1]


@dataclass(frozen=True)
class ControlCertificate:
    C: Fraction
    ratios: dict  # n -> {generator name: |sF_n symdiff F_n| / |F_n|}
    containment_ok: dict  # n -> F_n inside the ball of radius n

    @property
    def passed(self) -> bool:
        return all(self.containment_ok.values()) and all(
            r <= self.C / n for n, per_gen in self.ratios.items() for r in per_gen.values()
        )

    def max_ratio(self, n: int) -> Fraction:
        return max(self.ratios[n].values())

    def to_json(self) -> str:
        per_n = [
            {"n": n, "max_ratio": float(self.max_ratio(n)), "containment": self.containment_ok[n]}
            for n in sorted(self.ratios)
        ]
        return json.dumps({"C": float(self.C), "C_exact": str(self.C), "pass": self.passed, "per_n": per_n}, sort_keys=True)


def _check_budget(total: int, budget: int, what: str):
    if total > budget:
        raise BudgetExceededError(what, total, budget)


def zd_half_width(d: int, n: int) -> int:
    """Half-width of the cube F_n in Z^d; d * width <= n keeps F_n in the n-ball."""
    return n // max(d, 2)


def folner_zd(d: int, N: int, budget: int = DEFAULT_BUDGET) -> FolnerSequence:
    """Cubes [-h, h]^d with h = floor(n / max(d, 2))."""
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    _check_budget(sum((2 * zd_half_width(d, n) + 1) ** d for n in range(1, N + 1)), budget, "Folner cubes")
    sets = []
    for n in range(1, N + 1):
        h = zd_half_width(d, n)
        sets.append(frozenset(itertools.product(range(-h, h + 1), repeat=d)))
    return FolnerSequence(GroupSpec.zd(d), tuple(sets))


def lamplighter_width(n: int) -> int:
    return (n - 1) // 3


def folner_lamplighter(N: int, budget: int = DEFAULT_BUDGET) -> FolnerSequence:
    """F_n = {(lamps, cursor): lamps within [0, m], cursor in [0, m]}, m = floor((n - 1) / 3)."""
    if N < 1:
        raise ValueError("need N >= 1")
    _check_budget(
        sum((lamplighter_width(n) + 1) * 2 ** (lamplighter_width(n) + 1) for n in range(1, N + 1)),
        budget,
        "lamplighter Folner sets",
    )
    sets = []
    for n in range(1, N + 1):
        m = lamplighter_width(n)
        positions = range(m + 1)
        configs = [
            frozenset(c) for k in range(m + 2) for c in itertools.combinations(positions, k)
        ]
        sets.append(frozenset((cfg, cur) for cfg in configs for cur in positions))
    return FolnerSequence(GroupSpec.lamplighter(), tuple(sets))


def verify_controlled(F: FolnerSequence, C) -> ControlCertificate:
    """Exact set arithmetic on normal forms for both (CF) conditions."""
    C = Fraction(C)
    group = F.group
    ratios, containment = {}, {}
    for n in range(1, len(F) + 1):
        Fn = F[n]
        containment[n] = all(group.word_length(x) <= n for x in Fn)
        per_gen = {}
        for name, s in group.generators.items():
            shifted = {group.mul(s, x) for x in Fn}
            per_gen[name] = Fraction(len(shifted.symmetric_difference(Fn)), len(Fn))
        ratios[n] = per_gen
    return ControlCertificate(C, ratios, containment)


def smallest_constant(F: FolnerSequence) -> Fraction:
    """The least C for which the ratio condition holds at every n."""
    cert = verify_controlled(F, 0)
    return max(n * cert.max_ratio(n) for n in cert.ratios)


# -- averaging ---------------------------------------------------------------


def average_cocycle(b: CocycleHandle, F: FolnerSequence, n: int, p: float = 2.0) -> RegularRepVector:
    """v_n = |F_n|^-1 sum over g in F_n of b(g); exact for rational cocycles."""
    if not b.exact:
        raise RegionError("averaging needs exactly evaluable cocycles")
    if b.group != F.group:
        raise ValueError("cocycle and Folner sequence live on different groups")
    Fn = sorted(F[n], key=F.group.format_label)
    total = RegularRepVector(b.group, {}, p)
    for g in Fn:
        total = total + b(g, p)
    exact = all(_is_exact(v) for v in total.data.values())
    return total.scale(Fraction(1, len(Fn)) if exact else 1.0 / len(Fn))


def almost_fixed_displacement(b: CocycleHandle, F: FolnerSequence, n: int, p: float) -> dict:
    """||pi(s) v_n + b(s) - v_n||_p for every generator s."""
    v = average_cocycle(b, F, n, p)
    out = {}
    for name, s in b.group.generators.items():
        moved = v.translate(s) + b(s, p) - v
        out[name] = moved.norm(p)
    return out


def displacement_envelope(b: CocycleHandle, C, n: int, p: float) -> float:
    """(C / n) * max over |g| <= n + 1 of ||b(g)||_p."""
    return float(Fraction(C) / n) * max_norm_in_ball(b, n + 1, p)


# -- discrete approximation P_n f -------------------------------------------


def folner_kernel(F: FolnerSequence, n: int, g: Graph) -> VertexFunction:
    """Normalised indicator of F_n on the labelled ball ``g``."""
    idx = g.index
    vals = np.zeros(g.num_vertices)
    for x in F[n]:
        if x not in idx:
            raise RegionError(f"F_{n} does not fit in the ball")
        vals[idx[x]] = 1.0 / len(F[n])
    return VertexFunction(vals)


def convolve_approximation(f, F: FolnerSequence, n: int, g: Graph, p: float):
    """P_n f(x) = |F_n|^-1 sum over y in F_n of f(x y), with its p-energy.

    Only vertices x with every x y inside the ball are kept (the returned
    function's ``domain``); the energy is the ordered-pair p-energy over edges
    with both ends in that region.
    """
    if g.group is None or g.group != F.group:
        raise ValueError("graph must be a Cayley ball of the Folner sequence's group")
    vals = _values(f, g)
    group, idx = g.group, g.index
    Fn = sorted(F[n], key=group.format_label)
    acc = np.zeros(g.num_vertices)
    valid = np.ones(g.num_vertices, dtype=bool)
    for i, x in enumerate(g.labels):
        total = 0.0
        for y in Fn:
            j = idx.get(group.mul(x, y))
            if j is None:
                valid[i] = False
                break
            total += vals[j]
        acc[i] = total / len(Fn)
    if not valid.any():
        raise RegionError(f"no vertex of the ball supports translation by F_{n}")
    smoothed = VertexFunction(acc, domain=valid)
    return smoothed, p_energy(smoothed.values, g, p, mask=valid)


# -- files -------------------------------------------------------------------


def write_folner_sequence(F: FolnerSequence, path: str | os.PathLike) -> None:
    fmt = F.group.format_label
    with open(path, "w") as fh:
        for n in range(1, len(F) + 1):
            labels = sorted(F[n], key=lambda x: (F.group.word_length(x), fmt(x)))
            fh.write(" ".join([str(n)] + [fmt(x) for x in labels]) + "\n")


def read_folner_sequence(path: str | os.PathLike, group: GroupSpec) -> FolnerSequence:
    sets = []
    with open(path) as fh:
        for expected, line in enumerate((ln for ln in fh if ln.strip()), start=1):
            parts = line.split()
            if int(parts[0]) != expected:
                raise ValueError(f"expected line for n = {expected}, got {parts[0]}")
            sets.append(frozenset(group.parse_label(t) for t in parts[1:]))
    return FolnerSequence(group, tuple(sets))
