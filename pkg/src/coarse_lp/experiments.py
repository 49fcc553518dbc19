"""Liouville experiment: p-harmonic extensions of boundary data on growing balls.

Boundary data lives on the outer sphere of a ball; the harmonic part is the
p-harmonic extension inward, and the observable is its oscillation on the
unit ball around the base point, normalised by the oscillation of the data.
On amenable groups of polynomial growth this shrinks with the radius; on the
tree it stays bounded below.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dirichlet import VertexFunction, solve_p_harmonic
from .graph import Graph, build_cayley_ball
from .groups import DEFAULT_BUDGET, GroupSpec
from .hyperbolic import build_tree_ball

DATA_KINDS = ("default", "constant")


def _space(space, radius: int, budget: int) -> tuple[Graph, np.ndarray]:
    """The ball and, per vertex, the default boundary datum."""
    if space == "tree":
        t = build_tree_ball(radius, budget=budget)
        return t.graph, t.in_t2.astype(float)
    spec = space if isinstance(space, GroupSpec) else GroupSpec.parse(space)
    g = build_cayley_ball(spec, radius, budget=budget)
    if spec.kind == "zd":
        data = np.array([x[0] / max(1, sum(abs(a) for a in x)) for x in g.labels])
    elif spec.kind == "free":
        data = np.array([float(len(x) > 0 and x[0] == 1) for x in g.labels])
    else:
        data = np.array([float(0 in x[0]) for x in g.labels])
    return g, data


@dataclass(frozen=True)
class LiouvilleRow:
    radius: int
    num_vertices: int
    oscillation: float  # max - min of u on B(o, 1)
    boundary_oscillation: float
    normalized: float
    energy: float
    iterations: int


def liouville_oscillation(space, radius: int, p: float, data: str = "default", tol=None,
                          budget: int = DEFAULT_BUDGET) -> LiouvilleRow:
    """Solve with data fixed on the outer sphere and measure the inner oscillation."""
    if data not in DATA_KINDS:
        raise ValueError(f"data must be one of {DATA_KINDS}, got {data!r}")
    if radius < 2:
        raise ValueError("radius must be >= 2 so that B(o, 1) is strictly inside")
    g, values = _space(space, radius, budget)
    if data == "constant":
        values = np.ones_like(values)
    fixed = g.word_length == radius
    u, report = solve_p_harmonic(g, VertexFunction(np.where(fixed, values, 0.0), domain=fixed), p, tol=tol)
    inner = u.values[g.word_length <= 1]
    osc = float(inner.max() - inner.min())
    bosc = float(values[fixed].max() - values[fixed].min())
    return LiouvilleRow(
        radius=radius,
        num_vertices=g.num_vertices,
        oscillation=osc,
        boundary_oscillation=bosc,
        normalized=osc / bosc if bosc > 0 else 0.0,
        energy=report.energy,
        iterations=report.iterations,
    )


def liouville_profile(space, radii, p: float, data: str = "default", tol=None,
                      budget: int = DEFAULT_BUDGET) -> list[dict]:
    return [asdict(liouville_oscillation(space, r, p, data, tol, budget)) for r in radii]
