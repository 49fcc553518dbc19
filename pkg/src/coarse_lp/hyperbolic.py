"""Non-vanishing certificates on balls of the 3-regular tree.

The tree ball of depth D is rooted at o = vertex 0. The distinguished edge e
joins o to its *last* child x2; T2 is the subtree below x2 and T1 is everything
else, so the root's ray representative (its first descendant leaf) lies in T1.

A boundary function F assigns values to leaves (the finite stand-ins for
ends); it is extended inward by f(x) = F(first descendant leaf of x). The
dyadic flow sends one unit across e from T1 to T2, halving at each branching,
and pairs with gradients; Holder duality turns a nonzero pairing into a lower
bound for the distance to the closure of l^p.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dirichlet import EdgeChain, VertexFunction, chain_norm, coupling, gradient, nonvanishing_lower_bound
from .errors import BudgetExceededError
from .graph import Graph
from .groups import DEFAULT_BUDGET


@dataclass(frozen=True, eq=False)
class TreeBall:
    graph: Graph
    depth: int
    parent: np.ndarray  # -1 at the root
    paths: tuple  # child-index path from the root, per vertex
    first_leaf: np.ndarray
    e: tuple  # (x1, x2)
    in_t2: np.ndarray

    @property
    def leaves(self) -> np.ndarray:
        return self.graph.sphere(self.depth)

    def children(self, x: int) -> np.ndarray:
        nb = self.graph.neighbors(x)
        return nb[self.parent[nb] == x]


def tree_ball_size(D: int) -> int:
    return 1 + 3 * (2**D - 1)


def build_tree_ball(D: int, budget: int = DEFAULT_BUDGET) -> TreeBall:
    """Depth-D ball of the 3-regular tree, vertices in BFS (and lexicographic) order."""
    if D < 1:
        raise ValueError(f"depth must be >= 1, got {D}")
    n = tree_ball_size(D)
    if n > budget:
        raise BudgetExceededError(f"tree ball of depth {D}", n, budget)
    paths = [()]
    parent = [-1]
    depth = [0]
    frontier = [0]
    for k in range(1, D + 1):
        nxt = []
        for x in frontier:
            for c in range(3 if x == 0 else 2):
                paths.append(paths[x] + (c,))
                parent.append(x)
                depth.append(k)
                nxt.append(len(paths) - 1)
        frontier = nxt
    parent = np.array(parent, dtype=np.int64)
    edges = [(int(parent[x]), x) for x in range(1, n)]
    g = Graph.from_edges(
        n, edges, base=0, word_length=np.array(depth), interior_radius=D, convex=True, degree_bound=3
    )
    first_leaf = np.arange(n)
    for x in range(n - 1, 0, -1):
        p = parent[x]
        if paths[x][-1] == 0:
            first_leaf[p] = first_leaf[x]
    x2 = 3
    in_t2 = np.zeros(n, dtype=bool)
    in_t2[x2] = True
    for x in range(x2 + 1, n):
        in_t2[x] = in_t2[parent[x]]
    return TreeBall(g, D, parent, tuple(paths), first_leaf, (0, x2), in_t2)


def leaf_gromov_products(t: TreeBall, u: int, leaves: np.ndarray | None = None) -> np.ndarray:
    """(u|v) for leaves v: the depth of their deepest common ancestor."""
    leaves = t.leaves if leaves is None else leaves
    pu = t.paths[u]
    out = np.empty(len(leaves), dtype=np.int64)
    for i, v in enumerate(leaves):
        pv = t.paths[v]
        k = 0
        while k < len(pu) and k < len(pv) and pu[k] == pv[k]:
            k += 1
        out[i] = k
    return out


# -- boundary functions ------------------------------------------------------


@dataclass(frozen=True)
class BoundaryFunction:
    """Values on the leaves of a tree ball, K-Lipschitz for e^(-eps (u|v))."""

    values: dict  # leaf vertex -> value
    eps: float
    K: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def lipschitz_ok(self, t: TreeBall) -> bool:
        """Exact check of |F(u) - F(v)| <= K e^(-eps (u|v)) over all leaf pairs.

        Leaves sharing their first k steps form a block; every pair with
        (u|v) = k sits in one level-k block, and every pair in that block has
        (u|v) >= k, so the condition is that each level-k block has range at
        most K e^(-eps k). A relative slack of 1e-12 absorbs rounding in K.
        """
        leaves = t.leaves
        vals = np.array([self.values[v] for v in leaves])
        paths = np.array([t.paths[v] for v in leaves])
        for k in range(t.depth + 1):
            keys = [tuple(row[:k]) for row in paths]
            blocks: dict = {}
            for key, v in zip(keys, vals):
                lo, hi = blocks.get(key, (v, v))
                blocks[key] = (min(lo, v), max(hi, v))
            limit = self.K * math.exp(-self.eps * k) * (1 + 1e-12)
            if any(hi - lo > limit for lo, hi in blocks.values()):
                return False
        return True


def indicator_boundary_function(t: TreeBall, eps: float = math.log(2)) -> BoundaryFunction:
    """1 on the ends of T2, 0 on the ends of T1."""
    vals = {int(v): float(t.in_t2[v]) for v in t.leaves}
    return BoundaryFunction(vals, eps, math.exp(eps))


def cylinder_boundary_function(t: TreeBall, prefix: tuple, eps: float = math.log(2)) -> BoundaryFunction:
    """Indicator of the ends whose path starts with ``prefix``."""
    k = len(prefix)
    vals = {int(v): float(t.paths[v][:k] == tuple(prefix)) for v in t.leaves}
    return BoundaryFunction(vals, eps, math.exp(eps * max(k - 1, 0)))


def gromov_decay_boundary_function(t: TreeBall, eps: float, reference: int | None = None) -> BoundaryFunction:
    """F(u) = exp(-eps (u | reference end)); 1-Lipschitz for the visual metric."""
    ref = int(t.first_leaf[0]) if reference is None else reference
    leaves = t.leaves
    prods = leaf_gromov_products(t, ref, leaves)
    return BoundaryFunction({int(v): math.exp(-eps * k) for v, k in zip(leaves, prods)}, eps, 1.0)


def digit_series_boundary_function(t: TreeBall, eps: float) -> BoundaryFunction:
    """F(u) = sum over depths k of e^(-eps k) [u does not take the first branch at k].

    Every vertex has a non-first child, so the extension's gradient is spread
    over the whole tree; this is the extremal case for energy growth.
    """
    vals = {}
    for v in t.leaves:
        path = t.paths[v]
        vals[int(v)] = math.fsum(math.exp(-eps * (k + 1)) for k, c in enumerate(path) if c != 0)
    return BoundaryFunction(vals, eps, 1.0 / math.expm1(eps))


def boundary_extension(F: BoundaryFunction, t: TreeBall) -> VertexFunction:
    """f(x) = F(first descendant leaf of x); the root uses its own first leaf."""
    return VertexFunction(np.array([F.values[int(u)] for u in t.first_leaf]))


@dataclass(frozen=True)
class EnergyProfile:
    p: float
    depth_energy: tuple  # ordered-pair energy of edges between depths n and n + 1
    envelope: tuple  # 2 * 3 * 2^n * K^p * e^(-p eps n)
    radial_envelope: tuple  # 2 * 3 * 2^n * K^p * e^(-2 p eps n + 2 p), in |x| instead of (u|v); reported only

    @property
    def total(self) -> float:
        return math.fsum(self.depth_energy)


def extension_energy_profile(F: BoundaryFunction, t: TreeBall, p: float) -> EnergyProfile:
    """Per-depth p-energy of the boundary extension, checked against its envelope.

    Raises
    ------
    ValueError
        If some depth exceeds the Gromov-product envelope (F is then not
        K-Lipschitz).
    """
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    f = boundary_extension(F, t).values
    g = t.graph
    diffs = np.abs(f[g.src] - f[g.indices]) ** p
    level = np.minimum(g.word_length[g.src], g.word_length[g.indices])
    per = [math.fsum(diffs[level == n].tolist()) for n in range(t.depth)]
    env = [2 * 3 * 2**n * F.K**p * math.exp(-p * F.eps * n) for n in range(t.depth)]
    radial = [2 * 3 * 2**n * F.K**p * math.exp(-2 * p * F.eps * n + 2 * p) for n in range(t.depth)]
    for n, (e, bound) in enumerate(zip(per, env)):
        if e > bound * (1 + 1e-12):
            raise ValueError(f"depth {n} energy {e:.6g} exceeds the Lipschitz envelope {bound:.6g}")
    return EnergyProfile(float(p), tuple(per), tuple(env), tuple(radial))


# -- the dyadic flow ---------------------------------------------------------


@dataclass(frozen=True)
class TreeFlow:
    chain: EdgeChain
    q: float


def unit_flow_cycle(t: TreeBall, q: float) -> TreeFlow:
    """One unit across e from T1 to T2, split equally at every branching.

    An edge at distance n from e carries 2^-n. On T2 the flow runs away from
    the root; on T1 it runs towards it.
    """
    if q <= 1:
        raise ValueError(f"q must be > 1, got {q}")
    g = t.graph
    edges = {}
    for v in range(1, g.num_vertices):
        u = int(t.parent[v])
        k = int(g.word_length[v])
        if t.in_t2[v]:
            edges[(u, v)] = 2.0 ** -(k - 1)
        else:
            edges[(v, u)] = 2.0**-k
    return TreeFlow(EdgeChain.from_edges(g, edges), float(q))


def flow_norm_closed_form(D: int, q: float) -> float:
    """||s||_q^q over ordered pairs: 2 (1 + sum_{n<D} 2^n 2^-nq + sum_{n<=D} 2^n 2^-nq).

    T2 hangs from x2 and reaches distance D - 1 from e; T1 reaches distance D.
    """
    r = 2.0 ** (1.0 - q)
    t2 = math.fsum(r**n for n in range(1, D))
    t1 = math.fsum(r**n for n in range(1, D + 1))
    return 2.0 * (1.0 + t1 + t2)


def flow_norm_limit(q: float) -> float:
    """D -> infinity limit of :func:`flow_norm_closed_form`."""
    r = 2.0 ** (1.0 - q)
    return 2.0 * (1.0 + 2.0 * r / (1.0 - r))


@dataclass(frozen=True)
class NonvanishingCertificate:
    p: float
    q: float
    depth: int
    coupling: float
    flow_norm_q: float
    lower_bound: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def nonvanishing_certificate(t: TreeBall, p: float) -> NonvanishingCertificate:
    """Pair the extension of the T2-indicator with the dyadic flow."""
    if p <= 1:
        raise ValueError(f"p must be > 1, got {p}")
    q = p / (p - 1)
    F = indicator_boundary_function(t)
    c = gradient(boundary_extension(F, t), t.graph)
    s = unit_flow_cycle(t, q).chain
    bound = nonvanishing_lower_bound(c, s, t.graph, p)
    return NonvanishingCertificate(
        p=float(p),
        q=q,
        depth=t.depth,
        coupling=coupling(c, s, t.graph),
        flow_norm_q=chain_norm(s, q),
        lower_bound=bound,
    )
