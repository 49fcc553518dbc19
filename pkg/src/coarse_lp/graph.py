"""Immutable bounded-degree graphs, Cayley balls and metric primitives."""

from __future__ import annotations

import io
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import RegionError
from .groups import DEFAULT_BUDGET, GroupSpec


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph in CSR form with a base point.

    ``word_length[x]`` is the distance from ``base``. Vertices with
    ``word_length < interior_radius`` have their complete neighbourhood in the
    graph; ``interior_radius=None`` means the graph is the whole space (every
    vertex is interior). ``convex`` records whether graph distances agree with
    the ambient distances (true for l1-balls in Z^d, tree balls, complete
    graphs), which decides how Gromov products are certified.
    """

    indptr: np.ndarray
    indices: np.ndarray
    base: int
    word_length: np.ndarray
    interior_radius: int | None = None
    labels: tuple | None = None
    group: GroupSpec | None = None
    convex: bool = True
    degree_bound: int | None = None
    _index: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.indptr) - 1
        if n < 1:
            raise ValueError("graph must have at least one vertex")
        if not 0 <= self.base < n:
            raise ValueError(f"base {self.base} out of range")
        if len(self.word_length) != n:
            raise ValueError("word_length has the wrong size")
        for arr in (self.indptr, self.indices, self.word_length):
            arr.setflags(write=False)
        deg = np.diff(self.indptr)
        bound = int(deg.max()) if self.degree_bound is None else self.degree_bound
        if deg.max() > bound:
            raise ValueError(f"degree {deg.max()} exceeds declared bound {bound}")
        object.__setattr__(self, "degree_bound", bound)
        src = np.repeat(np.arange(n), deg)
        if np.any(src == self.indices):
            raise ValueError("self-loops are not allowed")
        if np.any(self.reverse < 0):
            raise ValueError("adjacency is not symmetric")
        if np.any(np.abs(self.word_length[src] - self.word_length[self.indices]) > 1):
            raise ValueError("word_length is not 1-Lipschitz along edges")
        if self.word_length[self.base] != 0:
            raise ValueError("word_length(base) must be 0")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels has the wrong size")

    # -- construction --------------------------------------------------------

    @classmethod
    def from_edges(cls, num_vertices, edges, base=0, word_length=None, **kwargs) -> "Graph":
        """Build from an iterable of undirected ``(u, v)`` pairs.

        Missing ``word_length`` is filled in by BFS from ``base``; the graph must
        then be connected.
        """
        nbrs = [set() for _ in range(num_vertices)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        indptr = np.zeros(num_vertices + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(s) for s in nbrs])
        indices = np.array([v for s in nbrs for v in sorted(s)], dtype=np.int64)
        if word_length is None:
            word_length = _bfs(indptr, indices, base)
            if np.any(word_length < 0):
                raise ValueError("graph is disconnected; supply word_length explicitly")
        return cls(indptr, indices, int(base), np.asarray(word_length, dtype=np.int64), **kwargs)

    # -- structure -----------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.indptr) - 1

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    @cached_property
    def src(self) -> np.ndarray:
        """Tail of each directed adjacency entry (aligned with ``indices``)."""
        return np.repeat(np.arange(self.num_vertices), self.degree)

    @cached_property
    def reverse(self) -> np.ndarray:
        """Position of (v, u) for each directed entry (u, v); -1 if absent."""
        n = self.num_vertices
        keys = self.src * n + self.indices
        rkeys = self.indices * n + self.src
        order = np.argsort(keys, kind="stable")
        pos = np.searchsorted(keys[order], rkeys)
        pos = np.clip(pos, 0, len(keys) - 1)
        out = order[pos]
        out[keys[out] != rkeys] = -1
        return out

    @cached_property
    def undirected_edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, sorted."""
        mask = self.src < self.indices
        return np.stack([self.src[mask], self.indices[mask]], axis=1)

    @cached_property
    def interior(self) -> np.ndarray:
        if self.interior_radius is None:
            return np.ones(self.num_vertices, dtype=bool)
        return self.word_length < self.interior_radius

    def is_interior(self, x: int) -> bool:
        return bool(self.interior[x])

    @property
    def index(self) -> dict:
        """Label -> vertex map (requires ``labels``)."""
        if self.labels is None:
            raise ValueError("graph has no vertex labels")
        if self._index is None:
            object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})
        return self._index

    def sphere(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.word_length == r)


def _bfs(indptr, indices, source) -> np.ndarray:
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        dx = dist[x] + 1
        for y in indices[indptr[x]:indptr[x + 1]]:
            if dist[y] < 0:
                dist[y] = dx
                queue.append(y)
    return dist


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Graph distances from ``source``; unreachable vertices get -1."""
    return _bfs(g.indptr, g.indices, int(source))


def build_cayley_ball(spec: GroupSpec, radius: int, budget: int = DEFAULT_BUDGET) -> Graph:
    """Word-metric ball of ``radius`` around the identity, with all edges x -- x*s.

    Raises
    ------
    BudgetExceededError
        If the ball has more than ``budget`` vertices.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    labels = spec.ball(radius, budget=budget)
    index = {lab: i for i, lab in enumerate(labels)}
    gens = list(spec.generators.values())
    wl = np.empty(len(labels), dtype=np.int64)
    edges = []
    for i, x in enumerate(labels):
        wl[i] = spec.word_length(x)
        for s in gens:
            j = index.get(spec.mul(x, s))
            if j is not None and i < j:
                edges.append((i, j))
    g = Graph.from_edges(
        len(labels),
        edges,
        base=0,
        word_length=wl,
        interior_radius=radius,
        labels=tuple(labels),
        group=spec,
        convex=spec.kind != "lamplighter",
        degree_bound=len(gens),
    )
    object.__setattr__(g, "_index", index)
    return g


# -- metric ------------------------------------------------------------------


def gromov_product(g: Graph, x: int, y: int) -> Fraction:
    """(x|y) = (|x| + |y| - d(x, y)) / 2, relative to ``g.base``.

    On a non-convex truncation the ball distance can exceed the true one, so the
    answer is only returned when a geodesic between ``x`` and ``y`` provably lies
    inside the ball: |x| + |y| + d(x, y) <= 2 * interior_radius.
    """
    n = g.num_vertices
    if not (0 <= x < n and 0 <= y < n):
        raise IndexError("vertex out of range")
    d = int(bfs_distances(g, x)[y])
    _check_certified(g, x, y, d)
    return Fraction(int(g.word_length[x]) + int(g.word_length[y]) - d, 2)


def gromov_products(g: Graph, x: int) -> np.ndarray:
    """Twice the Gromov products (x|y) for all y, as integers."""
    d = bfs_distances(g, x)
    twice = g.word_length[x] + g.word_length - d
    if not g.convex and g.interior_radius is not None:
        bad = g.word_length[x] + g.word_length + d > 2 * g.interior_radius
        if np.any(bad):
            raise RegionError("Gromov product not certified for some vertices in this truncation")
    return twice


def _check_certified(g: Graph, x: int, y: int, d: int):
    if d < 0:
        raise RegionError(f"vertices {x} and {y} are not connected")
    if g.convex or g.interior_radius is None:
        return
    if g.word_length[x] + g.word_length[y] + d > 2 * g.interior_radius:
        raise RegionError(
            f"distance between {x} and {y} may pass through vertices outside the ball"
        )


def four_point_defect(dxy, dzw, dxz, dyw, dxw, dyz) -> Fraction:
    """Half the gap between the two largest of the three pair sums."""
    sums = sorted((dxy + dzw, dxz + dyw, dxw + dyz))
    return Fraction(sums[2] - sums[1], 2)


def estimate_hyperbolicity(g: Graph, samples: int, rng_seed: int) -> Fraction:
    """Max four-point defect over ``samples`` random quadruples (deterministic per seed)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = g.num_vertices
    if n == 0:  # pragma: no cover - Graph rejects empty graphs
        raise ValueError("empty graph")
    rng = np.random.default_rng(rng_seed)
    quads = rng.integers(0, n, size=(samples, 4))
    cache: dict[int, np.ndarray] = {}

    def dist(a):
        if a not in cache:
            cache[a] = bfs_distances(g, a)
        return cache[a]

    best = Fraction(0)
    for x, y, z, w in quads.tolist():
        dx, dy, dz = dist(x), dist(y), dist(z)
        delta = four_point_defect(dx[y], dz[w], dx[z], dy[w], dx[w], dy[z])
        if delta > best:
            best = delta
    return best


# -- file format -------------------------------------------------------------
# graph <num_vertices> <base>
# u v                 (one per undirected edge, u < v)
# wl <vertex> <value> (optional)
# interior <radius>   (optional)


def format_graph(g: Graph, with_word_length: bool = True) -> str:
    out = io.StringIO()
    out.write(f"graph {g.num_vertices} {g.base}\n")
    for u, v in g.undirected_edges.tolist():
        out.write(f"{u} {v}\n")
    if with_word_length:
        for x, w in enumerate(g.word_length.tolist()):
            out.write(f"wl {x} {w}\n")
    if g.interior_radius is not None:
        out.write(f"interior {g.interior_radius}\n")
    return out.getvalue()


def parse_graph(text: str) -> Graph:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "graph" or len(lines[0]) != 3:
        raise ValueError("missing 'graph <num_vertices> <base_index>' header")
    n, base = int(lines[0][1]), int(lines[0][2])
    edges, wl, interior = [], {}, None
    for parts in lines[1:]:
        if parts[0] == "wl":
            wl[int(parts[1])] = int(parts[2])
        elif parts[0] == "interior":
            interior = int(parts[1])
        elif len(parts) == 2:
            u, v = int(parts[0]), int(parts[1])
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            edges.append((u, v))
        else:
            raise ValueError(f"unrecognised line {' '.join(parts)!r}")
    word_length = None
    if wl:
        if len(wl) != n:
            raise ValueError("wl lines must cover every vertex")
        word_length = [wl[i] for i in range(n)]
    # a truncated ball read from disk carries no group, so distances are not assumed convex
    return Graph.from_edges(
        n, edges, base=base, word_length=word_length, interior_radius=interior, convex=interior is None
    )


def write_graph(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g))


def read_graph(path: str | os.PathLike) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())
