import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarse_lp.dirichlet import EdgeChain, chain_norm, coupling, divergence, gradient
from coarse_lp.errors import BudgetExceededError
from coarse_lp.graph import bfs_distances, estimate_hyperbolicity, gromov_products
from coarse_lp.hyperbolic import (
    BoundaryFunction,
    boundary_extension,
    build_tree_ball,
    cylinder_boundary_function,
    digit_series_boundary_function,
    extension_energy_profile,
    flow_norm_closed_form,
    flow_norm_limit,
    gromov_decay_boundary_function,
    indicator_boundary_function,
    leaf_gromov_products,
    nonvanishing_certificate,
    tree_ball_size,
    unit_flow_cycle,
)

LN2 = math.log(2)


def edge_value(t, s, a, b):
    g = t.graph
    k = g.indptr[a] + int(np.flatnonzero(g.neighbors(a) == b)[0])
    return s.values[k]


def pairwise_lipschitz(F, t):
    leaves = t.leaves
    for u, v in itertools.combinations(leaves, 2):
        pu, pv = t.paths[u], t.paths[v]
        k = next((i for i in range(len(pu)) if pu[i] != pv[i]), len(pu))
        if abs(F.values[u] - F.values[v]) > F.K * math.exp(-F.eps * k) * (1 + 1e-12):
            return False
    return True


# -- the ball ---------------------------------------------------------------------


def test_small_balls():
    assert build_tree_ball(1).graph.num_vertices == 4
    assert build_tree_ball(2).graph.num_vertices == 10
    with pytest.raises(ValueError):
        build_tree_ball(0)
    with pytest.raises(BudgetExceededError):
        build_tree_ball(12, budget=1000)


@pytest.mark.parametrize("D", range(1, 11))
def test_ball_structure(D):
    t = build_tree_ball(D)
    g = t.graph
    assert g.num_vertices == tree_ball_size(D) == 1 + 3 * (2**D - 1)
    assert g.num_edges == g.num_vertices - 1  # connected, so acyclic
    deg = g.degree
    assert deg[0] == 3
    assert np.all(deg[(g.word_length > 0) & (g.word_length < D)] == 3)
    assert np.all(deg[g.word_length == D] == 1)
    assert set(np.flatnonzero(deg == 1)) == set(t.leaves)
    x1, x2 = t.e
    assert x1 == 0 and g.word_length[x2] == 1
    # T2 is exactly the subtree below x2; the root's ray lies in T1
    below = {x2} | {int(y) for y in range(g.num_vertices) if t.paths[y][:1] == t.paths[x2]}
    assert set(np.flatnonzero(t.in_t2)) == below
    assert not t.in_t2[t.first_leaf[0]]


def test_tree_is_zero_hyperbolic():
    assert estimate_hyperbolicity(build_tree_ball(5).graph, 3000, 1) == 0


def test_gromov_product_is_common_ancestor_depth():
    t = build_tree_ball(7)
    g = t.graph
    for x in range(g.num_vertices):
        twice = gromov_products(g, x)
        common = leaf_gromov_products(t, x, np.arange(g.num_vertices))
        assert np.array_equal(twice, 2 * common)


# -- the flow -------------------------------------------------------------------------


@pytest.mark.parametrize("D", [2, 3, 5, 8])
def test_flow_structure(D):
    t = build_tree_ball(D)
    g = t.graph
    s = unit_flow_cycle(t, 2).chain
    assert s.is_antisymmetric(g)
    div = divergence(s, g)
    assert np.all(div[g.interior] == 0)
    x1, x2 = t.e
    assert edge_value(t, s, x1, x2) == 1
    leaves = t.leaves
    assert np.all(np.abs(div[leaves][t.in_t2[leaves]]) == 2.0 ** -(D - 1))
    assert np.all(np.abs(div[leaves][~t.in_t2[leaves]]) == 2.0**-D)
    d1, d2 = bfs_distances(g, x1), bfs_distances(g, x2)
    for a, b in g.undirected_edges.tolist():
        if {a, b} == {x1, x2}:
            continue
        n = min(d1[a], d1[b], d2[a], d2[b]) + 1
        assert abs(edge_value(t, s, a, b)) == 2.0**-n


def antichains(t, v):
    """All sets of T2 vertices meeting every root-to-leaf path below v exactly once."""
    kids = t.children(v)
    yield [v]
    if len(kids) == 0:
        return
    for left in antichains(t, kids[0]):
        for right in antichains(t, kids[1]):
            yield left + right


@pytest.mark.parametrize("D", [2, 3, 4, 5])
def test_flux_across_every_cut(D):
    t = build_tree_ball(D)
    s = unit_flow_cycle(t, 2).chain
    x2 = t.e[1]
    count = 0
    for cut in antichains(t, x2):
        flux = sum(edge_value(t, s, int(t.parent[v]), v) for v in cut)
        assert flux == 1
        count += 1
    assert count > 1


def test_flux_across_sampled_cuts_depth_six():
    t = build_tree_ball(6)
    s = unit_flow_cycle(t, 2).chain
    rng = np.random.default_rng(11)

    def random_cut(v):
        kids = t.children(v)
        if len(kids) == 0 or rng.random() < 0.3:
            return [v]
        return random_cut(kids[0]) + random_cut(kids[1])

    for _ in range(200):
        cut = random_cut(t.e[1])
        assert sum(edge_value(t, s, int(t.parent[v]), v) for v in cut) == 1
    # on the T1 side the same flux reaches the root from below
    t1_children = [c for c in t.children(0) if not t.in_t2[c]]
    assert sum(edge_value(t, s, c, 0) for c in t1_children) == 1


def level_sum(D, q):
    """Direct edge-by-edge accumulation by level counts (independent of the closed form)."""
    total = 1.0  # the edge e
    for n in range(1, D):  # T2: 2^n edges at distance n
        total += 2**n * (2.0**-n) ** q
    for n in range(1, D + 1):  # T1: 2^n edges at distance n
        total += 2**n * (2.0**-n) ** q
    return 2 * total


@pytest.mark.parametrize("q", [4 / 3, 1.5, 2, 3])
def test_flow_norm_closed_form(q):
    for D in range(1, 11):
        t = build_tree_ball(D)
        measured = chain_norm(unit_flow_cycle(t, q).chain, q) ** q
        assert measured == pytest.approx(flow_norm_closed_form(D, q), rel=1e-12)
        assert level_sum(D, q) == pytest.approx(flow_norm_closed_form(D, q), rel=1e-13)


def test_flow_norm_limit_q2():
    assert flow_norm_limit(2) == 6
    assert abs(level_sum(20, 2) - 6) < 1e-4
    with pytest.raises(ValueError):
        unit_flow_cycle(build_tree_ball(2), 1)


def test_flow_norm_monotone_in_depth():
    for q in (4 / 3, 2, 5):
        norms = [flow_norm_closed_form(D, q) for D in range(1, 30)]
        assert all(b >= a for a, b in zip(norms, norms[1:]))
        assert all(b > a for a, b in zip(norms[:8], norms[1:9]))
        assert norms[-1] <= flow_norm_limit(q) * (1 + 1e-14)
        assert norms[8] < flow_norm_limit(q)


# -- boundary functions -----------------------------------------------------------------------


def test_extension_examples():
    t = build_tree_ball(5)
    const = BoundaryFunction({int(v): 0.7 for v in t.leaves}, LN2, 1)
    assert np.all(boundary_extension(const, t).values == 0.7)
    ind = boundary_extension(indicator_boundary_function(t), t)
    assert np.array_equal(ind.values, t.in_t2.astype(float))
    c = gradient(ind, t.graph)
    support = {(int(a), int(b)) for a, b, v in zip(t.graph.src, t.graph.indices, c.values) if v != 0}
    assert support == {t.e, t.e[::-1]}
    cyl = boundary_extension(cylinder_boundary_function(t, (0, 1)), t)
    for x in range(t.graph.num_vertices):
        if len(t.paths[x]) >= 2:
            assert cyl.values[x] == float(t.paths[x][:2] == (0, 1))


@pytest.mark.parametrize("D", [2, 4, 6])
def test_lipschitz_scan_matches_pairwise(D):
    t = build_tree_ball(D)
    rng = np.random.default_rng(D)
    for eps in (0.3, LN2, 1.5):
        for F in (
            indicator_boundary_function(t, eps),
            gromov_decay_boundary_function(t, eps),
            digit_series_boundary_function(t, eps),
            cylinder_boundary_function(t, (1, 0), eps),
        ):
            assert F.lipschitz_ok(t) and pairwise_lipschitz(F, t)
        for K in (0.1, 0.5, 1.0, 2.0):
            noisy = BoundaryFunction({int(v): float(rng.uniform(0, 1)) for v in t.leaves}, eps, K)
            assert noisy.lipschitz_ok(t) == pairwise_lipschitz(noisy, t)


def test_indicator_lipschitz_up_to_depth_ten():
    for D in range(1, 11):
        t = build_tree_ball(D)
        F = indicator_boundary_function(t)
        assert F.K == math.exp(LN2) and F.lipschitz_ok(t)


def test_energy_profile_locally_constant():
    t = build_tree_ball(8)
    prof = extension_energy_profile(cylinder_boundary_function(t, (2, 1, 0)), t, 3)
    assert all(e == 0 for e in prof.depth_energy[3:])
    assert prof.depth_energy[2] > 0
    assert all(e <= env for e, env in zip(prof.depth_energy, prof.envelope))


def test_energy_bounded_in_depth_when_p_eps_exceeds_growth():
    totals = []
    for D in (8, 10, 12):
        t = build_tree_ball(D)
        F = gromov_decay_boundary_function(t, LN2)
        totals.append(extension_energy_profile(F, t, 2).total)  # p * eps = 2 ln 2
    assert totals[2] / totals[1] < 1.05
    assert totals[0] <= totals[1] <= totals[2]


def test_energy_grows_when_p_eps_is_below_growth():
    t = build_tree_ball(12)
    p = 2
    F = digit_series_boundary_function(t, 0.5 * LN2 / p)
    e = extension_energy_profile(F, t, p).depth_energy
    ratios = [b / a for a, b in zip(e[1:], e[2:])]
    assert all(r == pytest.approx(2 ** 0.5, rel=1e-9) for r in ratios)


def test_energy_profile_rejects_non_lipschitz():
    t = build_tree_ball(4)
    bad = BoundaryFunction({int(v): float(i % 2) for i, v in enumerate(t.leaves)}, LN2, 0.01)
    with pytest.raises(ValueError):
        extension_energy_profile(bad, t, 2)
    with pytest.raises(ValueError):
        BoundaryFunction({}, 0, 1)


# -- the certificate ------------------------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2, 4])
def test_certificate(p):
    bounds = []
    for D in range(2, 11):
        cert = nonvanishing_certificate(build_tree_ball(D), p)
        assert abs(cert.coupling) == 2
        assert cert.flow_norm_q ** cert.q == pytest.approx(flow_norm_closed_form(D, cert.q), rel=1e-12)
        bounds.append(cert.lower_bound)
    q = p / (p - 1)
    assert all(b < a for a, b in zip(bounds, bounds[1:]))
    limit = 2 / flow_norm_limit(q) ** (1 / q)
    assert bounds[-1] > limit
    for D, (a, b) in enumerate(zip(bounds, bounds[1:]), start=2):
        assert a - b <= 4 * 2.0 ** (-(q - 1) * D)


def test_certificate_q2_limit_and_json():
    cert = nonvanishing_certificate(build_tree_ball(12), 2)
    assert cert.lower_bound == pytest.approx(2 / math.sqrt(6), rel=1e-3)
    d = json.loads(cert.to_json())
    assert sorted(d) == ["coupling", "depth", "flow_norm_q", "lower_bound", "p", "q"]
    with pytest.raises(ValueError):
        nonvanishing_certificate(build_tree_ball(3), 1)


@given(st.data())
def test_holder_duality_on_tree(data):
    t = build_tree_ball(4)
    m = len(t.graph.indices)
    p = data.draw(st.floats(1.1, 8))
    q = p / (p - 1)
    c = EdgeChain(np.array(data.draw(st.lists(st.floats(-3, 3), min_size=m, max_size=m))))
    s = EdgeChain(np.array(data.draw(st.lists(st.floats(-3, 3), min_size=m, max_size=m))))
    lhs = abs(coupling(c, s, t.graph))
    assert lhs <= chain_norm(c, p) * chain_norm(s, q) * (1 + 1e-12) + 1e-12


def test_interior_supported_functions_are_annihilated():
    D = 6
    t = build_tree_ball(D)
    s = unit_flow_cycle(t, 2).chain
    rng = np.random.default_rng(2)
    inner = t.graph.word_length <= D - 2
    for _ in range(20):
        f = np.where(inner, rng.integers(-20, 21, size=t.graph.num_vertices), 0).astype(float)
        assert coupling(gradient(f, t.graph), s, t.graph) == 0
