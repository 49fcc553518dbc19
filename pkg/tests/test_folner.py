import json
import math
from fractions import Fraction

import numpy as np
import pytest

from coarse_lp.cocycle import CocycleHandle, RegularRepVector, max_norm_in_ball
from coarse_lp.dirichlet import gradient
from coarse_lp.errors import BudgetExceededError, RegionError
from coarse_lp.folner import (
    FolnerSequence,
    almost_fixed_displacement,
    average_cocycle,
    convolve_approximation,
    displacement_envelope,
    folner_kernel,
    folner_lamplighter,
    folner_zd,
    lamplighter_width,
    read_folner_sequence,
    smallest_constant,
    verify_controlled,
    write_folner_sequence,
    zd_half_width,
)
from coarse_lp.graph import build_cayley_ball
from coarse_lp.groups import GroupSpec

from test_groups import lamplighter_states_bfs

Z, Z2 = GroupSpec.zd(1), GroupSpec.zd(2)
LAMP = GroupSpec.lamplighter()


def sqrt_signed(g):
    return np.array([math.copysign(math.sqrt(abs(x[0])), x[0]) for x in g.labels])


def test_integer_ratios_closed_form():
    F = folner_zd(1, 40)
    cert = verify_controlled(F, 2)
    for n in range(1, 41):
        h = n // 2
        assert set(cert.ratios[n].values()) == {Fraction(2, 2 * h + 1)}
    assert cert.passed


def test_plane_ratio_at_four():
    cert = verify_controlled(folner_zd(2, 4), 4)
    assert cert.max_ratio(4) == Fraction(2, 5)
    h = zd_half_width(2, 4)
    assert len(folner_zd(2, 4)[4]) == (2 * h + 1) ** 2


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cubes_fit_in_balls(d):
    F = folner_zd(d, 12)
    cert = verify_controlled(F, smallest_constant(F))
    assert all(cert.containment_ok.values())
    assert cert.passed
    for n in range(1, 13):
        assert max(sum(map(abs, x)) for x in F[n]) <= n


def test_broken_sequences_fail():
    points = FolnerSequence(Z, tuple(frozenset({(0,)}) for _ in range(20)))
    assert not verify_controlled(points, 2).passed  # ratio stays 1
    shifted = FolnerSequence(Z, tuple(frozenset((k,) for k in range(n * n, n * n + n + 1)) for n in range(1, 6)))
    cert = verify_controlled(shifted, 100)
    assert not cert.containment_ok[2] and not cert.passed
    with pytest.raises(ValueError):
        FolnerSequence(Z, (frozenset(),))


def lamplighter_ratio_oracle(Fn, move):
    """|s F symdiff F| / |F| with s acting by the lamplighter moves."""
    moved = set()
    for lamps, cur in Fn:
        if move == "t":
            moved.add((lamps, cur + 1))
        elif move == "t^-1":
            moved.add((lamps, cur - 1))
        else:
            moved.add((lamps ^ {cur}, cur))
    return Fraction(len(moved ^ set(Fn)), len(Fn))


def test_lamplighter_sequence():
    F = folner_lamplighter(12)
    cert = verify_controlled(F, smallest_constant(F))
    assert cert.passed
    words = lamplighter_states_bfs(12)
    for n in range(1, 13):
        m = lamplighter_width(n)
        assert len(F[n]) == (m + 1) * 2 ** (m + 1)
        assert all(words[x] <= n for x in F[n])
        for s in ("t", "t^-1", "a"):
            assert cert.ratios[n][s] == lamplighter_ratio_oracle(F[n], s)
    assert F[1] == frozenset({LAMP.identity, (frozenset({0}), 0)})


def test_folner_budget():
    with pytest.raises(BudgetExceededError):
        folner_lamplighter(60, budget=10_000)
    with pytest.raises(BudgetExceededError):
        folner_zd(3, 40, budget=10_000)


def test_certificate_json():
    cert = verify_controlled(folner_zd(1, 3), 2)
    d = json.loads(cert.to_json())
    assert d["pass"] is True and d["C"] == 2.0 and d["C_exact"] == "2"
    assert [row["n"] for row in d["per_n"]] == [1, 2, 3]
    assert set(d["per_n"][0]) == {"n", "max_ratio", "containment"}


def test_sequence_file_round_trip(tmp_path):
    for F in (folner_zd(2, 5), folner_lamplighter(6)):
        write_folner_sequence(F, tmp_path / "F.txt")
        G = read_folner_sequence(tmp_path / "F.txt", F.group)
        assert G.sets == F.sets


# -- averaging ------------------------------------------------------------------


def test_average_of_zero_cocycle():
    v = average_cocycle(CocycleHandle.zero(Z), folner_zd(1, 6), 6)
    assert v.data == {}


def test_average_of_delta_coboundary_is_delta_minus_uniform():
    b = CocycleHandle.coboundary_of(Z, {(0,): 1})
    F = folner_zd(1, 10)
    for n in (1, 4, 10):
        h = n // 2
        v = average_cocycle(b, F, n)
        expected = {(k,): -Fraction(1, 2 * h + 1) for k in range(-h, h + 1)}
        expected[(0,)] += 1
        assert v == RegularRepVector(Z, expected)
    assert average_cocycle(b, F, 1).data == {}  # F_1 = {e}


@pytest.mark.parametrize("group,N", [(Z, 16), (Z2, 10), (LAMP, 7)], ids=str)
@pytest.mark.parametrize("p", [2, 4])
def test_almost_fixed_bound(group, N, p):
    F = folner_zd(group.rank, N) if group.kind == "zd" else folner_lamplighter(N)
    C = smallest_constant(F)
    b = CocycleHandle.coboundary_of(group, {group.identity: 1, group.generators[list(group.generators)[0]]: -2})
    for n in range(1, N + 1):
        disp = almost_fixed_displacement(b, F, n, p)
        bound = displacement_envelope(b, C, n, p)
        assert max(disp.values()) <= bound + 1e-10


def test_integer_displacement_exact_value():
    b = CocycleHandle.coboundary_of(Z, {(0,): 1})
    F = folner_zd(1, 32)
    for n in (4, 9, 32):
        h = n // 2
        disp = almost_fixed_displacement(b, F, n, 2)
        for v in disp.values():
            assert v == pytest.approx(math.sqrt(2) / (2 * h + 1), rel=1e-14)
    assert max_norm_in_ball(b, 5, 2) == pytest.approx(math.sqrt(2))


# -- P_n f ---------------------------------------------------------------------


def test_kernel_mass_and_gradient():
    g = build_cayley_ball(Z2, 8)
    F = folner_zd(2, 8)
    for n in (1, 3, 8):
        k = folner_kernel(F, n, g)
        assert math.fsum(k.values) == pytest.approx(1.0, abs=1e-15)
        assert np.max(np.abs(gradient(k, g).values)) <= 1 / len(F[n]) + 1e-18
    with pytest.raises(RegionError):
        folner_kernel(folner_zd(2, 12), 12, build_cayley_ball(Z2, 3))


def test_smoothing_constant_and_identity():
    g = build_cayley_ball(Z2, 10)
    f0 = np.full(g.num_vertices, 2.5)
    smooth, energy = convolve_approximation(f0, folner_zd(2, 6), 6, g, 3)
    assert np.allclose(smooth.values[smooth.domain], 2.5) and energy == 0
    rng = np.random.default_rng(0)
    f = rng.normal(size=g.num_vertices)
    single = FolnerSequence(Z2, (frozenset({Z2.identity}),))
    same, _ = convolve_approximation(f, single, 1, g, 2)
    assert np.array_equal(same.values, f) and same.domain.all()


def test_smoothing_error_controlled_by_gradient():
    g = build_cayley_ball(Z2, 14)
    F = folner_zd(2, 6)
    rng = np.random.default_rng(5)
    for p in (2, 3.5):
        f = rng.normal(size=g.num_vertices)
        grad = np.sum(np.abs(gradient(f, g).values) ** p) ** (1 / p)
        for n in range(1, 7):
            smooth, _ = convolve_approximation(f, F, n, g, p)
            mask = smooth.domain
            err = np.sum(np.abs(f[mask] - smooth.values[mask]) ** p) ** (1 / p)
            reach = max(Z2.word_length(y) for y in F[n])
            assert err <= reach * grad + 1e-12


def test_smoothing_needs_room():
    g = build_cayley_ball(Z, 3)
    with pytest.raises(RegionError):
        convolve_approximation(np.zeros(7), folner_zd(1, 20), 20, g, 2)
    with pytest.raises(ValueError):
        convolve_approximation(np.zeros(7), folner_zd(2, 2), 2, g, 2)


def test_sqrt_smoothing_energy_decreases():
    g = build_cayley_ball(Z, 2000)
    f = sqrt_signed(g)
    F = folner_zd(1, 64)
    energies = [convolve_approximation(f, F, n, g, 4)[1] for n in (8, 16, 32, 64)]
    for a, b in zip(energies, energies[1:]):
        assert b <= 1.05 * a
