from fractions import Fraction

import numpy as np
import pytest

from r5lab.partitioner import (
    CubicPhaseOnProgression,
    Progression,
    WindowOverflow,
    covers_exactly,
    cut_by_window,
    partition_by_linear,
    polynomial_range,
    reduce_degree_partition,
    window_member,
)


def _frac_dist(x):
    x = x % 1
    return min(x, 1 - x)


def _linear_variation(piece, alpha):
    xs = [Fraction(int(x)) for x in piece.elements()]
    return max(_frac_dist(alpha * (a - b)) for a in xs for b in xs)


def _scan_variation(piece, phase, parent):
    """max - min of the piece's residual along v, against the parent phase."""
    worst = 0
    for i, ph in enumerate(phase):
        vals = [piece.value(i, v) for v in range(piece.progression.length)]
        t0 = (piece.progression.base - parent.base) // parent.step
        stride = piece.progression.step // parent.step if piece.progression.length > 1 else 1
        for v, val in enumerate(vals):
            assert val == ph.value(t0 + stride * v)
        resid = [float(piece.kappas[i] + sum(c * v**e for e, c in enumerate(piece.residuals[i]))) for v in range(len(vals))]
        worst = max(worst, max(resid) - min(resid))
    return worst


def test_progression_basics():
    p = Progression(3, 2, 4)
    assert list(p.elements()) == [3, 5, 7, 9]
    assert p.sub(1, 2, 2) == Progression(5, 4, 2)
    with pytest.raises(ValueError):
        Progression(0, 1, 0)
    with pytest.raises(ValueError):
        Progression(0, 0, 3)


def test_linear_examples():
    t = Progression(0, 1, 10)
    assert partition_by_linear(t, [], 0.1) == [t]
    pieces = partition_by_linear(t, [Fraction(1, 2)], 0.1)
    assert len(pieces) == 2 and covers_exactly(pieces, range(10))
    assert all(_linear_variation(p, Fraction(1, 2)) == 0 for p in pieces)


def test_linear_two_phases():
    t = Progression(0, 1, 100)
    phases = [Fraction(1, 3), Fraction(1, 5)]
    pieces = partition_by_linear(t, phases, 0.05)
    assert covers_exactly(pieces, range(100))
    for p in pieces:
        for a in phases:
            assert _linear_variation(p, a) < 0.05


def test_linear_irrational_phase():
    t = Progression(7, 3, 150)
    alpha = Fraction(2**0.5)
    pieces = partition_by_linear(t, [alpha], 0.1)
    assert covers_exactly(pieces, t.elements())
    assert all(_linear_variation(p, alpha) < 0.1 for p in pieces)


def test_reduce_constant_cubics():
    t = Progression(0, 1, 30)
    ph = CubicPhaseOnProgression(0, 0, 0, Fraction(1, 3))
    pieces = reduce_degree_partition(t, [ph], 0.05)
    assert len(pieces) == 1 and pieces[0].kappas == [Fraction(1, 3)]
    assert pieces[0].variations == [0.0]


def test_reduce_eighth_cubic():
    t = Progression(0, 1, 64)
    ph = CubicPhaseOnProgression(Fraction(1, 8), 0, 0, 0)
    pieces = reduce_degree_partition(t, [ph], 0.05)
    assert covers_exactly([p.progression for p in pieces], range(64))
    # round three uses r = 2; later rounds may refine the classes further
    assert all(p.progression.step % 2 == 0 for p in pieces if p.progression.length > 1)
    for p in pieces:
        assert _scan_variation(p, [ph], t) < 0.05


def partitioner_fixture(rng, i):
    length = int(rng.integers(20, 201))
    t = Progression(int(rng.integers(-50, 50)), int(rng.integers(1, 5)), length)
    phases = [
        CubicPhaseOnProgression(*[Fraction(int(rng.integers(0, 97)), 97) for _ in range(4)])
        for _ in range(1 + i % 2)
    ]
    return t, phases


def check_partitioner_fixture(t, phases, eps=0.05, k=8):
    """Cover, variation and window checks for one fixture; returns retained runs."""
    pieces = reduce_degree_partition(t, phases, eps)
    assert covers_exactly([p.progression for p in pieces], t.elements())
    assert len(pieces) <= t.length
    for p in pieces:
        assert _scan_variation(p, phases, t) < eps
        assert max(p.variations) < eps
    kept = cut_by_window(pieces, (3, k))
    truth = set()
    for p in pieces:
        t0 = (p.progression.base - t.base) // t.step
        stride = p.progression.step // t.step if p.progression.length > 1 else 1
        for v, x in enumerate(p.progression.elements()):
            if window_member(phases[0].value(t0 + stride * v), 3, k):
                truth.add(int(x))
    got = [int(x) for r in kept for x in r.elements()]
    assert sorted(got) == sorted(truth) and len(got) == len(truth)
    return kept


def test_reduce_random_fixtures(rng):
    for i in range(20):
        t, phases = partitioner_fixture(rng, i)
        check_partitioner_fixture(t, phases)


def test_polynomial_range():
    assert polynomial_range([0, 1], 5) == 4
    assert polynomial_range([3], 10) == 0
    assert polynomial_range([0, -1, 1], 3) == pytest.approx(2)


def test_window_member_edges():
    assert window_member(Fraction(1, 16), 0, 8)
    assert window_member(Fraction(-1, 16), 0, 8)
    assert not window_member(Fraction(1, 15), 0, 8)
    assert window_member(Fraction(0), 0, 8, Fraction(1, 32))


def test_cut_inside_outside_and_ramp():
    t = Progression(0, 1, 40)
    inside = cut_by_window([t], (0, 4), membership=lambda x: np.ones(x.size, bool))
    assert inside == [t]
    assert cut_by_window([t], (0, 4), membership=lambda x: np.zeros(x.size, bool)) == []
    ramp = lambda x: np.array([window_member(Fraction(int(v) * (40 - int(v)), 1600), 0, 4) for v in x])
    kept = cut_by_window([t], (0, 4), membership=ramp)
    assert len(kept) == 2
    assert [int(x) for r in kept for x in r.elements()] == [int(x) for x in t.elements() if ramp([x])[0]]


def test_cut_overflow():
    t = Progression(0, 1, 20)
    with pytest.raises(WindowOverflow):
        cut_by_window([t], (0, 4), membership=lambda x: x % 2 == 0)


def test_integer_polynomial_phase_matches_direct():
    prog = Progression(5, 3, 40)
    ph = CubicPhaseOnProgression.from_integer_polynomial([4, 7, 2, 9], 101, prog, Fraction(1, 1000))
    for t in range(40):
        x = 5 + 3 * t
        assert ph.value(t) == (Fraction(4 + 7 * x + 2 * x * x + 9 * x**3, 101) + Fraction(1, 1000)) % 1


def test_caps_and_eps():
    with pytest.raises(ValueError):
        partition_by_linear(Progression(0, 1, 50), [0.3], 0.1, cap=10)
    with pytest.raises(ValueError):
        reduce_degree_partition(Progression(0, 1, 5), [], 1.5)
