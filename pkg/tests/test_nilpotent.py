import math
from fractions import Fraction

import numpy as np
import pytest

from r5lab.cyclic import frac_norm
from r5lab.nilpotent import (
    NilAlgebra,
    PolySeq3,
    bch_log_product,
    bracket,
    circle_partition_of_unity,
    evaluate_forms,
    fourier_approx_torus,
    from_second_kind,
    inverse,
    load_fixture,
    multiplication_forms,
    poly_seq_log,
    power,
    reduce_to_lattice,
    rescale_basis,
    second_kind,
)


def _rat(rng, d, den=7, top=20):
    return tuple(Fraction(int(rng.integers(-top, top + 1)), int(rng.integers(1, den + 1))) for _ in range(d))


def _int(rng, d, top=9):
    return tuple(Fraction(int(v)) for v in rng.integers(-top, top + 1, size=d))


def test_fixtures_load_and_round_trip():
    for name in ("abelian", "heisenberg", "heisenberg12", "free_step3", "free_step3_x12"):
        alg = load_fixture(name)
        assert NilAlgebra.from_json(alg.to_json()) == alg


def test_validation_rejects_bad_constants():
    with pytest.raises(ValueError):
        NilAlgebra(3, 2, [2, 3, 3], {(2, 1, 0): Fraction(1)})
    with pytest.raises(ValueError):
        # [X1,X2] must land strictly above level 1 under this filtration
        NilAlgebra(3, 2, [3, 3, 3], {(0, 1, 2): Fraction(1)})


def test_bracket_examples(rng):
    h = load_fixture("heisenberg")
    assert bracket(h, h.unit(0), h.unit(0)) == h.zero()
    assert bracket(h, h.unit(0), h.unit(1)) == h.unit(2)
    f = load_fixture("free_step3")
    for _ in range(20):
        x, y, z = (_rat(rng, 5) for _ in range(3))
        terms = [bracket(f, a, bracket(f, b, c)) for a, b, c in ((x, y, z), (y, z, x), (z, x, y))]
        assert tuple(sum(t) for t in zip(*terms)) == f.zero()


def test_bch_examples(rng):
    h = load_fixture("heisenberg")
    assert bch_log_product(h, h.unit(0), h.unit(1)) == (1, 1, Fraction(1, 2))
    f = load_fixture("free_step3")
    x = _rat(rng, 5)
    assert bch_log_product(f, x, tuple(-t for t in x)) == f.zero()
    assert bch_log_product(f, x, f.zero()) == x


def test_group_laws(rng):
    for name in ("free_step3", "heisenberg12"):
        alg = load_fixture(name)
        for _ in range(100):
            x, y, z = (_rat(rng, alg.dim) for _ in range(3))
            assert bch_log_product(alg, bch_log_product(alg, x, y), z) == bch_log_product(
                alg, x, bch_log_product(alg, y, z)
            )
            assert bch_log_product(alg, x, inverse(alg, x)) == alg.zero()
            assert bch_log_product(alg, alg.zero(), x) == x


def test_abelian_adds(rng):
    a = load_fixture("abelian")
    x, y = _rat(rng, 3), _rat(rng, 3)
    assert bch_log_product(a, x, y) == tuple(s + t for s, t in zip(x, y))


def test_heisenberg12_product():
    h = load_fixture("heisenberg12")
    assert bch_log_product(h, (1, 0, 0), (0, 1, 0)) == (1, 1, 6)


def test_lattice_closure(rng):
    for name in ("heisenberg12", "free_step3_x12"):
        alg = load_fixture(name)
        for _ in range(100):
            z = bch_log_product(alg, _int(rng, alg.dim), _int(rng, alg.dim))
            assert all(v.denominator == 1 for v in z)


def test_non_scaled_algebra_leaves_lattice():
    f = load_fixture("free_step3")
    z = bch_log_product(f, (1, 0, 0, 0, 0), (0, 1, 0, 0, 0))
    assert any(v.denominator != 1 for v in z)


def test_forms_integral_and_match_bch(rng):
    alg = load_fixture("free_step3_x12")
    forms = multiplication_forms(alg, require_integral=True)
    assert forms.all_integral()
    for _ in range(100):
        x, y = _int(rng, 5), _int(rng, 5)
        assert evaluate_forms(alg, forms, x, y) == bch_log_product(alg, x, y)
    with pytest.raises(ValueError):
        multiplication_forms(load_fixture("free_step3"), require_integral=True)


def test_forms_vanish_on_level_two_box():
    alg = load_fixture("free_step3_x12")
    forms = multiplication_forms(alg)
    d1, d2, _ = alg.filtration
    for k in range(d1, d2):
        assert all(i < d1 and j < d1 for (i, j) in forms.bilinear[k])


def test_second_kind_round_trip(rng):
    alg = load_fixture("free_step3")
    for _ in range(50):
        p = _rat(rng, 5)
        assert from_second_kind(alg, second_kind(alg, p)) == p


def test_reduce_to_lattice(rng):
    alg = load_fixture("free_step3_x12")
    g0, z0 = reduce_to_lattice(alg, alg.zero())
    assert g0 == alg.zero() and z0 == alg.zero()
    p = _int(rng, 5)
    g, z = reduce_to_lattice(alg, p)
    assert z == alg.zero() and g == inverse(alg, p)
    for _ in range(200):
        p = _rat(rng, 5)
        g, z = reduce_to_lattice(alg, p)
        assert all(v.denominator == 1 for v in g)
        assert all(-Fraction(1, 2) <= v < Fraction(1, 2) for v in z)
        assert bch_log_product(alg, z, inverse(alg, g)) == p
    with pytest.raises(ValueError):
        reduce_to_lattice(load_fixture("heisenberg"), (Fraction(1, 3), 0, 0))


def test_rescale_examples(rng):
    half = NilAlgebra(3, 2, [2, 3, 3], {(0, 1, 2): Fraction(1, 2)})
    out = rescale_basis(half, 12, 2)
    assert out.constants()[(0, 1, 2)] == 144
    assert all(v % 12 == 0 for v in rescale_basis(load_fixture("free_step3"), 1, 1).constants().values())
    for _ in range(5):
        cs = {key: Fraction(int(rng.integers(-6, 7)) or 1, int(rng.integers(1, 7))) for key in ((0, 1, 2), (0, 2, 3), (1, 2, 4))}
        alg = NilAlgebra(5, 3, [2, 3, 5], cs)
        k = int(rng.integers(1, 5))
        assert rescale_basis(alg, k, 6).integral_divisible_by(12 * k)
    with pytest.raises(ValueError):
        rescale_basis(half, 1, 1)


def _seq(rng, alg):
    d1, d2, d = alg.filtration
    a = _rat(rng, d)
    b = tuple(Fraction(0) if i < d1 else v for i, v in enumerate(_rat(rng, d)))
    c = tuple(Fraction(0) if i < d2 else v for i, v in enumerate(_rat(rng, d)))
    return PolySeq3(a, b, c)


def _iterated(alg, seq, n):
    out = power(alg, seq.log_g1, n)
    out = bch_log_product(alg, out, power(alg, seq.log_g2, n * (n - 1) // 2))
    return bch_log_product(alg, out, power(alg, seq.log_g3, n * (n - 1) * (n - 2) // 6))


def test_poly_seq_examples_and_oracle(rng):
    alg = load_fixture("free_step3")
    seq = _seq(rng, alg)
    assert poly_seq_log(alg, seq, 0) == alg.zero()
    assert poly_seq_log(alg, seq, 1) == seq.log_g1
    for n in range(-20, 21):
        assert poly_seq_log(alg, seq, n) == _iterated(alg, seq, n)
    with pytest.raises(ValueError):
        poly_seq_log(alg, PolySeq3(seq.log_g1, seq.log_g1, seq.log_g3), 2)


def test_poly_seq_degree_bounds(rng):
    alg = load_fixture("free_step3")
    d1, d2, _ = alg.filtration
    for _ in range(10):
        seq = _seq(rng, alg)
        vals = [poly_seq_log(alg, seq, n) for n in range(5)]
        for j in range(alg.dim):
            bound = 1 if j < d1 else 2 if j < d2 else 3
            col = [v[j] for v in vals]
            # forward differences of order bound + 1 vanish on 0..4
            for _ in range(bound + 1):
                col = [b - a for a, b in zip(col, col[1:])]
            assert all(c == 0 for c in col)


def test_fourier_constant_and_cos():
    c = fourier_approx_torus(np.full(64, 0.3), 0.0, 0.01)
    assert list(c.coefficients) == [(0,)] and c.certified_error == pytest.approx(0, abs=1e-12)
    x = np.arange(1024) / 1024
    cos = fourier_approx_torus(np.cos(2 * np.pi * x), 2 * np.pi, 0.05)
    assert set(cos.coefficients) == {(1,), (-1,)}
    assert cos.cutoff == 503 and cos.certified_error <= 0.05
    assert cos.coefficients[(1,)].real == pytest.approx(0.5 * (1 - 1 / 504))


def test_fourier_frac_norm_pinned():
    g = 1024
    samples = [float(frac_norm(Fraction(i, g))) for i in range(g)]
    res = fourier_approx_torus(samples, 1.0, 0.05)
    assert res.cutoff == 80
    assert res.certified_error <= 0.05
    xs = np.random.default_rng(3).random(500)
    direct = np.minimum(xs % 1, 1 - xs % 1)
    assert np.max(np.abs(res.evaluate(xs[:, None]).real - direct)) <= res.certified_error


def test_fourier_two_dimensional_and_errors():
    g = 256
    x = np.arange(g) / g
    grid = np.cos(2 * np.pi * (x[:, None] + x[None, :]))
    res = fourier_approx_torus(grid, 4 * np.pi, 0.1)
    assert res.certified_error <= 0.1
    with pytest.raises(ArithmeticError):
        fourier_approx_torus(np.cos(2 * np.pi * np.arange(16) / 16), 2 * np.pi, 1e-4)
    with pytest.raises(ValueError):
        fourier_approx_torus(np.zeros((4, 4, 4)), 1.0, 0.1)


def test_partition_of_unity(rng):
    for m in (2, 7):
        bumps = circle_partition_of_unity(m)
        xs = rng.random(1000)
        total = sum(b(xs) for b in bumps)
        assert np.max(np.abs(total - 1)) <= 1e-12
        assert all(np.all(b(xs) >= 0) for b in bumps)
    with pytest.raises(ValueError):
        circle_partition_of_unity(1)


def test_partition_of_unity_thousand_support_edges():
    m = 1000
    bumps = circle_partition_of_unity(m)
    for b in bumps[::37] + [bumps[-1]]:
        lo, hi = b.support()
        inside = float(lo) + np.array([1e-9, 0.5 / m, 1.0 / m, 1.5 / m])
        outside = float(hi) + np.array([0.0, 1e-9, 0.25, 0.5])
        assert np.all(b(outside % 1) == 0)
        assert b(inside[1:]).min() > 0
        assert math.isclose(float(b(float(lo) + 1.0 / m)), 1.0)
