import numpy as np
import pytest

from oracles import gowers_power_oracle
from r5lab.apcount import lift
from r5lab.cyclic import CyclicFunction, dft
from r5lab.gowers import (
    WorkCapExceeded,
    add_derivative,
    mult_derivative,
    mult_derivative_vector,
    u_norm,
    u_norm_power,
    u_norm_sampled,
)
from fractions import Fraction


def _rand(rng, n, bounded=True):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return CyclicFunction(v / np.abs(v).max() if bounded else v)


def test_mult_derivative_examples(rng):
    n = 12
    assert np.allclose(mult_derivative(CyclicFunction.constant(n), 5).values, 1)
    ph = CyclicFunction.polynomial_phase(n, [0, 1])
    d = mult_derivative(ph, 3)
    assert np.allclose(d.values, np.exp(-2j * np.pi * 3 / n))
    f = _rand(rng, n)
    a = mult_derivative(mult_derivative(f, 2), 7)
    b = mult_derivative(mult_derivative(f, 7), 2)
    assert np.array_equal(a.values, b.values) or np.allclose(a.values, b.values, atol=0, rtol=1e-15)
    assert np.allclose(mult_derivative_vector(f, [2, 7]).values, a.values)


def test_add_derivative_examples():
    n = 5
    const = {x: Fraction(2, 5) for x in range(n)}
    assert all(v == 0 for v in add_derivative(const, 1, n).values())
    lin = {x: Fraction(3 * x, n) for x in range(n)}
    assert set(add_derivative(lin, 2, n).values()) == {Fraction(-6, 5) % 1}
    sq = {x: Fraction(x * x, n) % 1 for x in range(n)}
    d = add_derivative(sq, 1, n)
    assert d == {x: Fraction(-(2 * x + 1), 5) % 1 for x in range(n)}
    partial = {0: Fraction(0), 1: Fraction(1, 5), 3: Fraction(0)}
    assert set(add_derivative(partial, 1, n)) == {0}


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_constant_and_point_mass(k):
    n = 7
    assert u_norm(CyclicFunction.constant(n), k) == pytest.approx(1)
    pt = CyclicFunction.indicator(n, [0])
    assert u_norm(pt, k) == pytest.approx(n ** (-(k + 1) / 2**k), rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_polynomial_phase_has_norm_one(k, rng):
    coeffs = [int(c) for c in rng.integers(0, 7, size=k)]
    f = CyclicFunction.polynomial_phase(7, coeffs)
    assert u_norm(f, k) == pytest.approx(1, abs=1e-12)


def test_pm1_on_z8_matches_oracle(rng):
    f = CyclicFunction(rng.choice([-1.0, 1.0], size=8))
    ref = gowers_power_oracle(list(f.values), 3)
    for method in ("direct", "recursive", "auto"):
        assert u_norm_power(f, 3, method=method) == pytest.approx(ref.real, abs=1e-12)


@pytest.mark.parametrize("n,k", [(5, 1), (6, 2), (7, 3), (5, 4)])
def test_paths_agree_with_oracle(n, k, rng):
    f = _rand(rng, n)
    ref = gowers_power_oracle(list(f.values), k).real
    for method in ("direct", "recursive"):
        assert abs(u_norm_power(f, k, method=method) - ref) <= 1e-10


@pytest.mark.parametrize("k", [2, 3, 4])
def test_support_path_matches_recursive(k, rng):
    m, n = 6, 37
    f = lift(rng.random(m), n)
    a = u_norm_power(f, k, method="support")
    b = u_norm_power(f, k, method="recursive")
    assert abs(a - b) <= 1e-12


def test_u2_fourier_identity(rng):
    for n in (16, 31, 64):
        f = _rand(rng, n)
        assert abs(u_norm_power(f, 2) - np.sum(np.abs(dft(f).values) ** 4)) <= 1e-9


def test_phase_invariance_and_scaling(rng):
    n = 11
    f = _rand(rng, n)
    for k in (2, 3):
        ph = CyclicFunction.polynomial_phase(n, [int(c) for c in rng.integers(0, n, size=k)])
        assert u_norm(f * ph, k) == pytest.approx(u_norm(f, k), abs=1e-10)
        assert u_norm(CyclicFunction(2.5 * f.values), k) == pytest.approx(2.5 * u_norm(f, k), rel=1e-12)


def test_errors():
    f = CyclicFunction.constant(10)
    with pytest.raises(ValueError):
        u_norm(f, 0)
    with pytest.raises(WorkCapExceeded):
        u_norm(f, 3, method="direct", work_cap=100)


def test_sampled_estimator_is_rough(rng):
    f = CyclicFunction.constant(13)
    assert u_norm_sampled(f, 2, 200, rng) == pytest.approx(1)
