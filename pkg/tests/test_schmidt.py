import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import recurrence_oracle
from r5lab.schmidt import (
    Lattice,
    LatticeError,
    RecurrenceCertificate,
    SchmidtExhausted,
    capital_a,
    descent_step,
    dual_lattice,
    f_avg,
    f_avg_forms,
    recurrence_search,
    schmidt_alternative,
    search_dual_recurrence,
    shortest_vector,
    theta,
    weyl_test,
)

THETA_Z = 1.0864348112133082


def theta_fixtures(rng, count=30):
    """Seeded (lattice, alpha, k, N) records with d <= 2, k <= 3, N <= 50."""
    out = []
    for i in range(count):
        d = 1 + i % 2
        basis = np.eye(d) + 0.3 * rng.normal(size=(d, d))
        while abs(np.linalg.det(basis)) < 0.3:
            basis = np.eye(d) + 0.3 * rng.normal(size=(d, d))
        out.append((Lattice(basis), rng.random(d), 1 + i % 3, int(rng.integers(1, 51))))
    return out


def test_dual_examples(rng):
    assert np.allclose(dual_lattice(Lattice.integer(3)).basis, np.eye(3))
    assert dual_lattice(Lattice([[2.0]])).basis[0, 0] == pytest.approx(0.5)
    lam = Lattice(np.eye(2) + 0.2 * rng.normal(size=(2, 2)))
    dual = dual_lattice(lam)
    for a in range(-2, 3):
        for b in range(-2, 3):
            for col in dual.basis.T:
                v = float(col @ lam.point([a, b]))
                assert abs(v - round(v)) <= 1e-9
    with pytest.raises(LatticeError):
        Lattice([[1.0, 2.0], [2.0, 4.0]])


def test_theta_examples():
    z = Lattice.integer(1)
    direct = sum(math.exp(-math.pi * m * m) for m in range(-10, 11))
    assert theta(z, 1.0) == pytest.approx(direct, abs=1e-12)
    assert theta(z, 1.0) == pytest.approx(THETA_Z, abs=1e-12)
    assert theta(z, 50.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        theta(z, 0.0)


def test_theta_poisson_on_z2(rng):
    z2 = Lattice.integer(2)
    for _ in range(5):
        x = rng.random(2)
        dual = sum(
            math.exp(-math.pi * (a * a + b * b)) * math.cos(2 * math.pi * (a * x[0] + b * x[1]))
            for a in range(-8, 9)
            for b in range(-8, 9)
        )
        assert theta(z2, 1.0, x) == pytest.approx(dual, abs=1e-8)


def test_capital_a_examples():
    assert capital_a(Lattice.integer(1)) == pytest.approx(THETA_Z, abs=1e-12)
    assert capital_a(Lattice.integer(2)) == pytest.approx(THETA_Z**2, abs=1e-12)
    two = capital_a(Lattice([[2.0]]))
    quarter = sum(math.exp(-math.pi * k * k / 4) for k in range(-30, 31))
    cross = 2 * sum(math.exp(-math.pi * (2 * k) ** 2) for k in range(-10, 11))
    assert two == pytest.approx(quarter, abs=1e-10)
    assert two == pytest.approx(cross, abs=1e-10)
    # the series evaluates to 2.0000139..., not the 1.91 sometimes quoted
    assert two == pytest.approx(2.0000139493694244, abs=1e-12)


def test_f_avg_examples():
    z = Lattice.integer(1)
    assert f_avg(z, [0.0], 2, 7) == pytest.approx(capital_a(z), abs=1e-10)
    three = (theta(z, 1.0) + 2 * theta(z, 1.0, [0.5])) / 3
    assert f_avg(z, [0.5], 1, 1) == pytest.approx(three, abs=1e-12)


def test_f_avg_poisson_z2(rng):
    p, d = f_avg_forms(Lattice.integer(2), rng.random(2), 3, 20)
    assert abs(p - d) <= 1e-7


def test_f_avg_poisson_fixtures(rng):
    for lam, alpha, k, n in theta_fixtures(rng):
        p, d = f_avg_forms(lam, alpha, k, n, tol=1e-10)
        assert abs(p - d) <= 1e-7
        p2, _ = f_avg_forms(lam, alpha, k, n, tol=1e-11)
        assert abs(p - p2) <= 1e-10


def test_contraction_and_dilation(rng):
    for lam, alpha, k, n in theta_fixtures(rng):
        f = f_avg(lam, alpha, k, n)
        for c in (0.2, 0.5):
            assert f >= (c / 2) * f_avg(lam, alpha, k, c * n) - 1e-12
        for q in (2, 3):
            if q <= n:
                assert f >= f_avg(lam, q**k * alpha, k, n / q) / (4 * q) - 1e-12


def test_a_and_shortest_vector_floor(rng):
    for lam, *_ in theta_fixtures(rng, 10):
        a = capital_a(lam)
        assert a >= 1
        assert shortest_vector(dual_lattice(lam)) >= 1 / (2 * a)


def test_shape_floor_on_integer_lattices(rng):
    c = 3.0
    for d in (1, 2):
        lam = Lattice.integer(d)
        floor = d ** (-c * d * d) * capital_a(lam) ** (-c * d)
        for _ in range(3):
            assert f_avg(lam, rng.random(d), 2, 30) >= floor


def test_weyl_examples():
    r = weyl_test([0, 0, 0, Fraction(1, 7)], 0.05, 70)
    assert r.precondition and r.ell == 7 and r.norm == 0
    assert not r.regime
    assert weyl_test([0], 0.05, 10).ell == 1
    half = weyl_test([0, Fraction(1, 2)], 0.05, 10, c=0.1)
    assert half.ell == 2 and half.norm == 0
    # (-1)^n averages to zero over an even range
    assert not half.precondition


def test_schmidt_alternative_examples():
    z = Lattice.integer(1)
    assert schmidt_alternative(z, [0.0], 1, 100).branch == "average"
    # F stays near 1 here, so the first branch fires
    assert schmidt_alternative(z, [Fraction(1, 3)], 1, 100, q_max=3).branch == "average"
    val, q, coords, xi = search_dual_recurrence(z, [1 / 3], 3, 1.0)
    assert (val, q, coords) == (0.0, 3, (1,))
    cert = schmidt_alternative(Lattice.integer(2), (math.sqrt(2) - 1, math.sqrt(3) - 1), 2, 50)
    assert cert.branch == "average"
    assert cert.value == pytest.approx(0.9892384494883497, abs=1e-10)


def test_second_branch_certificate_checks():
    z2 = Lattice.integer(2)
    alpha = [0.3, 0.5001]
    good = RecurrenceCertificate("recurrence", abs(0.5001 - 1), 1, (0.0, 1.0), (0, 1))
    assert good.check(z2, alpha, 1, 100)
    assert not RecurrenceCertificate("recurrence", 0.4999, 1, (0.0, 2.0), (0, 2)).check(z2, alpha, 1, 100)
    assert not RecurrenceCertificate("recurrence", 0.1, 1, (0.0, 1.0), (0, 1)).check(z2, alpha, 1, 100)
    err = SchmidtExhausted("x", good)
    assert err.best is good


def test_descent_fixture():
    z2 = Lattice.integer(2)
    cert = RecurrenceCertificate("recurrence", abs(0.5001 - 1), 1, (0.0, 1.0), (0, 1))
    r = descent_step(z2, [0.3, 0.5001], 1, 100, cert)
    assert np.allclose(r.beta, [0.3, 1.0])
    assert r.lattice.dim == 1 and r.lattice.det == pytest.approx(1.5)
    assert np.allclose(r.alpha, [0.45])
    assert r.n_star == pytest.approx(1 / (2 * 0.4999), rel=1e-12)
    assert not r.degenerate and r.b4_holds


def test_descent_one_dimensional_and_errors():
    z = Lattice.integer(1)
    cert = RecurrenceCertificate("recurrence", 0.0, 3, (1.0,), (1,))
    r = descent_step(z, [Fraction(1, 3)], 1, 100, cert)
    assert r.lattice is None and r.n_prime == pytest.approx(100 / 3)
    with pytest.raises(ValueError):
        descent_step(z, [0.5], 1, 10, RecurrenceCertificate("average", 1.0))


def test_recurrence_examples():
    r = recurrence_search([Fraction(1, 2)], 3, 4)
    assert (r.n_star, r.value) == (2, 0)
    assert recurrence_search([0, 0], 2, 10).n_star == 1
    pinned = recurrence_search([math.sqrt(2) - 1, math.e - 2], 2, 1000)
    assert pinned.n_star == 775
    assert pinned.value == Fraction(52282769863961, 2251799813685248)
    assert pinned.bound_holds


def recurrence_fixtures(rng, count=20):
    out = []
    for i in range(count):
        d = 1 + i % 3
        alphas = [Fraction(int(rng.integers(1, 10**6)), int(rng.integers(10**6, 10**7))) for _ in range(d)]
        out.append((alphas, 1 + (i // 3) % 3, int(rng.integers(50, 2001))))
    return out


def test_recurrence_matches_oracle(rng):
    for alphas, k, n in recurrence_fixtures(rng):
        r = recurrence_search(alphas, k, n)
        assert (r.n_star, r.value) == recurrence_oracle(alphas, k, n)


def test_recurrence_monotone_in_n(rng):
    alphas = [float(x) for x in rng.random(2)]
    vals = [recurrence_search(alphas, 2, n).value for n in (10, 50, 200, 800)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_recurrence_errors():
    with pytest.raises(ValueError):
        recurrence_search([0.1], 1, 0)
    with pytest.raises(ValueError):
        recurrence_search([], 1, 5)
    with pytest.raises(ValueError):
        recurrence_search([0.1], 1, 100, cap=50)
