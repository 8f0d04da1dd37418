"""Exact arithmetic in nilpotent Lie algebras of step at most 3.

Indices are 0-based in code and 1-based in fixture files, whose constants
are rows [i, j, k, p, q] meaning [X_i, X_j] has coefficient p/q on X_k.
Group elements are stored by first-kind coordinates (log over the basis);
the group law is the truncated Baker-Campbell-Hausdorff series, which is
exact at step 3.  No floating point is used outside the torus helpers at
the end of the module.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

__all__ = [
    "NilAlgebra",
    "PolySeq3",
    "MultiplicationForms",
    "FourierApprox",
    "CircleBump",
    "C3",
    "bracket",
    "bch_log_product",
    "mul_first_kind",
    "inverse",
    "power",
    "multiplication_forms",
    "evaluate_forms",
    "second_kind",
    "from_second_kind",
    "reduce_to_lattice",
    "rescale_basis",
    "poly_seq_log",
    "fourier_approx_torus",
    "circle_partition_of_unity",
    "load_fixture",
    "FIXTURE_DIR",
]

C3 = 12
FIXTURE_DIR = Path(__file__).with_name("fixtures")

Vec = Tuple[Fraction, ...]


def _vec(x, d: int) -> Vec:
    v = tuple(Fraction(t) for t in x)
    if len(v) != d:
        raise ValueError(f"expected {d} coordinates, got {len(v)}")
    return v


class NilAlgebra:
    """Structure constants c[i][j][k] of [X_i, X_j] = sum_k c_ijk X_k."""

    def __init__(self, dimension: int, degree: int, filtration_dims: Sequence[int], constants: Dict[tuple, Fraction]):
        d = int(dimension)
        if d < 1:
            raise ValueError("dimension must be positive")
        if degree < 1 or degree > 3:
            raise ValueError("degree must be 1, 2 or 3")
        fd = tuple(int(t) for t in filtration_dims)
        if len(fd) != 3 or not (0 < fd[0] <= fd[1] <= fd[2] == d):
            raise ValueError("filtration dims must satisfy 0 < d1 <= d2 <= d3 = d")
        c = [[[Fraction(0)] * d for _ in range(d)] for _ in range(d)]
        for (i, j, k), v in constants.items():
            v = Fraction(v)
            if v == 0:
                continue
            if i == j:
                raise ValueError("[X_i, X_i] must vanish")
            if c[i][j][k] not in (0, v) or c[j][i][k] not in (0, -v):
                raise ValueError(f"inconsistent constants at {(i, j, k)}")
            c[i][j][k] = v
            c[j][i][k] = -v
        self.dim = d
        self.degree = degree
        self.filtration = fd
        self.c = c
        self._validate()

    # construction helpers -------------------------------------------------
    def level(self, i: int) -> int:
        """1, 2 or 3: the filtration step whose new directions contain X_i."""
        d1, d2, _ = self.filtration
        return 1 if i < d1 else (2 if i < d2 else 3)

    def _validate(self):
        d = self.dim
        dims = (0,) + self.filtration
        for i, j, k in itertools.product(range(d), repeat=3):
            v = self.c[i][j][k]
            if v == 0:
                continue
            if k <= max(i, j):
                raise ValueError(f"c[{i}][{j}][{k}] != 0 but k <= max(i, j)")
            a, b = self.level(i) - 1, self.level(j) - 1
            idx = a + b + 1
            if idx >= 3 or k < dims[idx]:
                raise ValueError(f"constant c[{i}][{j}][{k}] violates the filtration")
        basis = [self.unit(i) for i in range(d)]
        zero = self.zero()
        for x, y, z in itertools.combinations(basis, 3):
            s = _add(_add(bracket(self, x, bracket(self, y, z)), bracket(self, y, bracket(self, z, x))), bracket(self, z, bracket(self, x, y)))
            if s != zero:
                raise ValueError("Jacobi identity fails")
        for w, x, y, z in itertools.product(basis, repeat=4):
            if bracket(self, w, bracket(self, x, bracket(self, y, z))) != zero:
                raise ValueError("four-fold brackets must vanish (step <= 3)")

    def zero(self) -> Vec:
        return (Fraction(0),) * self.dim

    def unit(self, i: int, t=1) -> Vec:
        v = [Fraction(0)] * self.dim
        v[i] = Fraction(t)
        return tuple(v)

    def constants(self) -> Dict[tuple, Fraction]:
        d = self.dim
        return {(i, j, k): self.c[i][j][k] for i in range(d) for j in range(i + 1, d) for k in range(d) if self.c[i][j][k]}

    def integral_divisible_by(self, m: int) -> bool:
        return all(v.denominator == 1 and v.numerator % m == 0 for v in self.constants().values())

    def to_json(self) -> dict:
        return {
            "dimension": self.dim,
            "degree": self.degree,
            "filtration_dims": list(self.filtration),
            "constants": [[i + 1, j + 1, k + 1, v.numerator, v.denominator] for (i, j, k), v in sorted(self.constants().items())],
        }

    @classmethod
    def from_json(cls, d: dict) -> "NilAlgebra":
        consts = {}
        for row in d.get("constants", []):
            i, j, k, p, q = (int(t) for t in row)
            consts[(i - 1, j - 1, k - 1)] = Fraction(p, q)
        return cls(d["dimension"], d["degree"], d["filtration_dims"], consts)

    def __eq__(self, other):
        return isinstance(other, NilAlgebra) and self.to_json() == other.to_json()

    def __repr__(self):
        return f"NilAlgebra(d={self.dim}, degree={self.degree}, filtration={self.filtration})"


def load_fixture(name: str) -> NilAlgebra:
    path = Path(name)
    if not path.exists():
        path = FIXTURE_DIR / f"{name}.json"
    return NilAlgebra.from_json(json.loads(path.read_text()))


def _add(x: Vec, y: Vec) -> Vec:
    return tuple(a + b for a, b in zip(x, y))


def _scale(t, x: Vec) -> Vec:
    t = Fraction(t)
    return tuple(t * a for a in x)


def bracket(alg: NilAlgebra, x, y) -> Vec:
    d = alg.dim
    x = _vec(x, d)
    y = _vec(y, d)
    out = [Fraction(0)] * d
    for i in range(d):
        if x[i] == 0:
            continue
        row = alg.c[i]
        for j in range(d):
            if y[j] == 0:
                continue
            w = x[i] * y[j]
            for k in range(max(i, j) + 1, d):
                if row[j][k]:
                    out[k] += w * row[j][k]
    return tuple(out)


def bch_log_product(alg: NilAlgebra, x, y) -> Vec:
    """log(e^X e^Y) = X + Y + [X,Y]/2 + ([X,[X,Y]] - [Y,[X,Y]])/12."""
    d = alg.dim
    x = _vec(x, d)
    y = _vec(y, d)
    xy = bracket(alg, x, y)
    third = _add(bracket(alg, x, xy), _scale(-1, bracket(alg, y, xy)))
    return _add(_add(_add(x, y), _scale(Fraction(1, 2), xy)), _scale(Fraction(1, 12), third))


mul_first_kind = bch_log_product


def inverse(alg: NilAlgebra, x) -> Vec:
    return _scale(-1, _vec(x, alg.dim))


def power(alg: NilAlgebra, x, n: int) -> Vec:
    """x^n by repeated multiplication (an oracle; equals n x)."""
    x = _vec(x, alg.dim)
    if n < 0:
        x, n = inverse(alg, x), -n
    acc = alg.zero()
    for _ in range(n):
        acc = bch_log_product(alg, acc, x)
    return acc


# multiplication forms ----------------------------------------------------------

@dataclass
class MultiplicationForms:
    """z_k = x_k + y_k + bilinear_k(x, y) + cubic_k(x, y).

    ``bilinear[k]`` maps (i, j) to the coefficient of x_i y_j; ``cubic[k]``
    maps a monomial, a sorted tuple of ('x'|'y', index) factors, to its
    coefficient.
    """

    bilinear: List[Dict[tuple, Fraction]]
    cubic: List[Dict[tuple, Fraction]]

    def coefficients(self):
        for f in self.bilinear:
            yield from f.values()
        for f in self.cubic:
            yield from f.values()

    def all_integral(self) -> bool:
        return all(v.denominator == 1 for v in self.coefficients())


def multiplication_forms(alg: NilAlgebra, require_integral: bool = False) -> MultiplicationForms:
    d = alg.dim
    d1, d2, _ = alg.filtration
    c = alg.c
    bil: List[Dict[tuple, Fraction]] = [dict() for _ in range(d)]
    cub: List[Dict[tuple, Fraction]] = [dict() for _ in range(d)]
    for i, j, k in itertools.product(range(d), repeat=3):
        if c[i][j][k]:
            bil[k][(i, j)] = bil[k].get((i, j), Fraction(0)) + c[i][j][k] / 2
    # [X,[X,Y]]_k = sum x_a x_i y_j c_ijm c_amk ; [Y,[X,Y]]_k = sum y_a x_i y_j c_ijm c_amk
    for a, i, j, m, k in itertools.product(range(d), repeat=5):
        w = c[i][j][m] * c[a][m][k]
        if not w:
            continue
        w = w / 12
        mx = tuple(sorted([("x", a), ("x", i), ("y", j)]))
        my = tuple(sorted([("y", a), ("x", i), ("y", j)]))
        cub[k][mx] = cub[k].get(mx, Fraction(0)) + w
        cub[k][my] = cub[k].get(my, Fraction(0)) - w
    for f in bil + cub:
        for key in [key for key, v in f.items() if v == 0]:
            del f[key]
    forms = MultiplicationForms(bil, cub)
    # structural checks
    for k in range(d1):
        if bil[k] or cub[k]:
            raise AssertionError("first d1 coordinates must simply add")
    for k in range(d1, d2):
        for (i, j) in bil[k]:
            if i >= d1 or j >= d1:
                raise AssertionError("bilinear form of a level-2 coordinate must only see level-1 inputs")
        if cub[k]:
            raise AssertionError("level-2 coordinates have no cubic correction")
    for k in range(d2, d):
        for (i, j) in bil[k]:
            if i >= d2 or j >= d2:
                raise AssertionError("bilinear form sees a level-3 input")
        for mono in cub[k]:
            if any(idx >= d1 for _, idx in mono):
                raise AssertionError("cubic form must only see level-1 inputs")
    if require_integral:
        if not alg.integral_divisible_by(C3):
            raise ValueError("integrality requested but constants are not integers divisible by 12")
        if not forms.all_integral():
            raise AssertionError("extracted form coefficients are not integral")
    return forms


def evaluate_forms(alg: NilAlgebra, forms: MultiplicationForms, x, y) -> Vec:
    d = alg.dim
    x = _vec(x, d)
    y = _vec(y, d)
    var = {"x": x, "y": y}
    out = list(_add(x, y))
    for k in range(d):
        for (i, j), v in forms.bilinear[k].items():
            out[k] += v * x[i] * y[j]
        for mono, v in forms.cubic[k].items():
            t = v
            for side, idx in mono:
                t *= var[side][idx]
            out[k] += t
    return tuple(out)


# second kind and lattice reduction ---------------------------------------------

def _peel(alg: NilAlgebra, z: Vec, choose) -> Tuple[list, Vec]:
    """Multiply z on the right by exp(t_j X_j) for j = 1..d in turn.

    t_j = choose(current coordinate j).  Coordinates below j are untouched
    by the j-th factor because brackets only feed higher indices.
    """
    ts = []
    for j in range(alg.dim):
        t = choose(z[j])
        ts.append(t)
        if t:
            z = bch_log_product(alg, z, alg.unit(j, t))
    return ts, z


def second_kind(alg: NilAlgebra, p) -> Vec:
    """s with p = exp(s_1 X_1) ... exp(s_d X_d).

    Peeling p^{-1} to the identity gives p^{-1} exp(t_1 X_1) ... exp(t_d X_d) = 1,
    so the t are the second-kind coordinates of p.
    """
    ts, rest = _peel(alg, inverse(alg, p), lambda u: -u)
    if any(rest):
        raise ArithmeticError("peeling did not terminate at the identity")
    return tuple(Fraction(t) for t in ts)


def from_second_kind(alg: NilAlgebra, s) -> Vec:
    d = alg.dim
    s = _vec(s, d)
    acc = alg.zero()
    for j in range(d):
        acc = bch_log_product(alg, acc, alg.unit(j, s[j]))
    return acc


def reduce_to_lattice(alg: NilAlgebra, p) -> Tuple[Vec, Vec]:
    """(gamma, p * gamma) with gamma in Gamma and p * gamma in [-1/2, 1/2)^d.

    gamma = exp(t_1 X_1) ... exp(t_d X_d) with t_j = -floor(u_j + 1/2),
    where u_j is coordinate j after the first j-1 factors were applied on
    the right.  Needs integral constants divisible by 12 so that
    psi_exp(gamma) is integral, which is checked.
    """
    if not alg.integral_divisible_by(C3):
        raise ValueError("reduce_to_lattice needs integer constants divisible by 12")
    p = _vec(p, alg.dim)
    ts, z = _peel(alg, p, lambda u: -math.floor(u + Fraction(1, 2)))
    gamma = from_second_kind(alg, ts)
    if any(v.denominator != 1 for v in gamma):
        raise AssertionError("gamma has non-integral first-kind coordinates")
    if any(not (-Fraction(1, 2) <= v < Fraction(1, 2)) for v in z):
        raise AssertionError("reduced point left the fundamental box")
    if bch_log_product(alg, p, gamma) != z:
        raise AssertionError("p * gamma disagrees with the peeled point")
    return gamma, z


def rescale_basis(alg: NilAlgebra, k: int, m_height: int) -> NilAlgebra:
    """Constants R c_ijk for R = 12 lcm(1..M) K (basis X_i -> R X_i)."""
    if k < 1 or m_height < 1:
        raise ValueError("K and M must be positive")
    for v in alg.constants().values():
        if max(abs(v.numerator), v.denominator) > m_height:
            raise ValueError(f"constant {v} exceeds height {m_height}")
    r = C3 * math.lcm(*range(1, m_height + 1)) * k
    new = NilAlgebra(alg.dim, alg.degree, alg.filtration, {key: r * v for key, v in alg.constants().items()})
    if not new.integral_divisible_by(C3 * k):
        raise AssertionError("rescaled constants are not divisible by 12K")
    return new


# polynomial sequences ----------------------------------------------------------

@dataclass(frozen=True)
class PolySeq3:
    """g(n) = g1^n g2^C(n,2) g3^C(n,3) by the logs of g1, g2, g3."""

    log_g1: Vec
    log_g2: Vec
    log_g3: Vec

    def validate(self, alg: NilAlgebra):
        d1, d2, _ = alg.filtration
        for name, v, lo in (("log_g1", self.log_g1, 0), ("log_g2", self.log_g2, d1), ("log_g3", self.log_g3, d2)):
            if len(v) != alg.dim:
                raise ValueError(f"{name} has the wrong dimension")
            if any(Fraction(t) != 0 for t in v[:lo]):
                raise ValueError(f"{name} must be supported on coordinates > {lo}")


def _binom(n: int, k: int) -> Fraction:
    num = Fraction(1)
    for i in range(k):
        num *= n - i
    return num / math.factorial(k)


def poly_seq_log(alg: NilAlgebra, seq: PolySeq3, n: int) -> Vec:
    """n a + C(n,2) b + (n/2) C(n,2) [a, b] + C(n,3) c."""
    seq.validate(alg)
    d = alg.dim
    a, b, c = (_vec(v, d) for v in (seq.log_g1, seq.log_g2, seq.log_g3))
    c2 = _binom(n, 2)
    out = _add(_scale(n, a), _scale(c2, b))
    out = _add(out, _scale(Fraction(n, 2) * c2, bracket(alg, a, b)))
    return _add(out, _scale(_binom(n, 3), c))


# torus helpers (floating point) --------------------------------------------------

@dataclass
class FourierApprox:
    coefficients: Dict[tuple, complex]
    cutoff: int
    grid_error: float
    certified_error: float
    l1_mass: float
    attenuation: float  # largest coefficient loss from the Fejer weights

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0], dtype=complex)
        for xi, c in self.coefficients.items():
            out += c * np.exp(2j * np.pi * (x @ np.array(xi, dtype=float)))
        return out


def fourier_approx_torus(samples, lipschitz: float, eps: float) -> FourierApprox:
    """Fejer mean of F from samples on the uniform grid of (R/Z)^d, d <= 2.

    The error is certified as grid sup error plus (L + Lip_P) h/2, where h
    is the grid spacing, Lip_P <= 2 pi sum |c_xi| |xi|_1 and distances are
    in the max metric.  The cutoff starts at ceil(4 L d / eps), is doubled
    once if certification fails, and then the call raises.
    """
    f = np.asarray(samples, dtype=complex)
    d = f.ndim
    if d not in (1, 2):
        raise ValueError("only d = 1 or 2 is supported")
    g = f.shape[0]
    if any(s != g for s in f.shape):
        raise ValueError("grid must be square")
    if not eps > 0:
        raise ValueError("eps must be positive")
    fh = np.fft.fftn(f) / f.size
    freqs = np.fft.fftfreq(g, 1.0 / g).astype(int)
    h = 1.0 / g
    cap = g // 2 - 1
    cutoff = max(0, min(math.ceil(4 * lipschitz * d / eps), cap))
    for attempt in range(2):
        w1 = np.clip(1.0 - np.abs(freqs) / (cutoff + 1.0), 0.0, None)
        w = w1 if d == 1 else np.outer(w1, w1)
        approx_hat = fh * w
        approx = np.fft.ifftn(approx_hat) * f.size
        grid_err = float(np.max(np.abs(approx - f)))
        mask = np.abs(approx_hat) > 1e-14 * max(1.0, float(np.abs(fh).max()))
        idx = np.argwhere(mask)
        coeffs = {}
        lip_p = 0.0
        for ix in idx:
            xi = tuple(int(freqs[t]) for t in ix)
            c = complex(approx_hat[tuple(ix)])
            coeffs[xi] = c
            lip_p += 2 * math.pi * abs(c) * sum(abs(t) for t in xi)
        cert = grid_err + (lipschitz + lip_p) * h / 2
        if cert <= eps:
            att = float(np.max(np.abs(fh * (1 - w)))) if f.size else 0.0
            return FourierApprox(coeffs, cutoff, grid_err, cert, float(sum(abs(c) for c in coeffs.values())), att)
        if attempt == 0:
            new = min(2 * max(cutoff, 1), cap)
            if new == cutoff:
                break
            cutoff = new
    raise ArithmeticError(f"certified error {cert:.3e} exceeds eps {eps} at cutoff {cutoff}")


def _smooth_step(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class CircleBump:
    """chi_j on R/Z with support in [j/m, (j+2)/m)."""

    j: int
    m: int

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = np.mod(self.m * np.mod(x, 1.0) - self.j, self.m)
        rise = _smooth_step(u)
        fall = 1.0 - _smooth_step(u - 1.0)
        return np.where(u < 1.0, rise, np.where(u < 2.0, fall, 0.0))

    def support(self) -> tuple:
        return (Fraction(self.j, self.m), Fraction(self.j + 2, self.m))


def circle_partition_of_unity(m: int) -> List[CircleBump]:
    """Smooth nonnegative chi_1..chi_m with sum 1 (checked at 10m points)."""
    if m < 2:
        raise ValueError("m must be >= 2")
    bumps = [CircleBump(j, m) for j in range(1, m + 1)]
    xs = (np.arange(10 * m) + 0.5) / (10 * m)
    total = np.zeros_like(xs)
    for b in bumps:
        v = b(xs)
        if np.any(v < 0):
            raise AssertionError("negative bump value")
        total += v
    if np.max(np.abs(total - 1.0)) > 1e-12:
        raise AssertionError("bumps do not sum to 1")
    return bumps
