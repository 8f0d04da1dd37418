"""Locally polynomial phases on subsets of Z/NZ.

A function phi on S is locally degree s when the (s+1)-fold additive
derivative sum_eps (-1)^|eps| phi(x + eps.h) vanishes for every cube
{x + eps.h} contained in S.  Values live in R/Z (``mod_one=True``) or in
R; the product rule only holds for R-valued representatives, so products
are taken there and reduced afterwards.

Floor phases n -> floor(alpha n)_beta need an integer n, not a residue.
A *lift* maps residues of the domain to integers.  Two lifts are provided:
the fundamental-domain lift and, for a rank-one Bohr set y + B({xi}, rho),
the Bohr-coordinate lift  x -> y0 + u t  where u = xi^{-1} mod N and
t in (-rho N, rho N) is the coordinate of x.  The latter is additive on
every cube inside the Bohr set (its coordinates never wrap, since
4 rho N < N), which is what makes floor(alpha n)_beta locally linear there.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .bohr import BohrSpec
from .cyclic import frac, to_fraction
from .gowers import DEFAULT_WORK_CAP, WorkCapExceeded

__all__ = [
    "PartialPhase",
    "LocalDegreeResult",
    "ShiftedFloorSpec",
    "BracketReport",
    "shifted_floor",
    "shifted_frac",
    "is_locally_degree",
    "cube_derivative",
    "fundamental_lift",
    "bohr_coordinate_lift",
    "floor_phase",
    "polynomial_phase",
    "verify_bracket_identities",
]

_INT64_SAFE = 2**61


class PartialPhase:
    """A function on a subset of Z/NZ with values in R/Z or R."""

    __slots__ = ("modulus", "values", "mod_one")

    def __init__(self, modulus: int, values: Mapping[int, object], mod_one: bool = True):
        self.modulus = int(modulus)
        vals = {}
        for x, v in values.items():
            x = int(x) % self.modulus
            if isinstance(v, (int, np.integer)):
                v = Fraction(int(v))
            if mod_one:
                v = v % 1
            vals[x] = v
        self.values = dict(sorted(vals.items()))
        self.mod_one = bool(mod_one)

    @property
    def domain(self) -> list:
        return list(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, x):
        return self.values[int(x) % self.modulus]

    def __repr__(self):
        kind = "R/Z" if self.mod_one else "R"
        return f"PartialPhase(N={self.modulus}, |domain|={len(self)}, {kind})"

    def restrict(self, subset: Iterable[int]) -> "PartialPhase":
        keep = {int(x) % self.modulus for x in subset}
        return PartialPhase(
            self.modulus,
            {x: v for x, v in self.values.items() if x in keep},
            self.mod_one,
        )

    def reduce_mod_one(self) -> "PartialPhase":
        return PartialPhase(self.modulus, self.values, mod_one=True)

    def _combine(self, other: "PartialPhase", op) -> "PartialPhase":
        if self.modulus != other.modulus:
            raise ValueError("modulus mismatch")
        dom = self.values.keys() & other.values.keys()
        return PartialPhase(
            self.modulus,
            {x: op(self.values[x], other.values[x]) for x in dom},
            self.mod_one and other.mod_one,
        )

    def __add__(self, other):
        if isinstance(other, PartialPhase):
            return self._combine(other, lambda a, b: a + b)
        return PartialPhase(self.modulus, {x: v + other for x, v in self.values.items()}, self.mod_one)

    def __mul__(self, other):
        if isinstance(other, PartialPhase):
            if self.mod_one or other.mod_one:
                raise ValueError("products are only meaningful for R-valued phases")
            return self._combine(other, lambda a, b: a * b)
        return PartialPhase(self.modulus, {x: v * other for x, v in self.values.items()}, self.mod_one)

    __rmul__ = __mul__


@dataclass(frozen=True)
class LocalDegreeResult:
    holds: bool
    counterexample: Optional[tuple]
    cubes_checked: int

    def __bool__(self):
        return self.holds


def cube_derivative(phi: PartialPhase, x: int, hs: Sequence[int]):
    """sum_eps (-1)^|eps| phi(x + eps.h), reduced mod 1 for R/Z phases."""
    n = phi.modulus
    acc = 0
    for eps in itertools.product((0, 1), repeat=len(hs)):
        pt = (x + sum(e * h for e, h in zip(eps, hs))) % n
        v = phi.values[pt]
        acc = acc - v if sum(eps) % 2 else acc + v
    return acc % 1 if phi.mod_one else acc


def _encode(phi: PartialPhase, depth: int):
    """Kernel inputs: (values array, mode, Q, tol, use_compiled)."""
    n = phi.modulus
    vals = list(phi.values.values())
    exact = all(isinstance(v, Fraction) for v in vals)
    if not exact:
        arr = np.zeros(n)
        for x, v in phi.values.items():
            arr[x] = float(v)
        return arr, (3 if phi.mod_one else 2), 0, 1e-9, True
    q = 1
    for v in vals:
        q = q * v.denominator // math.gcd(q, v.denominator)
    ints = [0] * n
    for x, v in phi.values.items():
        ints[x] = v.numerator * (q // v.denominator)
    if phi.mod_one:
        ints = [i % q for i in ints]
        small = q * (1 << depth) < _INT64_SAFE
        return ints, 1, q, 0.0, small
    big = max((abs(i) for i in ints), default=0)
    small = (big + 1) * (1 << depth) < _INT64_SAFE
    return ints, 0, 0, 0.0, small


def is_locally_degree(
    phi: PartialPhase,
    s: int,
    work_cap: int = DEFAULT_WORK_CAP,
    method: str = "pruned",
) -> LocalDegreeResult:
    """Exhaustive check that every cube inside the domain has zero (s+1)-th derivative."""
    if s < 0:
        raise ValueError("s must be >= 0")
    n = phi.modulus
    depth = s + 1
    dom = phi.domain
    if method == "naive":
        return _naive_scan(phi, depth, work_cap)
    if method != "pruned":
        raise ValueError(f"unknown method {method!r}")
    if len(dom) ** (depth + 1) > work_cap:
        raise WorkCapExceeded(
            f"cube scan needs up to {len(dom) ** (depth + 1)} cubes (cap {work_cap})"
        )
    if not dom:
        return LocalDegreeResult(True, None, 0)
    mask = np.zeros(n, dtype=np.uint8)
    mask[dom] = 1
    members = np.array(dom, dtype=np.int64)
    vals, mode, q, tol, small = _encode(phi, depth)
    if mode <= 1 and small:
        vals = np.array(vals, dtype=np.int64)
    kern = _kernels if small else _kernels.python
    hit, cubes = kern.cube_scan(vals, mask, members, depth, mode, q, tol)
    return LocalDegreeResult(hit is None, hit, int(cubes))


def _naive_scan(phi: PartialPhase, depth: int, work_cap: int) -> LocalDegreeResult:
    """Reference: every (x, h) in (Z/NZ)^{depth+1}, no pruning."""
    n = phi.modulus
    if n ** (depth + 1) > work_cap:
        raise WorkCapExceeded(f"naive scan needs {n ** (depth + 1)} tuples")
    dom = phi.values
    exact = all(isinstance(v, Fraction) for v in dom.values())
    checked = 0
    for x in range(n):
        if x not in dom:
            continue
        for hs in itertools.product(range(n), repeat=depth):
            pts = [
                (x + sum(e * h for e, h in zip(eps, hs))) % n
                for eps in itertools.product((0, 1), repeat=depth)
            ]
            if not all(p in dom for p in pts):
                continue
            checked += 1
            d = cube_derivative(phi, x, hs)
            if exact:
                bad = d != 0
            elif phi.mod_one:
                bad = min(d, 1 - d) > 1e-9
            else:
                bad = abs(d) > 1e-9
            if bad:
                return LocalDegreeResult(False, (x,) + tuple(hs), checked)
    return LocalDegreeResult(True, None, checked)


# shifted floors ------------------------------------------------------------

@dataclass(frozen=True)
class ShiftedFloorSpec:
    """floor(t)_beta = floor(t - beta + 1/2), so {t}_beta lies in [beta - 1/2, beta + 1/2)."""

    alpha: Fraction
    beta: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "alpha", to_fraction(self.alpha))
        object.__setattr__(self, "beta", to_fraction(self.beta))


def shifted_floor(t, beta=0) -> int:
    return math.floor(t - beta + Fraction(1, 2))


def shifted_frac(t, beta=0):
    return t - shifted_floor(t, beta)


def fundamental_lift(modulus: int, start: int = 0) -> Callable[[int], int]:
    """Residue -> its representative in [start, start + N)."""

    def lift(x: int) -> int:
        return start + (int(x) - start) % modulus

    return lift


def bohr_coordinate_lift(spec: BohrSpec) -> Callable[[int], int]:
    """Integer lift on a rank-one Bohr set that is additive on its cubes.

    Writes a member x as x = u (c + t) with u = xi^{-1}, c the integer
    nearest to a N and |t| < rho N, and lifts it to y0 + u t where
    y0 = u c mod N.  The lift is congruent to x mod N.
    """
    if spec.rank != 1:
        raise ValueError("the coordinate lift needs a rank-one Bohr set")
    n = spec.modulus
    xi = spec.frequencies[0]
    if math.gcd(xi, n) != 1:
        raise ValueError("frequency must be invertible mod N")
    u = pow(xi, -1, n)
    a = spec.shifts()[0]
    c = math.floor(a * n + Fraction(1, 2))
    y0 = (u * c) % n

    def lift(x: int) -> int:
        t = (xi * int(x) - c) % n
        if 2 * t >= n:
            t -= n
        return y0 + u * t

    return lift


def floor_phase(
    spec: ShiftedFloorSpec,
    domain: Iterable[int],
    modulus: int,
    lift: Optional[Callable[[int], int]] = None,
) -> PartialPhase:
    """n -> floor(alpha * lift(n))_beta as an R-valued (integer) partial phase."""
    lift = lift or fundamental_lift(modulus)
    vals = {x: Fraction(shifted_floor(spec.alpha * lift(x), spec.beta)) for x in domain}
    return PartialPhase(modulus, vals, mod_one=False)


def polynomial_phase(
    modulus: int,
    coeffs: Sequence,
    domain: Iterable[int],
    lift: Optional[Callable[[int], int]] = None,
    mod_one: bool = False,
) -> PartialPhase:
    """n -> sum_i coeffs[i] * lift(n)^i (exact rationals)."""
    lift = lift or fundamental_lift(modulus)
    cs = [to_fraction(c) for c in coeffs]
    vals = {}
    for x in domain:
        m = lift(x)
        vals[x] = sum((c * m**i for i, c in enumerate(cs)), Fraction(0))
    return PartialPhase(modulus, vals, mod_one=mod_one)


# bracket identities ----------------------------------------------------------

@dataclass(frozen=True)
class BracketReport:
    """Residuals of the two bracket identities (both must be zero)."""

    lhs_i: object
    rhs_i: object
    residual_i: object
    swapped_form_residual: object
    residual_ii: object
    dropped_term: object


def verify_bracket_identities(x, y, a, b, c, n) -> BracketReport:
    """Check {x}y + x{y} = xy - [x][y] + {x}{y} and

    an{bn{cn}} = abn^2{cn} - {an}bn{cn} + {an}{bn{cn}}  (mod 1).

    Inputs are converted to exact rationals (floats exactly, strings by
    decimal value).  ``swapped_form_residual`` is the residual of the
    variant {x}y + y{x}, which does not balance in general, and
    ``dropped_term`` is {an}{bn{cn}}, the term the two-term form omits.
    """
    x, y, a, b, c, n = (to_fraction(t) for t in (x, y, a, b, c, n))
    fx, fy = frac(x), frac(y)
    lhs = fx * y + x * fy
    rhs = x * y - math.floor(x) * math.floor(y) + fx * fy
    swapped = fx * y + y * fx - rhs
    an, bn, cn = a * n, b * n, c * n
    inner = frac(bn * frac(cn))
    left = an * inner
    dropped = frac(an) * inner
    right = a * b * n * n * frac(cn) - frac(an) * bn * frac(cn) + dropped
    return BracketReport(lhs, rhs, lhs - rhs, swapped, (left - right) % 1, dropped)
