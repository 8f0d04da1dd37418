"""Functions on Z/NZ, the R/Z norm, and the expectation-normalised DFT.

Conventions used across the package:

* ``e(t) = exp(2 pi i t)``.
* The DFT is normalised by the expectation,
  ``fhat(xi) = E_x f(x) e(-x xi / N)``, so Parseval reads
  ``E_x |f(x)|^2 = sum_xi |fhat(xi)|^2``.
* Inner products are expectations, ``<f, g> = E_x f(x) conj(g(x))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CyclicFunction",
    "RationalFrequency",
    "frac",
    "frac_norm",
    "e_rational",
    "dft",
    "dft_direct",
    "inner_product",
    "to_fraction",
]


def to_fraction(x) -> Fraction:
    """Exact rational value of an int, Fraction, float or decimal string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x)
    xf = float(x)
    if not math.isfinite(xf):
        raise ValueError(f"non-finite value {x!r}")
    return Fraction(xf)


def frac(x):
    """Fractional part {x} = x - floor(x), exact for rationals."""
    if isinstance(x, (Fraction, int, np.integer)):
        return x - math.floor(x)
    xf = float(x)
    if not math.isfinite(xf):
        raise ValueError(f"frac_norm needs a finite input, got {x!r}")
    return xf - math.floor(xf)


def frac_norm(x):
    """Distance from x to the nearest integer, in [0, 1/2].

    Exact (a Fraction) for rational input, a float otherwise.
    """
    r = frac(x)
    return min(r, 1 - r)


def e_rational(p: int, q: int) -> complex:
    """e(p/q) with p reduced mod q first, so the angle is at most pi."""
    if q <= 0:
        raise ValueError("denominator must be positive")
    r = p % q
    if 2 * r > q:
        r -= q
    return complex(np.exp(2j * math.pi * (r / q)))


@dataclass(frozen=True)
class RationalFrequency:
    """An element of (1/N)Z read in R/Z, kept in lowest terms in [0, 1)."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(self.numerator, self.denominator)
        num = (self.numerator // g) % (self.denominator // g)
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", self.denominator // g)

    @classmethod
    def from_residue(cls, xi: int, modulus: int) -> "RationalFrequency":
        return cls(int(xi), int(modulus))

    def residue(self, modulus: int) -> int:
        """The residue xi with xi/modulus equal to this frequency."""
        if modulus % self.denominator:
            raise ValueError(
                f"frequency {self} does not lie in (1/{modulus})Z"
            )
        return (self.numerator * (modulus // self.denominator)) % modulus

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


class CyclicFunction:
    """A complex-valued function on Z/NZ.  Values are stored read-only."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[complex]):
        arr = np.array(values, dtype=np.complex128).reshape(-1)
        if arr.size < 1:
            raise ValueError("a function on Z/NZ needs N >= 1 values")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def modulus(self) -> int:
        return int(self._values.shape[0])

    def __len__(self):
        return self.modulus

    def __call__(self, x: int) -> complex:
        return complex(self._values[int(x) % self.modulus])

    def __repr__(self):
        return f"CyclicFunction(N={self.modulus})"

    # constructors
    @classmethod
    def constant(cls, n: int, c: complex = 1.0) -> "CyclicFunction":
        return cls(np.full(n, c, dtype=np.complex128))

    @classmethod
    def indicator(cls, n: int, members: Iterable[int]) -> "CyclicFunction":
        v = np.zeros(n, dtype=np.complex128)
        for m in members:
            v[int(m) % n] = 1.0
        return cls(v)

    @classmethod
    def polynomial_phase(cls, n: int, coeffs: Sequence[int]) -> "CyclicFunction":
        """x -> e(P(x)/N) for an integer polynomial P (coeffs[i] multiplies x^i)."""
        vals = []
        for x in range(n):
            p = sum(int(c) * pow(x, i, n) for i, c in enumerate(coeffs))
            vals.append(e_rational(p, n))
        return cls(vals)

    # arithmetic
    def _check(self, other: "CyclicFunction"):
        if self.modulus != other.modulus:
            raise ValueError(
                f"modulus mismatch: {self.modulus} vs {other.modulus}"
            )

    def __add__(self, other):
        if isinstance(other, CyclicFunction):
            self._check(other)
            return CyclicFunction(self._values + other._values)
        return CyclicFunction(self._values + other)

    def __sub__(self, other):
        if isinstance(other, CyclicFunction):
            self._check(other)
            return CyclicFunction(self._values - other._values)
        return CyclicFunction(self._values - other)

    def __mul__(self, other):
        if isinstance(other, CyclicFunction):
            self._check(other)
            return CyclicFunction(self._values * other._values)
        return CyclicFunction(self._values * other)

    __rmul__ = __mul__

    def conj(self) -> "CyclicFunction":
        return CyclicFunction(np.conj(self._values))

    def mean(self) -> complex:
        return complex(self._values.mean())

    def l1(self) -> float:
        return float(np.abs(self._values).mean())

    def l2(self) -> float:
        return float(math.sqrt(np.mean(np.abs(self._values) ** 2)))

    def linf(self) -> float:
        return float(np.abs(self._values).max())

    def allclose(self, other: "CyclicFunction", atol=1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self._values, other._values, rtol=0, atol=atol))


def dft_direct(f: CyclicFunction) -> CyclicFunction:
    """Reference O(N^2) transform."""
    n = f.modulus
    x = np.arange(n)
    # exponent reduced mod N before scaling keeps the angles small
    kern = np.exp(-2j * np.pi * ((np.outer(x, x) % n) / n))
    return CyclicFunction(kern @ f.values / n)


def dft(f: CyclicFunction, method: str = "fft") -> CyclicFunction:
    """fhat(xi) = E_x f(x) e(-x xi/N).  ``method`` is "fft" or "direct"."""
    if method == "direct":
        return dft_direct(f)
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    return CyclicFunction(np.fft.fft(f.values) / f.modulus)


def inner_product(f: CyclicFunction, g: CyclicFunction) -> complex:
    """E_x f(x) conj(g(x))."""
    f._check(g)
    return complex(np.mean(f.values * np.conj(g.values)))
