"""Bohr sets B_a(S, rho) = {x : ||xi x / N - a_xi|| < rho for all xi in S}.

Frequencies are stored as residues xi in Z/NZ; the (1/N)Z presentation
xi/N is accepted on input and converted.  Membership is decided with
integer arithmetic only: for a_xi = p/q the test is
``min(r, D - r) * rho_den < rho_num * D`` with ``D = N q`` and
``r = (xi x q - p N) mod D``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .cyclic import RationalFrequency, to_fraction

__all__ = [
    "BohrSpec",
    "bohr_member",
    "bohr_enumerate",
    "bohr_mask",
    "shifted_spec",
    "DEFAULT_ENUMERATION_CAP",
]

DEFAULT_ENUMERATION_CAP = 10**7


def _as_residue(freq, modulus: int) -> int:
    if isinstance(freq, RationalFrequency):
        return freq.residue(modulus)
    if isinstance(freq, Fraction):
        return RationalFrequency(freq.numerator, freq.denominator).residue(modulus)
    return int(freq) % modulus


@dataclass(frozen=True)
class BohrSpec:
    """Data (N, S, rho, a) of a possibly shifted Bohr set."""

    modulus: int
    frequencies: tuple
    radius: Fraction
    shift: Optional[tuple] = None

    def __init__(self, modulus: int, frequencies: Iterable = (), radius=Fraction(1, 100), shift: Optional[Sequence] = None):
        n = int(modulus)
        if n < 1:
            raise ValueError("modulus must be positive")
        freqs = tuple(_as_residue(f, n) for f in frequencies)
        rho = to_fraction(radius)
        if not (0 < rho < 1):
            raise ValueError("radius must lie in (0, 1)")
        if shift is not None:
            shift = tuple(to_fraction(a) % 1 for a in shift)
            if len(shift) != len(freqs):
                raise ValueError("one shift phase per frequency")
            if all(a == 0 for a in shift):
                shift = None
        object.__setattr__(self, "modulus", n)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "radius", rho)
        object.__setattr__(self, "shift", shift)

    @property
    def rank(self) -> int:
        return len(self.frequencies)

    def shifts(self) -> tuple:
        return self.shift if self.shift is not None else (Fraction(0),) * self.rank

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "frequencies": list(self.frequencies),
            "radius": str(self.radius),
            "shift": None if self.shift is None else [str(a) for a in self.shift],
        }

    @classmethod
    def from_json(cls, d: dict) -> "BohrSpec":
        return cls(
            d["modulus"],
            d.get("frequencies", []),
            Fraction(str(d.get("radius", "1/100"))),
            d.get("shift"),
        )


def bohr_member(x: int, spec: BohrSpec) -> bool:
    n = spec.modulus
    rho = spec.radius
    for xi, a in zip(spec.frequencies, spec.shifts()):
        p, q = a.numerator, a.denominator
        d = n * q
        r = (xi * x * q - p * n) % d
        if min(r, d - r) * rho.denominator >= rho.numerator * d:
            return False
    return True


def bohr_mask(spec: BohrSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Boolean membership array over 0..N-1 (vectorised, exact)."""
    n = spec.modulus
    if n * max(spec.rank, 1) > cap:
        raise ValueError(f"Bohr enumeration over N={n} exceeds cap {cap}")
    x = np.arange(n, dtype=object if n > 2**20 else np.int64)
    mask = np.ones(n, dtype=bool)
    rho = spec.radius
    for xi, a in zip(spec.frequencies, spec.shifts()):
        p, q = a.numerator, a.denominator
        d = n * q
        big = d * max(rho.numerator, rho.denominator) * max(n, 1)
        if big < 2**62 and x.dtype != object:
            r = (xi * q * x - p * n) % d
            dist = np.minimum(r, d - r)
            mask &= dist * rho.denominator < rho.numerator * d
        else:
            mask &= np.array([bohr_member(int(t), BohrSpec(n, [xi], rho, [a])) for t in range(n)])
    return mask


def bohr_enumerate(spec: BohrSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    """Sorted list of members."""
    return [int(t) for t in np.flatnonzero(bohr_mask(spec, cap))]


def shifted_spec(spec: BohrSpec, y: int) -> BohrSpec:
    """Spec of y + B(S, rho): a_xi = xi y / N added to the existing shift."""
    n = spec.modulus
    new = [
        (a + Fraction(xi * y % n, n)) % 1
        for xi, a in zip(spec.frequencies, spec.shifts())
    ]
    return BohrSpec(n, spec.frequencies, spec.radius, new)
