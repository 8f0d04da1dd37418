"""The 5-AP operator Lambda(f_1..f_5) = E_{x,y} prod f_k(x + (k-1)y) and exact counts.

Degenerate progressions (y = 0) are part of Lambda, so a set with no
nontrivial 5-APs has ``count_5aps(A) == len(A)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sympy import isprime

from . import _kernels
from .cyclic import CyclicFunction
from .gowers import DEFAULT_WORK_CAP, WorkCapExceeded

__all__ = [
    "SetInInterval",
    "lambda5",
    "lambda5_interval",
    "count_5aps",
    "count_5aps_integers",
    "interval_ap_count",
    "lift",
]


@dataclass(frozen=True)
class SetInInterval:
    """A subset of [N'] = {1, ..., N'}."""

    bound: int
    elements: tuple

    def __init__(self, bound: int, elements: Iterable[int]):
        bound = int(bound)
        if bound < 1:
            raise ValueError("bound must be positive")
        els = [int(a) for a in elements]
        if len(set(els)) != len(els):
            raise ValueError("duplicate elements")
        els.sort()
        if els and (els[0] < 1 or els[-1] > bound):
            raise ValueError(f"elements must lie in [1, {bound}]")
        object.__setattr__(self, "bound", bound)
        object.__setattr__(self, "elements", tuple(els))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x):
        return x in set(self.elements)

    @property
    def density(self) -> float:
        return len(self.elements) / self.bound

    def indicator(self) -> np.ndarray:
        """Values of 1_A on 1..N' (index 0 is the point 1)."""
        v = np.zeros(self.bound)
        v[np.array(self.elements, dtype=np.int64) - 1] = 1.0
        return v


def lift(values_on_interval: Sequence[float], n: int) -> CyclicFunction:
    """Place a function on [N'] at residues 1..N' of Z/NZ, zero elsewhere."""
    v = np.zeros(n, dtype=np.complex128)
    m = len(values_on_interval)
    if m >= n:
        raise ValueError("interval does not fit in Z/NZ")
    v[1 : m + 1] = values_on_interval
    return CyclicFunction(v)


def lambda5(*fs: CyclicFunction, work_cap: int = DEFAULT_WORK_CAP) -> complex:
    """E_{x,y} f1(x) f2(x+y) f3(x+2y) f4(x+3y) f5(x+4y) by the O(N^2) loop."""
    if len(fs) == 1:
        fs = fs * 5
    if len(fs) != 5:
        raise ValueError("lambda5 takes one or five functions")
    n = fs[0].modulus
    for g in fs[1:]:
        if g.modulus != n:
            raise ValueError(f"modulus mismatch: {n} vs {g.modulus}")
    if n * n > work_cap:
        raise WorkCapExceeded(f"Lambda on N={n} needs {n * n} pair evaluations")
    vals = [np.ascontiguousarray(g.values) for g in fs]
    return _kernels.lambda5_direct(*vals) / (n * n)


def lambda5_interval(
    fs: Sequence[Sequence[float]], n: int, work_cap: int = DEFAULT_WORK_CAP
) -> complex:
    """Lambda of five functions on [N'] lifted into Z/NZ, for N > 4N'.

    Every nonzero term has x in [N'] and |y| < N' as integers, so the sum is
    taken over those O(N'^2) pairs only.
    """
    if len(fs) == 1:
        fs = list(fs) * 5
    arrs = [np.asarray(g, dtype=np.complex128) for g in fs]
    m = arrs[0].shape[0]
    if any(a.shape[0] != m for a in arrs):
        raise ValueError("all five functions need the same interval")
    if n <= 8 * m:
        raise ValueError("interval path needs N > 8 N'")
    if m * (2 * m - 1) > work_cap:
        raise WorkCapExceeded(f"interval Lambda needs {m * (2 * m - 1)} pairs")
    pad = np.zeros(9 * m, dtype=np.complex128)
    padded = []
    for a in arrs:
        p = pad.copy()
        p[4 * m : 5 * m] = a
        padded.append(p)
    x = np.arange(4 * m, 5 * m)
    acc = 0j
    for y in range(-(m - 1), m):
        prod = padded[0][x].copy()
        for j in range(1, 5):
            prod *= padded[j][x + j * y]
        acc += prod.sum()
    return acc / (n * n)


def count_5aps_integers(elements: Iterable[int]) -> int:
    """#(x, y) in Z^2, y = 0 included, with x, x+y, ..., x+4y all in the set."""
    s = sorted(set(int(a) for a in elements))
    members = set(s)
    nontrivial = 0
    for i, a in enumerate(s):
        for b in s[i + 1 :]:
            d = b - a
            if a + 4 * d > s[-1]:
                break
            if a + 2 * d in members and a + 3 * d in members and a + 4 * d in members:
                nontrivial += 1
    return len(s) + 2 * nontrivial


def count_5aps(a: SetInInterval, n: int) -> int:
    """N^2 * Lambda(1_A) for A lifted into Z/NZ (N prime, N >= 1024 N')."""
    if not isprime(n):
        raise ValueError(f"N = {n} is not prime")
    if n < 1024 * a.bound:
        raise ValueError(f"N = {n} is below 1024 * N' = {1024 * a.bound}")
    return count_5aps_integers(a.elements)


def interval_ap_count(m: int) -> int:
    """count_5aps of the whole interval [m]: m + 2 * sum_{d>=1} (m - 4d)_+."""
    tail = sum(m - 4 * d for d in range(1, (m - 1) // 4 + 1))
    return m + 2 * tail
