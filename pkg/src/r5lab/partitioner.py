"""Cutting progressions into pieces on which given phases are nearly constant.

Progressions live in Z and are parametrised from 0: {a + b t : 0 <= t < L}.
A phase on a progression is a polynomial in t with exact rational
coefficients taken mod 1; a degree-reduction round finds a common step r
with every leading coefficient times r^k close to an integer, passes to the
r residue classes, and moves the small leading term into a real-valued
residual.  Classes are then chopped greedily so that each moved term varies
by less than eps/6 on every piece, which is checked directly rather than
derived from asymptotic bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np

from .cyclic import to_fraction
from .schmidt import recurrence_search

__all__ = [
    "Progression",
    "CubicPhaseOnProgression",
    "Piece",
    "WindowOverflow",
    "partition_by_linear",
    "reduce_degree_partition",
    "cut_by_window",
    "window_member",
    "polynomial_range",
    "covers_exactly",
]

DEFAULT_LENGTH_CAP = 10**6


class WindowOverflow(AssertionError):
    """A piece produced more than 7 membership runs."""


@dataclass(frozen=True, order=True)
class Progression:
    base: int
    step: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.step == 0 and self.length > 1:
            raise ValueError("step must be nonzero")

    def elements(self) -> np.ndarray:
        return self.base + self.step * np.arange(self.length, dtype=np.int64)

    def __len__(self):
        return self.length

    def sub(self, offset: int, stride: int, length: int) -> "Progression":
        """{x_{offset + stride u} : 0 <= u < length}."""
        step = self.step * stride if length > 1 else 1
        return Progression(self.base + self.step * offset, step, length)

    def to_json(self) -> dict:
        return {"base": self.base, "step": self.step, "length": self.length}


def _poly_eval(coeffs: Sequence, t):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _substitute(coeffs: Sequence[Fraction], t0: int, r: int) -> list:
    """Coefficients in v of p(t0 + r v)."""
    out = [Fraction(0)] * len(coeffs)
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        for j in range(i + 1):
            out[j] += c * math.comb(i, j) * Fraction(t0) ** (i - j) * Fraction(r) ** j
    return out


def _mod1(coeffs):
    return [c - math.floor(c) for c in coeffs]


def _signed(c: Fraction) -> Fraction:
    c = c - math.floor(c)
    return c - 1 if c > Fraction(1, 2) else c


@dataclass(frozen=True)
class CubicPhaseOnProgression:
    """phi(a + b t) = alpha t^3 + beta t^2 + gamma t + kappa (mod 1)."""

    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    kappa: Fraction

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "kappa"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)) % 1)

    @property
    def coeffs(self) -> list:
        return [self.kappa, self.gamma, self.beta, self.alpha]

    def value(self, t: int) -> Fraction:
        return _poly_eval(self.coeffs, t) % 1

    @classmethod
    def from_integer_polynomial(
        cls, coeffs: Sequence[int], modulus: int, prog: Progression, offset=Fraction(0)
    ) -> "CubicPhaseOnProgression":
        """x -> P(x)/N + offset with P integer of degree <= 3, along prog."""
        cs = [Fraction(int(c), modulus) for c in coeffs] + [Fraction(0)] * (4 - len(coeffs))
        sub = _substitute(cs, prog.base, prog.step)
        sub[0] += to_fraction(offset)
        out = cls(sub[3], sub[2], sub[1], sub[0])
        # sample check against direct evaluation
        for t in {0, prog.length // 2, prog.length - 1}:
            x = prog.base + prog.step * t
            direct = (Fraction(sum(int(c) * x**i for i, c in enumerate(coeffs)), modulus) + to_fraction(offset)) % 1
            if out.value(t) != direct:
                raise ArithmeticError("binomial re-expansion disagrees with direct evaluation")
        return out


@dataclass
class Piece:
    """A progression with, per phase, phi = kappa + P(v) where v indexes the piece."""

    progression: Progression
    kappas: list
    residuals: list  # real polynomials in v, lowest degree first
    variations: list

    def value(self, i: int, v: int) -> Fraction:
        return (self.kappas[i] + _poly_eval(self.residuals[i], v)) % 1


def polynomial_range(coeffs: Sequence, length: int) -> float:
    """max - min of a real polynomial over v = 0..length-1 (direct scan)."""
    if length <= 1 or not any(coeffs):
        return 0.0
    v = np.arange(length, dtype=float)
    vals = np.polynomial.polynomial.polyval(v, [float(c) for c in coeffs])
    return float(vals.max() - vals.min())


def covers_exactly(pieces: Sequence[Progression], target) -> bool:
    elems = np.concatenate([p.elements() for p in pieces]) if pieces else np.zeros(0, dtype=np.int64)
    tgt = np.asarray(target, dtype=np.int64)
    return elems.size == tgt.size and np.array_equal(np.sort(elems), np.sort(tgt))


def _split_classes(length: int, r: int):
    for s in range(min(r, length)):
        yield s, (length - s + r - 1) // r


def partition_by_linear(
    prog: Progression, phases: Sequence, eps: float, cap: int = DEFAULT_LENGTH_CAP
) -> List[Progression]:
    """Split prog so every phase alpha x varies by less than eps on each piece.

    A step r <= sqrt(L) with every ||alpha b r|| small comes from
    recurrence_search; the r classes are chopped to length ceil(eps/v)
    where v = max ||alpha b r||.
    """
    if prog.length > cap:
        raise ValueError(f"progression length {prog.length} exceeds cap {cap}")
    if not phases:
        return [prog]
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    steps = [to_fraction(a) * prog.step % 1 for a in phases]
    span = max(1, math.isqrt(prog.length))
    rec = recurrence_search(steps, 1, span)
    r = rec.n_star
    v = rec.value
    out = []
    for s, m in _split_classes(prog.length, r):
        cls = prog.sub(s, r, m)
        if v == 0:
            out.append(cls)
            continue
        ell = max(1, math.ceil(Fraction(eps) / v))
        for u0 in range(0, m, ell):
            out.append(cls.sub(u0, 1, min(ell, m - u0)))
    return sorted(out)


def _int_root(n: int, k: int) -> int:
    r = int(round(n ** (1.0 / k)))
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return max(r, 1)


def _chop_lengths(thetas: Sequence[Fraction], k: int, m: int, budget: Fraction) -> list:
    """Greedy run lengths so each theta u^k varies by < budget on every run."""
    big = max((abs(t) for t in thetas), default=Fraction(0))
    if big == 0:
        return [m]
    out = []
    u0 = 0
    while u0 < m:
        ell = 1
        base = u0**k
        # grow while the killed term still varies by < budget
        lo, hi = 1, m - u0
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if big * ((u0 + mid - 1) ** k - base) < budget:
                lo = mid
            else:
                hi = mid - 1
        ell = lo
        out.append(ell)
        u0 += ell
    return out


def reduce_degree_partition(
    prog: Progression,
    cubics: Sequence[CubicPhaseOnProgression],
    eps: float,
    cap: int = DEFAULT_LENGTH_CAP,
) -> List[Piece]:
    """Three rounds (k = 3, 2, 1) of degree reduction; see the module notes."""
    if prog.length > cap:
        raise ValueError(f"progression length {prog.length} exceeds cap {cap}")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    budget = Fraction(eps) / 6
    # state per piece: (progression, active coeffs mod 1 per phase, residual per phase)
    state = [(prog, [list(c.coeffs) for c in cubics], [[Fraction(0)] * 4 for _ in cubics])]
    for k in (3, 2, 1):
        nxt = []
        for p, active, resid in state:
            lead = [a[k] % 1 for a in active]
            if p.length == 1 or all(c == 0 for c in lead):
                nxt.append((p, active, resid))
                continue
            span = math.isqrt(p.length) if k == 1 else _int_root(p.length, k)
            rec = recurrence_search(lead, k, max(1, span))
            r = rec.n_star
            for s, m in _split_classes(p.length, r):
                act_s = [_mod1(_substitute(a, s, r)) for a in active]
                res_s = [_substitute(q, s, r) for q in resid]
                thetas = [_signed(a[k]) for a in act_s]
                for a, th in zip(act_s, thetas):
                    a[k] = Fraction(0)
                moved = [[Fraction(0)] * k + [th] + [Fraction(0)] * (3 - k) for th in thetas]
                res_s = [[x + y for x, y in zip(q, mv)] for q, mv in zip(res_s, moved)]
                u0 = 0
                for ell in _chop_lengths(thetas, k, m, budget):
                    piece = p.sub(s + r * u0, r, ell)
                    act = [_mod1(_substitute(a, u0, 1)) for a in act_s]
                    res = [_substitute(q, u0, 1) for q in res_s]
                    nxt.append((piece, act, res))
                    u0 += ell
        state = nxt
    pieces = []
    for p, active, resid in state:
        kappas = []
        residuals = []
        variations = []
        for a, q in zip(active, resid):
            # any leftover active terms (pieces of length 1) join the residual
            full = [x + y for x, y in zip(a, q)]
            kap = full[0] % 1
            res = [Fraction(0)] + full[1:]
            if p.length == 1:
                res = [Fraction(0)] * 4
            kappas.append(kap)
            residuals.append(res)
            variations.append(polynomial_range(res, p.length))
        pieces.append(Piece(p, kappas, residuals, variations))
        if any(v >= eps for v in variations):
            raise ArithmeticError("piece variation reached eps; reduction failed")
    pieces.sort(key=lambda pc: pc.progression)
    return pieces


def window_member(value: Fraction, j: int, k: int, offset=Fraction(0)) -> bool:
    """||value + offset - j/K|| <= 1/(2K)."""
    d = (to_fraction(value) + to_fraction(offset) - Fraction(j, k)) % 1
    return min(d, 1 - d) <= Fraction(1, 2 * k)


def _runs(mask: np.ndarray):
    """(start, length, value) of maximal constant runs."""
    if mask.size == 0:
        return []
    edges = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    starts = np.concatenate([[0], edges])
    ends = np.concatenate([edges, [mask.size]])
    return [(int(s), int(e - s), bool(mask[s])) for s, e in zip(starts, ends)]


def cut_by_window(
    pieces: Sequence,
    window: tuple,
    phase_index: int = 0,
    membership: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_runs: int = 7,
) -> List[Progression]:
    """Keep the maximal runs of each piece on which the window condition holds.

    ``pieces`` are Piece objects (their phase data decides membership) or
    bare Progressions together with ``membership``, a vectorised predicate
    on element arrays.  ``window`` is (j, K) or (j, K, offset).
    """
    j, k = window[0], window[1]
    off = window[2] if len(window) > 2 else Fraction(0)
    out = []
    for pc in pieces:
        prog = pc.progression if isinstance(pc, Piece) else pc
        if membership is not None:
            mask = np.asarray(membership(prog.elements()), dtype=bool)
        else:
            mask = np.array(
                [window_member(pc.value(phase_index, v), j, k, off) for v in range(prog.length)],
                dtype=bool,
            )
        runs = _runs(mask)
        if len(runs) > max_runs:
            raise WindowOverflow(f"piece {prog} crosses the window {len(runs) - 1} times")
        for s, ell, inside in runs:
            if inside:
                out.append(prog.sub(s, 1, ell))
    return sorted(out)
