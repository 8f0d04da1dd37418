"""Factors of Z/NZ, phase factors, projections and the energy-increment loop.

A factor is a partition of Z/NZ stored as a label array.  Labels are
canonical: atoms are numbered in order of their smallest element, so two
factors describing the same partition compare equal.

Phase factors B_{phi,K} put x in window j when ||phi(x) - j/K|| <= 1/(2K)
and collect points off the domain of phi in one more atom.  A fixed
offset sqrt(2)/(10K), truncated to 50 decimals, is added to every phase so
that no exact value can sit on a window boundary; if one does anyway the
construction aborts.

The correlation oracle is a finite search over global cubic phases
e((a x^3 + b x^2 + c x)/N) restricted to shifted Bohr sets of rank at most
two.  It is a stand-in for an inverse theorem: failing to find a witness
says nothing about the U^4 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal, localcontext
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np

from .bohr import BohrSpec, bohr_mask, shifted_spec
from .cyclic import CyclicFunction, to_fraction
from .gowers import u_norm
from .localpoly import PartialPhase

__all__ = [
    "Factor",
    "BoundaryCollision",
    "ResiduePhase",
    "PhaseFactorSpec",
    "CorrelationWitness",
    "SearchReport",
    "KvNStep",
    "KvNResult",
    "default_offset",
    "window_labels",
    "build_phase_factor",
    "join",
    "project",
    "energy",
    "coefficient_pairs",
    "cubic_correlation_search",
    "witness_components",
    "witness_factor",
    "kvn_decompose",
    "find_increment_atom",
]


class BoundaryCollision(ArithmeticError):
    """A phase value landed exactly on a window boundary."""


def _canonical(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels).reshape(-1)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inv].astype(np.int64)


class Factor:
    """A partition of Z/NZ; ``labels[x]`` is the atom id of x."""

    __slots__ = ("labels", "sizes")

    def __init__(self, labels):
        lab = _canonical(np.asarray(labels))
        if lab.size < 1:
            raise ValueError("empty modulus")
        lab.setflags(write=False)
        self.labels = lab
        self.sizes = np.bincount(lab)
        self.sizes.setflags(write=False)

    @property
    def modulus(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_atoms(self) -> int:
        return int(self.sizes.shape[0])

    def atom(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.labels == i)

    def atoms(self) -> list:
        order = np.argsort(self.labels, kind="stable")
        return np.split(order, np.cumsum(self.sizes)[:-1])

    def refines(self, other: "Factor") -> bool:
        """True when every atom of self lies inside one atom of other."""
        _check(self, other)
        pairs = np.unique(np.stack([self.labels, other.labels]), axis=1)
        return pairs.shape[1] == self.num_atoms

    def __eq__(self, other):
        return isinstance(other, Factor) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Factor(N={self.modulus}, atoms={self.num_atoms})"

    @classmethod
    def trivial(cls, n: int) -> "Factor":
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def discrete(cls, n: int) -> "Factor":
        return cls(np.arange(n))

    @classmethod
    def from_sets(cls, n: int, sets: Sequence[Sequence[int]]) -> "Factor":
        lab = np.full(n, -1, dtype=np.int64)
        for i, s in enumerate(sets):
            idx = np.asarray(list(s), dtype=np.int64) % n
            if np.any(lab[idx] >= 0):
                raise ValueError("sets overlap")
            lab[idx] = i
        if np.any(lab < 0):
            raise ValueError("sets do not cover Z/NZ")
        return cls(lab)


def _check(a, b):
    if a.modulus != b.modulus:
        raise ValueError(f"modulus mismatch: {a.modulus} vs {b.modulus}")


def join(a: Factor, b: Factor) -> Factor:
    """Common refinement: the nonempty intersections of atoms."""
    _check(a, b)
    return Factor(a.labels * b.num_atoms + b.labels)


def project(f: CyclicFunction, b: Factor) -> CyclicFunction:
    """Pi_B f: replace f on each atom by its average there."""
    _check(f, b)
    v = f.values
    re = np.bincount(b.labels, weights=v.real) / b.sizes
    im = np.bincount(b.labels, weights=v.imag) / b.sizes
    return CyclicFunction((re + 1j * im)[b.labels])


def energy(f: CyclicFunction, b: Factor) -> float:
    """||Pi_B f||_{L^2}^2 computed from atom sums."""
    v = f.values
    re = np.bincount(b.labels, weights=v.real)
    im = np.bincount(b.labels, weights=v.imag)
    return float(np.sum((re**2 + im**2) / b.sizes) / f.modulus)


# phase factors --------------------------------------------------------------

def default_offset(k: int) -> Fraction:
    """sqrt(2)/(10K) truncated to 50 decimal digits."""
    with localcontext() as ctx:
        ctx.prec = 80
        val = Decimal(2).sqrt() / (10 * k)
        val = val.quantize(Decimal(1).scaleb(-50), rounding=ROUND_DOWN)
    return Fraction(val)


@dataclass(frozen=True)
class ResiduePhase:
    """phi(x) = P(x)/N mod 1 for an integer polynomial P, on a domain mask.

    ``coeffs`` are (c0, c1, c2, c3) with P(x) = c0 + c1 x + c2 x^2 + c3 x^3.
    """

    modulus: int
    coeffs: tuple
    domain: Optional[np.ndarray] = None

    def numerators(self) -> np.ndarray:
        n = self.modulus
        if n >= 2**31:
            raise ValueError("residue phases need N < 2^31")
        x = np.arange(n, dtype=np.int64)
        acc = np.zeros(n, dtype=np.int64)
        xp = np.ones(n, dtype=np.int64)
        for c in self.coeffs:
            acc = (acc + (int(c) % n) * xp % n) % n
            xp = xp * x % n
        return acc

    def mask(self) -> np.ndarray:
        if self.domain is None:
            return np.ones(self.modulus, dtype=bool)
        return np.asarray(self.domain, dtype=bool)

    def value(self, x: int) -> Fraction:
        p = sum(int(c) * x**i for i, c in enumerate(self.coeffs))
        return Fraction(p % self.modulus, self.modulus)


@dataclass(frozen=True)
class PhaseFactorSpec:
    phase: object  # PartialPhase or ResiduePhase
    resolution: int
    offset: Optional[Fraction] = None

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution K must be >= 1")
        off = default_offset(self.resolution) if self.offset is None else to_fraction(self.offset)
        if not (0 <= off < Fraction(1, 2 * self.resolution)):
            raise ValueError("offset must lie in [0, 1/(2K))")
        object.__setattr__(self, "offset", off)


def window_labels(spec: PhaseFactorSpec) -> np.ndarray:
    """Window index j in 0..K-1 for each residue, -1 off the domain."""
    k = spec.resolution
    off = spec.offset
    ph = spec.phase
    if isinstance(ph, ResiduePhase):
        n = ph.modulus
        num = ph.numerators()
        mask = ph.mask()
        d = off.denominator
        p = off.numerator
        # j = floor(K (num/N + p/d) + 1/2); boundary iff that argument is an integer
        top = 2 * k * d * num.astype(object) + (2 * k * p + d) * n
        bot = 2 * n * d
        j = top // bot
        if np.any((top % bot == 0) & mask):
            raise BoundaryCollision("a residue phase sits on a window boundary")
        out = np.where(mask, (j % k).astype(np.int64), -1)
        return out.astype(np.int64)
    if not isinstance(ph, PartialPhase):
        raise TypeError("phase must be a PartialPhase or ResiduePhase")
    out = np.full(ph.modulus, -1, dtype=np.int64)
    for x, v in ph.values.items():
        if isinstance(v, Fraction):
            t = k * (v + off)
            j = math.floor(t + Fraction(1, 2))
            if t + Fraction(1, 2) == j:
                raise BoundaryCollision(f"phase value at x={x} sits on a boundary")
        else:
            t = k * (float(v) + float(off))
            r = t + 0.5 - math.floor(t + 0.5)
            if min(r, 1 - r) < 1e-12:
                raise BoundaryCollision(f"phase value at x={x} is within 1e-12 of a boundary")
            j = math.floor(t + 0.5)
        out[x] = j % k
    return out


def build_phase_factor(spec: PhaseFactorSpec) -> Factor:
    """B_{phi,K}: windows of phi plus the off-domain atom."""
    return Factor(window_labels(spec))


# correlation oracle ---------------------------------------------------------

@dataclass(frozen=True)
class CorrelationWitness:
    """|E_t 1_{y+B}(t) f(t) e(-(a t^3 + b t^2 + c t)/N)| >= threshold."""

    modulus: int
    bohr: Optional[BohrSpec]
    shift: int
    coeffs: tuple  # (a, b, c)
    correlation: float

    @property
    def rank(self) -> int:
        return 0 if self.bohr is None else self.bohr.rank

    def host_mask(self) -> np.ndarray:
        if self.bohr is None:
            return np.ones(self.modulus, dtype=bool)
        return bohr_mask(shifted_spec(self.bohr, self.shift))

    def phase(self) -> ResiduePhase:
        a, b, c = self.coeffs
        return ResiduePhase(self.modulus, (0, c, b, a))

    def recompute(self, f: CyclicFunction) -> float:
        n = self.modulus
        num = self.phase().numerators()
        w = np.exp(-2j * np.pi * (num / n))
        return float(abs(np.sum(f.values * w * self.host_mask()) / n))

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "bohr": None if self.bohr is None else self.bohr.to_json(),
            "shift": self.shift,
            "coeffs": list(self.coeffs),
            "correlation": round(self.correlation, 12),
        }


@dataclass
class SearchReport:
    best: Optional[CorrelationWitness]
    candidates: int
    exhausted_budget: bool

    def witness(self, threshold: float) -> Optional[CorrelationWitness]:
        if self.best is not None and self.best.correlation >= threshold:
            return self.best
        return None


def _sym(a: int, n: int) -> int:
    a %= n
    return a - n if 2 * a > n else a


def coefficient_pairs(n: int, max_height: Optional[int] = None) -> list:
    """(a, b) residues ordered by height max(|a|,|b|) of symmetric representatives."""
    h_max = n // 2 if max_height is None else min(max_height, n // 2)
    pairs = []
    reps = [r for r in range(-h_max, h_max + 1)]
    for a in reps:
        for b in reps:
            pairs.append((max(abs(a), abs(b)), a % n, b % n))
    pairs = sorted(set(pairs))
    return [(a, b) for _, a, b in pairs]


def _hosts(n: int, rank_cap: int, radius: Fraction):
    """Yield (BohrSpec or None, shift, mask) in canonical order, skipping repeats."""
    yield None, 0, np.ones(n, dtype=bool)
    seen = {np.ones(n, dtype=bool).tobytes()}
    half = list(range(1, (n - 1) // 2 + 1))
    for rank in range(1, rank_cap + 1):
        combos = [(xi,) for xi in half] if rank == 1 else [
            (x1, x2) for i, x1 in enumerate(half) for x2 in half[i + 1 :]
        ]
        for freqs in combos:
            spec = BohrSpec(n, freqs, radius)
            base = bohr_mask(spec)
            for y in range(n):
                m = np.roll(base, y)
                key = m.tobytes()
                if key in seen:
                    continue
                seen.add(key)
                yield spec, y, m


def cubic_correlation_search(
    f: CyclicFunction,
    budget: int,
    threshold: float,
    rank_cap: int = 2,
    radius=Fraction(1, 100),
    max_height: Optional[int] = None,
    report: bool = False,
):
    """Best correlation of f with a cubic phase on a shifted Bohr set.

    Candidates are (host, a, b, c); each (host, a, b) costs N candidates
    because all c are read off one FFT.  The scan order is hosts (rank 0
    first), then coefficient pairs by height, then c; the earliest candidate
    wins ties (correlations compared after rounding to 12 decimals).
    """
    n = f.modulus
    radius = to_fraction(radius)
    pairs = coefficient_pairs(n, max_height)
    x = np.arange(n, dtype=np.int64)
    x2 = x * x % n
    x3 = x2 * x % n
    roots = np.exp(-2j * np.pi * (np.arange(n) / n))
    best = None
    best_key = -1.0
    used = 0
    exhausted = False
    chunk = max(1, (1 << 20) // n)
    for spec, y, mask in _hosts(n, rank_cap, radius):
        if not mask.any():
            continue
        base = f.values * mask
        if not np.any(base):
            continue
        i = 0
        while i < len(pairs):
            room = (budget - used) // n
            if room <= 0:
                exhausted = True
                break
            block = pairs[i : i + min(chunk, room)]
            ab = np.array(block, dtype=np.int64)
            res = (ab[:, :1] * x3[None, :] + ab[:, 1:] * x2[None, :]) % n
            rows = base[None, :] * roots[res]
            corr = np.abs(np.fft.fft(rows, axis=1)) / n
            used += n * len(block)
            flat = np.round(corr, 12)
            r, c = np.unravel_index(int(np.argmax(flat)), flat.shape)
            if flat[r, c] > best_key:
                best_key = float(flat[r, c])
                a_, b_ = block[r]
                best = CorrelationWitness(n, spec, int(y), (int(a_), int(b_), int(c)), float(corr[r, c]))
            i += len(block)
        if exhausted:
            break
    rep = SearchReport(best, used, exhausted)
    if report:
        return rep
    return rep.witness(threshold)


# witness factors ------------------------------------------------------------

def witness_components(w: CorrelationWitness, k: int, offset: Optional[Fraction] = None) -> list:
    """Phase factor specs realising the witness at resolution K.

    Linear phases xi (x - y)/N for xi in S, then the cubic phase of the
    witness on T2 = {x : every linear phase lies within (2 floor(K rho) - 1)/(2K)
    of 0}; T2 is a union of windows of the linear phases, hence measurable
    for their join, and it sits inside y + B(S, rho).
    """
    n = w.modulus
    comps = []
    domain = np.ones(n, dtype=bool)
    if w.bohr is not None:
        m = math.floor(k * w.bohr.radius)
        if m < 1:
            raise ValueError("resolution K is too coarse for the Bohr radius (need K >= 1/rho)")
        for xi in w.bohr.frequencies:
            spec = PhaseFactorSpec(ResiduePhase(n, (-xi * w.shift, xi, 0, 0)), k, offset)
            comps.append(spec)
            lab = window_labels(spec)
            signed = np.where(lab > k // 2, lab - k, lab)
            domain &= np.abs(signed) <= m - 1
    a, b, c = w.coeffs
    comps.append(PhaseFactorSpec(ResiduePhase(n, (0, c, b, a), domain), k, offset))
    return comps


def witness_factor(w: CorrelationWitness, k: int, offset: Optional[Fraction] = None) -> Factor:
    comps = witness_components(w, k, offset)
    out = Factor.trivial(w.modulus)
    for spec in comps:
        out = join(out, build_phase_factor(spec))
    return out


# Koopman-von Neumann loop ----------------------------------------------------

@dataclass(frozen=True)
class KvNStep:
    step: int
    energy: float
    residual_norm: float
    atoms: int
    witness: Optional[CorrelationWitness]


@dataclass
class KvNResult:
    factor: Factor
    outcome: str  # converged | oracle_failed | cap_reached
    trace: List[KvNStep]
    components: list = field(default_factory=list)
    detail: str = ""
    best_witness: Optional[CorrelationWitness] = None

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


def kvn_decompose(
    f: CyclicFunction,
    eta: float,
    oracle: Callable[[CyclicFunction], object],
    resolution: int = 64,
    threshold: float = 0.0,
    max_iterations: int = 8,
    max_atoms: Optional[int] = None,
    initial: Optional[Factor] = None,
    norm: Optional[Callable[[CyclicFunction], float]] = None,
) -> KvNResult:
    """Refine a factor until ||f - Pi_B f||_{U^4} <= eta, or report why not.

    ``oracle(g)`` returns a CorrelationWitness, a SearchReport, or None.
    Every accepted witness must raise the energy ||Pi_B f||^2 by at least
    threshold^2; one that does not ends the loop as ``oracle_failed``.
    """
    vals = f.values
    if np.any(np.abs(vals.imag) > 1e-12) or vals.real.min() < -1e-12 or vals.real.max() > 1 + 1e-12:
        raise ValueError("kvn_decompose expects f with values in [0, 1]")
    norm = norm or (lambda g: u_norm(g, 4))
    b = initial if initial is not None else Factor.trivial(f.modulus)
    comps: list = []
    trace: List[KvNStep] = []
    pending = None
    best_seen = None
    for step in range(max_iterations + 1):
        g = f - project(f, b)
        r = norm(g)
        e = energy(f, b)
        if trace and e < trace[-1].energy + threshold**2 - 1e-15:
            raise AssertionError("energy increment below threshold^2")
        trace.append(KvNStep(step, e, r, b.num_atoms, pending))
        if r <= eta:
            return KvNResult(b, "converged", trace, comps, best_witness=best_seen)
        if step == max_iterations:
            return KvNResult(b, "cap_reached", trace, comps, "iteration cap", best_seen)
        out = oracle(g)
        if isinstance(out, SearchReport):
            if out.best is not None:
                best_seen = out.best
            out = out.witness(threshold)
        if out is None:
            return KvNResult(b, "oracle_failed", trace, comps, "no witness above threshold", best_seen)
        best_seen = out
        new_comps = witness_components(out, resolution)
        nb = b
        for spec in new_comps:
            nb = join(nb, build_phase_factor(spec))
        if max_atoms is not None and nb.num_atoms > max_atoms:
            return KvNResult(b, "cap_reached", trace, comps, "atom cap", best_seen)
        gain = energy(f, nb) - e
        if gain < threshold**2 or gain <= 0:
            return KvNResult(
                b, "oracle_failed", trace, comps,
                f"witness raised energy by {gain:.3e} < threshold^2 at K={resolution}",
                best_seen,
            )
        b = nb
        comps.extend(new_comps)
        pending = out
    raise AssertionError("unreachable")


def find_increment_atom(
    f: CyclicFunction,
    b: Factor,
    delta: float,
    c_prime: float,
    size_floor: float,
) -> Optional[int]:
    """Atom of measure >= size_floor with the largest mean >= (1+c')delta."""
    _check(f, b)
    sums = np.bincount(b.labels, weights=f.values.real)
    means = sums / b.sizes
    measures = b.sizes / f.modulus
    ok = (measures >= size_floor) & (means >= (1 + c_prime) * delta)
    if not ok.any():
        return None
    cand = np.flatnonzero(ok)
    top = means[cand].max()
    return int(cand[means[cand] == top][0])
