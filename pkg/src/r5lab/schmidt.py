"""Lattices, theta functions and simultaneous polynomial recurrence.

The averaged theta function

    F_{L,alpha}(N) = det(L) E_{|n|<=N} Theta_L(1, n^k alpha)
                   = sum_{xi in L*} exp(-pi |xi|^2) E_{|n|<=N} e(n^k xi.alpha)

is computed in both forms and the two are required to agree.  Theta sums
are truncated with a rigorous tail bound: after reducing x into the
fundamental parallelepiped, a coefficient vector c at sup-distance j from
the box centre gives a point at distance at least sigma_min (j - 1/2),
and there are at most 2d(2j+1)^(d-1) vectors on that shell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Lattice",
    "LatticeError",
    "ThetaTruncationError",
    "SchmidtExhausted",
    "RecurrenceCertificate",
    "WeylResult",
    "DescentResult",
    "RecurrenceResult",
    "dual_lattice",
    "theta",
    "capital_a",
    "f_avg",
    "f_avg_forms",
    "weyl_test",
    "c_infinity_norm",
    "search_dual_recurrence",
    "schmidt_alternative",
    "descent_step",
    "recurrence_search",
    "shortest_vector",
]

DEFAULT_POINT_CAP = 2_000_000


class LatticeError(ValueError):
    pass


class ThetaTruncationError(RuntimeError):
    """The requested tolerance needs more lattice points than the cap allows."""


class SchmidtExhausted(RuntimeError):
    """No (xi, q) in the search window met the bound; carries the best candidate."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class Lattice:
    """Full-rank lattice in R^d; columns of ``basis`` are the generators."""

    def __init__(self, basis):
        b = np.array(basis, dtype=float, ndmin=2)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise LatticeError("basis must be a square matrix")
        if not np.all(np.isfinite(b)):
            raise LatticeError("basis has non-finite entries")
        det = abs(float(np.linalg.det(b)))
        if det < 1e-9:
            raise LatticeError(f"basis is (nearly) singular, |det| = {det:.3e}")
        b.setflags(write=False)
        self.basis = b
        self.det = det
        self._inv = np.linalg.inv(b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def integer(cls, d: int) -> "Lattice":
        return cls(np.eye(d))

    def scaled(self, c: float) -> "Lattice":
        return Lattice(c * self.basis)

    def coords(self, x) -> np.ndarray:
        return self._inv @ np.asarray(x, dtype=float)

    def point(self, c) -> np.ndarray:
        return self.basis @ np.asarray(c, dtype=float)

    def reduce(self, x) -> np.ndarray:
        """x minus the nearest lattice point in coefficient rounding."""
        x = np.asarray(x, dtype=float)
        return x - self.basis @ np.round(self._inv @ x)

    def sigma_min(self) -> float:
        return float(np.linalg.svd(self.basis, compute_uv=False).min())

    def check_determinant(self) -> bool:
        return abs(abs(np.linalg.det(self.basis)) - self.det) <= 1e-10 * max(1.0, self.det)

    def __repr__(self):
        return f"Lattice(d={self.dim}, det={self.det:.6g})"


def dual_lattice(lam: Lattice) -> Lattice:
    """Basis inv(B)^T; checks integrality of all pairings."""
    dual = Lattice(np.linalg.inv(lam.basis).T)
    gram = dual.basis.T @ lam.basis
    if np.max(np.abs(gram - np.round(gram))) > 1e-9:
        raise LatticeError("dual basis pairings are not integral (ill-conditioned input)")
    return dual


def _shell_tail(d: int, sigma: float, t: float, start: int) -> float:
    """Upper bound for the sum over coefficient shells j > start."""
    total = 0.0
    j = start + 1
    while True:
        dist = sigma * (j - 0.5)
        term = 2 * d * (2 * j + 1) ** (d - 1) * math.exp(-math.pi * t * dist * dist)
        total += term
        if dist > 0 and term < 1e-300:
            break
        if j > start + 10 and term < total * 1e-17:
            break
        j += 1
    return total


def _radius_for(lam: Lattice, t: float, tol: float, cap: int) -> int:
    d = lam.dim
    sigma = lam.sigma_min()
    j = 1
    while _shell_tail(d, sigma, t, j) >= tol:
        j += 1
        if (2 * j + 1) ** d > cap:
            raise ThetaTruncationError(
                f"tolerance {tol:g} needs more than {cap} lattice points"
            )
    return j


def _box(d: int, j: int) -> np.ndarray:
    r = np.arange(-j, j + 1)
    grids = np.meshgrid(*([r] * d), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def theta(lam: Lattice, t: float, x=None, tol: float = 1e-12, cap: int = DEFAULT_POINT_CAP) -> float:
    """Theta_L(t, x) = sum_{m in L} exp(-pi t |x - m|^2) to within tol."""
    if not t > 0:
        raise ValueError("t must be positive")
    d = lam.dim
    x = np.zeros(d) if x is None else np.asarray(x, dtype=float).reshape(d)
    xr = lam.reduce(x)
    j = _radius_for(lam, t, tol, cap)
    pts = _box(d, j) @ lam.basis.T
    diff = pts - xr
    return float(np.sum(np.exp(-math.pi * t * np.einsum("ij,ij->i", diff, diff))))


def capital_a(lam: Lattice, tol: float = 1e-12) -> float:
    """A_L = Theta_{L*}(1, 0) = det(L) Theta_L(1, 0); both forms are checked."""
    a1 = theta(dual_lattice(lam), 1.0, None, tol)
    a2 = lam.det * theta(lam, 1.0, None, tol / max(lam.det, 1.0))
    if abs(a1 - a2) > 10 * tol * max(1.0, a1):
        raise ArithmeticError(f"A_L forms disagree: {a1!r} vs {a2!r}")
    return a1


def f_avg_forms(lam: Lattice, alpha, k: int, n, tol: float = 1e-10):
    """(primal, dual) values of F_{L,alpha}(N); N may be real (floor is used)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = math.floor(n)
    if m < 0:
        raise ValueError("N must be >= 0")
    d = lam.dim
    alpha = np.asarray(alpha, dtype=float).reshape(d)
    ns = np.arange(-m, m + 1)
    ptol = tol / max(lam.det, 1.0)
    primal = lam.det * float(np.mean([theta(lam, 1.0, (float(t) ** k) * alpha, ptol) for t in ns]))
    dual = dual_lattice(lam)
    j = _radius_for(dual, 1.0, tol, DEFAULT_POINT_CAP)
    xis = _box(d, j) @ dual.basis.T
    weights = np.exp(-math.pi * np.einsum("ij,ij->i", xis, xis))
    dots = xis @ alpha
    nk = ns.astype(float) ** k
    avg = np.mean(np.cos(2 * math.pi * np.outer(dots, nk)), axis=1)
    dual_val = float(np.sum(weights * avg))
    return primal, dual_val


def f_avg(lam: Lattice, alpha, k: int, n, tol: float = 1e-10) -> float:
    primal, dual_val = f_avg_forms(lam, alpha, k, n, tol)
    if abs(primal - dual_val) > 10 * tol * max(1.0, abs(primal)):
        raise ArithmeticError(f"Poisson forms disagree: {primal!r} vs {dual_val!r}")
    return primal


# Weyl test -------------------------------------------------------------------

def _dist_frac(x: Fraction) -> Fraction:
    r = x - math.floor(x)
    return min(r, 1 - r)


def c_infinity_norm(coeffs: Sequence, n: int) -> Fraction:
    """max_{0<i<=k} N^i ||a_i||_{R/Z} for g = sum a_i n^i."""
    cs = [Fraction(c) for c in coeffs]
    return max((Fraction(n) ** i * _dist_frac(c) for i, c in enumerate(cs) if i > 0), default=Fraction(0))


@dataclass(frozen=True)
class WeylResult:
    ell: Optional[int]
    norm: Optional[Fraction]
    average: float
    precondition: bool  # |E e(g)| >= delta
    regime: bool  # N >= delta^{-C}
    ell_max: int


def weyl_test(coeffs: Sequence, delta: float, n: int, c: float = 3.0) -> WeylResult:
    """Smallest l <= ceil(delta^-C) with ||l g||_{C^inf[N]} <= delta^-C.

    The precondition and the large-N regime are evaluated and reported;
    the search runs regardless, so callers can see what happens outside
    the hypotheses.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    cs = [Fraction(x) for x in coeffs]
    total = 0j
    for t in range(1, n + 1):
        v = sum((a * t**i for i, a in enumerate(cs)), Fraction(0)) % 1
        total += complex(math.cos(2 * math.pi * v), math.sin(2 * math.pi * v))
    avg = abs(total) / n
    bound = Fraction(delta) ** (-c) if float(c).is_integer() else Fraction(delta**-c)
    ell_max = math.ceil(bound)
    for ell in range(1, ell_max + 1):
        nv = c_infinity_norm([ell * a for a in cs], n)
        if nv <= bound:
            return WeylResult(ell, nv, avg, avg >= delta, n >= bound, ell_max)
    return WeylResult(None, None, avg, avg >= delta, n >= bound, ell_max)


# Schmidt alternative -----------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceCertificate:
    """Either F >= 1/2 (branch 'average') or a short primitive dual vector."""

    branch: str  # 'average' | 'recurrence'
    value: float  # F in the first branch, ||q xi.alpha|| in the second
    q: Optional[int] = None
    xi: Optional[tuple] = None
    xi_coords: Optional[tuple] = None  # integer coordinates in the dual basis
    xi_bound: Optional[float] = None  # the window M on |xi|
    q_bound: Optional[int] = None
    value_bound: Optional[float] = None  # A^C N^-k

    def check(self, lam: Lattice, alpha, k: int, n) -> bool:
        if self.branch == "average":
            return self.value >= 0.5
        z = np.array(self.xi_coords, dtype=np.int64)
        if not z.any() or reduce(math.gcd, (int(abs(t)) for t in z)) != 1:
            return False
        xi = dual_lattice(lam).point(z)
        if not np.allclose(xi, self.xi, atol=1e-9):
            return False
        val = _dist(self.q * float(xi @ np.asarray(alpha, dtype=float)))
        ok = abs(val - self.value) <= 1e-9 and self.q >= 1
        if self.xi_bound is not None:
            ok = ok and np.linalg.norm(xi) <= self.xi_bound + 1e-12
        if self.q_bound is not None:
            ok = ok and self.q <= self.q_bound
        if self.value_bound is not None:
            ok = ok and self.value <= self.value_bound + 1e-12
        return bool(ok)


def _dist(x: float) -> float:
    return abs(x - round(x))


def _primitive_coords(lam: Lattice, radius: float):
    """Primitive vectors of L with |v| <= radius, one of each +-pair, with coords."""
    inv_rows = np.linalg.norm(lam._inv, axis=1)
    widths = [int(math.floor(radius * r + 1e-9)) for r in inv_rows]
    ranges = [np.arange(-w, w + 1) for w in widths]
    grids = np.meshgrid(*ranges, indexing="ij")
    cs = np.stack([g.reshape(-1) for g in grids], axis=1)
    pts = cs @ lam.basis.T
    norms = np.linalg.norm(pts, axis=1)
    out = []
    for c, p, r in zip(cs, pts, norms):
        if r > radius + 1e-12 or not c.any():
            continue
        nz = c[np.flatnonzero(c)[0]]
        if nz < 0:
            continue
        if reduce(math.gcd, (int(abs(t)) for t in c)) != 1:
            continue
        out.append((float(r), tuple(int(t) for t in c), tuple(float(t) for t in p)))
    out.sort()
    return out


def search_dual_recurrence(lam: Lattice, alpha, q_max: int, xi_max: float):
    """Best (xi, q): minimal ||q xi.alpha||, ties by (|xi|, q, coords).

    Returns (value, q, xi_coords, xi) over primitive xi in L* with
    |xi| <= xi_max and 1 <= q <= q_max, or None if the window is empty.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(lam.dim)
    dual = dual_lattice(lam)
    best = None
    for r, coords, xi in _primitive_coords(dual, xi_max):
        dot = float(np.dot(xi, alpha))
        for q in range(1, q_max + 1):
            v = round(_dist(q * dot), 12)
            key = (v, round(r, 12), q, coords)
            if best is None or key < best[0]:
                best = (key, (_dist(q * dot), q, coords, xi))
    return None if best is None else best[1]


def schmidt_alternative(
    lam: Lattice, alpha, k: int, n, c: float = 3.0, q_max: Optional[int] = None, tol: float = 1e-10
) -> RecurrenceCertificate:
    f = f_avg(lam, alpha, k, n, tol)
    if f >= 0.5:
        return RecurrenceCertificate("average", f)
    a = capital_a(lam)
    d = lam.dim
    m = 4 * (math.sqrt(d) + math.sqrt(math.log(a)))
    qb = math.ceil(d * a**c) if q_max is None else q_max
    vb = a**c * float(n) ** (-k)
    found = search_dual_recurrence(lam, alpha, qb, m)
    if found is None:
        raise SchmidtExhausted("no primitive dual vector inside the window")
    val, q, coords, xi = found
    cert = RecurrenceCertificate("recurrence", val, q, xi, coords, m, qb, vb)
    if val > vb:
        raise SchmidtExhausted(
            f"best ||q xi.alpha|| = {val:.3e} exceeds A^C N^-k = {vb:.3e}; raise C", cert
        )
    return cert


def shortest_vector(lam: Lattice) -> float:
    """Length of a shortest nonzero vector (enumeration in a safe box)."""
    radius = float(np.linalg.norm(lam.basis, axis=0).min())
    return _primitive_coords(lam, radius)[0][0]


# descent ---------------------------------------------------------------------

def _unimodular_completion(z: Sequence[int]) -> np.ndarray:
    """Integer U with det +-1 and z^T U = e_d^T (z primitive)."""
    d = len(z)
    w = [int(t) for t in z]
    u = [[int(i == j) for j in range(d)] for i in range(d)]

    def colop(dst, src, m):  # col dst -= m * col src
        for i in range(d):
            u[i][dst] -= m * u[i][src]
        w[dst] -= m * w[src]

    while sum(1 for t in w if t) > 1:
        piv = min((i for i in range(d) if w[i]), key=lambda i: abs(w[i]))
        for j in range(d):
            if j != piv and w[j]:
                colop(j, piv, w[j] // w[piv])
    piv = next(i for i in range(d) if w[i])
    if abs(w[piv]) != 1:
        raise LatticeError("dual vector is not primitive")
    last = d - 1
    if piv != last:
        for i in range(d):
            u[i][piv], u[i][last] = u[i][last], u[i][piv]
        w[piv], w[last] = w[last], w[piv]
    if w[last] == -1:
        for i in range(d):
            u[i][last] = -u[i][last]
        w[last] = 1
    return np.array(u, dtype=float)


def _rotation_to_last_axis(u: np.ndarray) -> np.ndarray:
    """Proper rotation R with R u = e_d for a unit vector u (d >= 2)."""
    d = u.shape[0]
    e = np.zeros(d)
    e[-1] = 1.0
    v = u - e
    if np.linalg.norm(v) < 1e-15:
        return np.eye(d)
    h = np.eye(d) - 2.0 * np.outer(v, v) / float(v @ v)
    flip = np.eye(d)
    flip[0, 0] = -1.0
    return flip @ h


@dataclass(frozen=True)
class DescentResult:
    lattice: Optional[Lattice]  # None once the dimension reaches 0
    alpha: Optional[np.ndarray]
    n_prime: float
    n_star: float
    beta: Optional[np.ndarray]
    rotation: Optional[np.ndarray]
    degenerate: bool  # N* < 1
    b4_lhs: Optional[float] = None
    b4_rhs: Optional[float] = None

    @property
    def b4_holds(self) -> Optional[bool]:
        if self.b4_lhs is None:
            return None
        return self.b4_lhs >= self.b4_rhs - 1e-9


def descent_step(lam: Lattice, alpha, k: int, n, cert: RecurrenceCertificate, verify: bool = True) -> DescentResult:
    """One dimension-reduction step driven by a recurrence certificate.

    Rotates so xi points along e_d, rounds q^k alpha to beta with
    beta.xi in Z, and returns L' = (1+1/d)(L_rot cap xi-perp) inside
    R^{d-1}, alpha' = (1+1/d) pi(beta - m0) where m0 in L_rot has
    xi.m0 = beta.xi, and N' = N*/q with
    N* = min(N, (d |beta - q^k alpha|)^(-1/k)).
    """
    if cert.branch != "recurrence":
        raise ValueError("descent needs a recurrence certificate")
    if not cert.check(lam, alpha, k, n):
        raise ValueError("certificate does not verify against this lattice")
    d = lam.dim
    alpha = np.asarray(alpha, dtype=float).reshape(d)
    q = cert.q
    xi = dual_lattice(lam).point(cert.xi_coords)
    norm_xi = float(np.linalg.norm(xi))
    if d == 1:
        beta = np.array([math.floor(q**k * alpha[0] * norm_xi + 0.5) / norm_xi])
        gap = float(abs(beta[0] - q**k * alpha[0]))
        n_star = float(n) if gap == 0 else min(float(n), (d * gap) ** (-1.0 / k))
        return DescentResult(None, None, n_star / q, n_star, beta, np.eye(1), n_star < 1)
    rot = _rotation_to_last_axis(xi / norm_xi)
    umat = _unimodular_completion(cert.xi_coords)
    basis_r = rot @ lam.basis @ umat
    alpha_r = rot @ alpha
    qa = q**k * alpha_r
    beta = qa.copy()
    j = math.floor(qa[-1] * norm_xi + 0.5)
    beta[-1] = j / norm_xi
    gap = float(np.linalg.norm(beta - qa))
    n_star = float(n) if gap == 0 else min(float(n), (d * gap) ** (-1.0 / k))
    s = 1.0 + 1.0 / d
    sub = s * basis_r[:, : d - 1]
    if np.max(np.abs(sub[-1])) > 1e-9 * max(1.0, np.abs(sub).max()):
        raise ArithmeticError("rotated sublattice is not orthogonal to xi")
    new_lam = Lattice(sub[:-1])
    m0 = j * basis_r[:, d - 1]
    alpha_new = s * (beta - m0)[:-1]
    res = DescentResult(new_lam, alpha_new, n_star / q, n_star, beta, rot, n_star < 1)
    if verify and n_star >= 1:
        mid = Lattice(s * basis_r)
        lhs = f_avg(mid, s * beta, k, n_star / q)
        rhs = mid.det / new_lam.det * f_avg(new_lam, alpha_new, k, n_star / q)
        res = DescentResult(new_lam, alpha_new, n_star / q, n_star, beta, rot, False, lhs, rhs)
    return res


# recurrence search -------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceResult:
    n_star: int
    value: Fraction
    bound: float
    bound_holds: bool

    @property
    def value_float(self) -> float:
        return float(self.value)


def recurrence_search(alphas: Sequence, k: int, n: int, c: float = 0.1, cap: int = 10**7) -> RecurrenceResult:
    """min over 1 <= m <= N of max_i ||alpha_i m^k||, exactly.

    Floats are taken at their exact binary value.  The smallest minimiser
    is returned, with the template bound d N^(-c/d^2) and whether it holds.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    d = len(alphas)
    if d == 0:
        raise ValueError("need at least one alpha")
    if n * d > cap:
        raise ValueError(f"scan of {n * d} evaluations exceeds cap {cap}")
    fr = [Fraction(a) for a in alphas]
    q = reduce(lambda x, y: x * y // math.gcd(x, y), (f.denominator for f in fr), 1)
    nums = [f.numerator * (q // f.denominator) for f in fr]
    best_n, best_v = 0, None
    for m in range(1, n + 1):
        mk = m**k
        v = 0
        for p in nums:
            r = (p * mk) % q
            r = min(r, q - r)
            if r > v:
                v = r
                if best_v is not None and v >= best_v:
                    break
        if best_v is None or v < best_v:
            best_n, best_v = m, v
            if v == 0:
                break
    value = Fraction(best_v, q)
    bound = d * float(n) ** (-c / d**2)
    return RecurrenceResult(best_n, value, bound, float(value) <= bound)
