"""Discrete derivatives and Gowers U^k norms on Z/NZ.

``u_norm`` offers three exact evaluation paths:

``direct``
    the reference enumeration of every (x, h_1, ..., h_k), run by the
    kernel backend;
``recursive``
    peel off k-2 derivatives and finish with the Fourier identity
    ||g||_{U^2}^4 = sum |ghat|^4;
``support``
    for f supported on an arc of length L with N >= (k+1)L, every cube
    with all vertices in the arc is an honest integer cube, so the sum can
    be taken over Z with shifts in (-L, L) and sign/permutation symmetry.

All three agree to rounding error; the tests check this.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _kernels
from .cyclic import CyclicFunction

__all__ = [
    "DEFAULT_WORK_CAP",
    "WorkCapExceeded",
    "DerivativeVector",
    "mult_derivative",
    "mult_derivative_vector",
    "add_derivative",
    "u_norm",
    "u_norm_power",
    "u_norm_sampled",
    "support_arc",
]

DEFAULT_WORK_CAP = 10**9


class WorkCapExceeded(RuntimeError):
    """An exact computation would exceed its configured tuple budget."""


@dataclass(frozen=True)
class DerivativeVector:
    modulus: int
    shifts: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "shifts", tuple(int(h) % self.modulus for h in self.shifts)
        )


def mult_derivative(f: CyclicFunction, h: int) -> CyclicFunction:
    """x -> f(x) conj(f(x+h))."""
    v = f.values
    return CyclicFunction(v * np.conj(np.roll(v, -(int(h) % f.modulus))))


def mult_derivative_vector(f: CyclicFunction, hs) -> CyclicFunction:
    if isinstance(hs, DerivativeVector):
        hs = hs.shifts
    for h in hs:
        f = mult_derivative(f, h)
    return f


def add_derivative(phi: Mapping[int, object], h: int, modulus: int) -> dict:
    """(d_h phi)(x) = phi(x) - phi(x+h) in R/Z, on points where both exist."""
    out = {}
    for x, v in phi.items():
        y = (x + h) % modulus
        if y in phi:
            out[x] = (v - phi[y]) % 1
    return out


def support_arc(values: np.ndarray, tol: float = 0.0):
    """Shortest cyclic arc (start, length) containing every nonzero value."""
    n = values.shape[0]
    nz = np.flatnonzero(np.abs(values) > tol)
    if nz.size == 0:
        return 0, 0
    if nz.size == 1:
        return int(nz[0]), 1
    gaps = np.diff(np.concatenate([nz, [nz[0] + n]]))
    i = int(np.argmax(gaps))
    start = int(nz[(i + 1) % nz.size])
    return start, int(n - gaps[i] + 1)


def _pow_recursive(v: np.ndarray, k: int) -> complex:
    n = v.shape[0]
    if k == 1:
        m = v.mean()
        return complex(m * np.conj(m))
    if k == 2:
        fh = np.fft.fft(v) / n
        return complex(np.sum(np.abs(fh) ** 4))
    # enumerate the first k-3 shifts, batch the (k-2)-th over all h
    idx = (np.arange(n)[None, :] + np.arange(n)[:, None]) % n
    total = 0j
    for hs in itertools.product(range(n), repeat=k - 3):
        g = v
        for h in hs:
            g = g * np.conj(np.roll(g, -h))
        rows = g[None, :] * np.conj(g[idx])
        fh = np.fft.fft(rows, axis=1) / n
        total += np.sum(np.abs(fh) ** 4) / n
    return total / n ** (k - 3)


def _pow_support(v: np.ndarray, k: int, start: int, length: int) -> complex:
    n = v.shape[0]
    if length == 0:
        return 0j
    u = np.roll(v, -start)[:length]
    if k == 1:
        m = u.sum() / n
        return complex(m * np.conj(m))
    big = 1 << (2 * length - 1).bit_length()

    def u2_sum(rows):
        # sum over integer (x, a, b) = (1/P) sum_xi |FFT_P(row)|^4
        fh = np.fft.fft(rows, n=big, axis=-1)
        return np.sum(np.abs(fh) ** 4) / big

    if k == 2:
        return complex(u2_sum(u[None, :])) / n**3
    total = 0.0
    outer = k - 3
    for hs in itertools.combinations_with_replacement(range(length), outer):
        g = u
        for h in hs:
            g = g[: g.shape[0] - h] * np.conj(g[h:])
        m = g.shape[0]
        if m == 0:
            continue
        # the last shift runs over h >= hs[-1]; each row is one Delta_h g
        lo = hs[-1] if hs else 0
        hlast = np.arange(lo, m)
        if hlast.size == 0:
            continue
        rows = np.zeros((hlast.size, m), dtype=np.complex128)
        for r, h in enumerate(hlast):
            rows[r, : m - h] = g[: m - h] * np.conj(g[h:])
        fh = np.fft.fft(rows, n=big, axis=1)
        per_row = np.sum(np.abs(fh) ** 4, axis=1) / big
        for r, h in enumerate(hlast):
            total += _weight(hs + (int(h),)) * per_row[r]
    return complex(total) / n ** (k + 1)


def _weight(tup) -> int:
    """Number of signed, ordered tuples with the same multiset of |h_i|."""
    w = 1 << sum(1 for h in tup if h)
    c = Counter(tup)
    perms = math.factorial(len(tup))
    for m in c.values():
        perms //= math.factorial(m)
    return w * perms


def _work(method: str, n: int, k: int, length: int) -> int:
    """Elementary evaluations performed by each path (what the cap limits)."""
    if method == "direct":
        return n ** (k + 1) * 2**k
    if method == "recursive":
        return n ** max(k, 1) * 2 * max(1, n.bit_length())
    if method == "support":
        big = 1 << (2 * length - 1).bit_length()
        rows = length ** max(k - 2, 1) // math.factorial(max(k - 2, 1))
        return max(rows, 1) * big * 2 * big.bit_length()
    raise ValueError(f"unknown method {method!r}")


def u_norm_power(
    f: CyclicFunction,
    k: int,
    method: str = "auto",
    work_cap: int = DEFAULT_WORK_CAP,
) -> float:
    """||f||_{U^k}^{2^k} as a real number (checked to be real)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > 5:
        raise ValueError("k >= 6 is out of scope")
    v = f.values
    n = f.modulus
    start, length = support_arc(v)
    if method == "auto":
        if length == 0:
            return 0.0
        if n >= (k + 1) * length and _work("support", n, k, length) < _work(
            "recursive", n, k, length
        ):
            method = "support"
        else:
            method = "recursive"
    work = _work(method, n, k, length)
    if work > work_cap:
        raise WorkCapExceeded(
            f"U^{k} on N={n} needs {work} tuple evaluations (cap {work_cap})"
        )
    if method == "support" and n < (k + 1) * length:
        raise ValueError("support path needs N >= (k+1) * arc length")
    if method == "direct":
        val = _kernels.gowers_direct(np.ascontiguousarray(v), k) / n ** (k + 1)
    elif method == "recursive":
        val = _pow_recursive(v, k)
    elif method == "support":
        val = _pow_support(v, k, start, length)
    else:
        raise ValueError(f"unknown method {method!r}")
    scale = max(1.0, float(np.abs(v).max()) ** (2**k))
    if abs(val.imag) > 1e-9 * scale:
        raise ArithmeticError(f"cube average has imaginary part {val.imag:.3e}")
    re = val.real
    if re < 0:
        if re < -1e-12 * scale:
            raise ArithmeticError(f"cube average is negative ({re:.3e})")
        re = 0.0
    return float(re)


def u_norm(
    f: CyclicFunction,
    k: int,
    method: str = "auto",
    work_cap: int = DEFAULT_WORK_CAP,
) -> float:
    """||f||_{U^k}, the nonnegative 2^k-th root of the cube average."""
    return u_norm_power(f, k, method=method, work_cap=work_cap) ** (1.0 / 2**k)


def u_norm_sampled(f: CyclicFunction, k: int, samples: int, rng) -> float:
    """Monte Carlo estimate of ||f||_{U^k}.  Not exact; never used in checks."""
    n = f.modulus
    v = f.values
    x = rng.integers(0, n, size=samples)
    h = rng.integers(0, n, size=(samples, k))
    acc = np.ones(samples, dtype=np.complex128)
    for eps in itertools.product((0, 1), repeat=k):
        pos = (x + h @ np.array(eps)) % n
        w = v[pos]
        acc *= np.conj(w) if sum(eps) % 2 else w
    return max(float(acc.mean().real), 0.0) ** (1.0 / 2**k)
