"""Pure-Python/numpy versions of the compiled kernels (same results, slower)."""

import itertools
import math

import numpy as np


def gowers_direct(f, k):
    f = np.ascontiguousarray(f, dtype=np.complex128)
    n = f.shape[0]
    if k < 1 or k > 6:
        raise ValueError("k out of range")
    eps = list(itertools.product((0, 1), repeat=k))
    acc = 0j
    # the innermost shift is vectorised together with x
    idx = np.arange(n)
    for hs in itertools.product(range(n), repeat=k - 1):
        prod = np.ones((n, n), dtype=np.complex128)  # rows: h_k, cols: x
        for e in eps:
            s = sum(ei * hi for ei, hi in zip(e[:-1], hs))
            pos = (idx[None, :] + s + e[-1] * idx[:, None]) % n
            v = f[pos]
            if sum(e) % 2:
                v = np.conj(v)
            prod *= v
        acc += prod.sum()
    return complex(acc)


def lambda5_direct(f1, f2, f3, f4, f5):
    fs = [np.ascontiguousarray(g, dtype=np.complex128) for g in (f1, f2, f3, f4, f5)]
    n = fs[0].shape[0]
    x = np.arange(n)
    acc = 0j
    for y in range(n):
        p = fs[0].copy()
        for j in range(1, 5):
            p *= fs[j][(x + j * y) % n]
        acc += p.sum()
    return complex(acc)


def _violates(vals, verts, mode, Q, tol):
    acc = 0
    for e, v in enumerate(verts):
        if bin(e).count("1") % 2:
            acc -= vals[v]
        else:
            acc += vals[v]
    if mode == 0:
        return acc != 0
    if mode == 1:
        return acc % Q != 0
    if mode == 2:
        return abs(acc) > tol
    r = acc - math.floor(acc)
    return min(r, 1.0 - r) > tol


def cube_scan(vals, mask, members, depth, mode, Q=0, tol=0.0):
    n = len(mask)
    mask = [bool(m) for m in mask]
    members = [int(m) for m in members]
    if mode <= 1:
        vals = [int(v) for v in vals]
    else:
        vals = [float(v) for v in vals]
    cubes = 0

    def descend(verts, hs):
        nonlocal cubes
        if len(hs) == depth:
            cubes += 1
            if _violates(vals, verts, mode, Q, tol):
                return (verts[0],) + tuple(hs)
            return None
        x = verts[0]
        for y in members:
            h = (y - x) % n
            new = [(v + h) % n for v in verts]
            if not all(mask[v] for v in new):
                continue
            hit = descend(verts + new, hs + [h])
            if hit is not None:
                return hit
        return None

    for x in members:
        hit = descend([x], [])
        if hit is not None:
            return hit, cubes
    return None, cubes
