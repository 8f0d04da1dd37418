# cython: language_level=3
"""Compiled inner loops. Semantics must match _pykernels exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor
from libc.stdlib cimport malloc, free

cnp.import_array()


def gowers_direct(const double complex[::1] f, int k):
    """Unnormalised sum over all (x, h_1..h_k) of the k-fold derivative."""
    cdef Py_ssize_t N = f.shape[0]
    cdef int nv = 1 << k
    cdef long long[64] off
    cdef int[64] par
    cdef long long[8] h
    cdef int e, i, j
    cdef Py_ssize_t x
    cdef long long s
    cdef double complex acc = 0, prod, v
    if k < 1 or k > 6:
        raise ValueError("k out of range")
    for e in range(nv):
        par[e] = 0
        for i in range(k):
            if (e >> i) & 1:
                par[e] ^= 1
    for i in range(k):
        h[i] = 0
    while True:
        for e in range(nv):
            s = 0
            for i in range(k):
                if (e >> i) & 1:
                    s += h[i]
            off[e] = s % N
        for x in range(N):
            prod = 1
            for e in range(nv):
                v = f[(x + off[e]) % N]
                if par[e]:
                    v = v.conjugate()
                prod = prod * v
            acc = acc + prod
        j = 0
        while j < k:
            h[j] += 1
            if h[j] < N:
                break
            h[j] = 0
            j += 1
        if j == k:
            break
    return acc


def lambda5_direct(const double complex[::1] f1, const double complex[::1] f2,
                   const double complex[::1] f3, const double complex[::1] f4,
                   const double complex[::1] f5):
    """Unnormalised sum over (x, y) of prod f_k(x + (k-1) y)."""
    cdef Py_ssize_t N = f1.shape[0]
    cdef Py_ssize_t x, y
    cdef double complex acc = 0
    for y in range(N):
        for x in range(N):
            acc = acc + (f1[x] * f2[(x + y) % N] * f3[(x + 2 * y) % N]
                         * f4[(x + 3 * y) % N] * f5[(x + 4 * y) % N])
    return acc


cdef struct ScanState:
    Py_ssize_t N
    int depth
    int mode          # 0 exact integer, 1 integer mod Q, 2 float in R, 3 float mod 1
    long long Q
    double tol
    const long long* ivals
    const double* fvals
    const unsigned char* mask
    const long long* members
    Py_ssize_t nmem
    long long* verts
    long long* hs
    long long cubes
    int found


cdef bint _violates(ScanState* st):
    cdef int nv = 1 << st.depth
    cdef int e, p, i
    cdef long long acc = 0
    cdef double facc = 0.0, r
    for e in range(nv):
        p = 0
        i = e
        while i:
            p ^= i & 1
            i >>= 1
        if st.mode <= 1:
            if p:
                acc -= st.ivals[st.verts[e]]
            else:
                acc += st.ivals[st.verts[e]]
            if st.mode == 1:
                acc %= st.Q
        else:
            if p:
                facc -= st.fvals[st.verts[e]]
            else:
                facc += st.fvals[st.verts[e]]
    if st.mode == 0:
        return acc != 0
    if st.mode == 1:
        return (acc % st.Q) != 0
    if st.mode == 2:
        return fabs(facc) > st.tol
    r = facc - floor(facc)
    if r > 0.5:
        r = 1.0 - r
    return r > st.tol


cdef void _descend(ScanState* st, int level):
    cdef Py_ssize_t m, nv, e
    cdef long long x = st.verts[0], h, v
    cdef bint ok
    if level == st.depth:
        st.cubes += 1
        if _violates(st):
            st.found = 1
        return
    nv = 1 << level
    for m in range(st.nmem):
        h = (st.members[m] - x) % st.N
        if h < 0:
            h += st.N
        ok = True
        for e in range(nv):
            v = (st.verts[e] + h) % st.N
            if not st.mask[v]:
                ok = False
                break
            st.verts[nv + e] = v
        if not ok:
            continue
        st.hs[level] = h
        _descend(st, level + 1)
        if st.found:
            return


def cube_scan(vals, const unsigned char[::1] mask, const long long[::1] members,
              int depth, int mode, long long Q=0, double tol=0.0):
    """First cube (in canonical order) whose depth-fold derivative is nonzero.

    Returns (counterexample or None, number of cubes examined).
    """
    cdef ScanState st
    cdef long long[::1] iv
    cdef double[::1] fv
    cdef Py_ssize_t i
    if depth < 0 or depth > 8:
        raise ValueError("depth out of range")
    st.N = mask.shape[0]
    st.depth = depth
    st.mode = mode
    st.Q = Q
    st.tol = tol
    st.mask = &mask[0]
    st.nmem = members.shape[0]
    st.members = &members[0] if st.nmem else NULL
    if mode <= 1:
        iv = np.ascontiguousarray(vals, dtype=np.int64)
        st.ivals = &iv[0]
        st.fvals = NULL
    else:
        fv = np.ascontiguousarray(vals, dtype=np.float64)
        st.fvals = &fv[0]
        st.ivals = NULL
    st.verts = <long long*> malloc(sizeof(long long) * (1 << depth))
    st.hs = <long long*> malloc(sizeof(long long) * (depth + 1))
    st.cubes = 0
    st.found = 0
    try:
        for i in range(st.nmem):
            st.verts[0] = st.members[i]
            _descend(&st, 0)
            if st.found:
                return (int(st.verts[0]),) + tuple(int(st.hs[j]) for j in range(depth)), st.cubes
        return None, st.cubes
    finally:
        free(st.verts)
        free(st.hs)
