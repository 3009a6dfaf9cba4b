# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled move-to-front smallest enclosing ball.

Mirrors :mod:`conebound._welzl_py` step for step. Ball state for support
sets of size k lives in row k of the work arrays, so the recursion never
allocates.
"""

import numpy as np
from libc.math cimport fabs

cdef double INSIDE_REL = 1e-12
cdef double INSIDE_ABS = 1e-15
cdef double PIVOT_TOL = 1e-12


cdef class _Work:
    cdef double[:, ::1] P
    cdef Py_ssize_t[::1] order
    cdef Py_ssize_t dim
    cdef Py_ssize_t[::1] support
    cdef double[:, ::1] centers
    cdef double[::1] radii
    cdef Py_ssize_t[:, ::1] best_support
    cdef Py_ssize_t[::1] best_size
    cdef double[:, ::1] U
    cdef double[:, ::1] A
    cdef double[::1] b
    cdef double[::1] lam

    def __init__(self, P, order):
        self.P = P
        self.order = order
        self.dim = P.shape[1]
        d1 = self.dim + 2
        self.support = np.zeros(d1, dtype=np.intp)
        self.centers = np.zeros((d1, self.dim))
        self.radii = np.zeros(d1)
        self.best_support = np.zeros((d1, d1), dtype=np.intp)
        self.best_size = np.zeros(d1, dtype=np.intp)
        self.U = np.zeros((d1, self.dim))
        self.A = np.zeros((d1, d1))
        self.b = np.zeros(d1)
        self.lam = np.zeros(d1)


cdef bint _circumball(_Work w, Py_ssize_t k):
    """Ball through support[0:k], written to row k. False if dependent."""
    cdef Py_ssize_t i, j, t, col, piv, r
    cdef Py_ssize_t dim = w.dim
    cdef Py_ssize_t s0
    cdef double acc, scale, f, tmp
    if k == 0:
        for t in range(dim):
            w.centers[k, t] = 0.0
        w.radii[k] = -1.0
        return True
    s0 = w.support[0]
    if k == 1:
        for t in range(dim):
            w.centers[k, t] = w.P[s0, t]
        w.radii[k] = 0.0
        return True
    for i in range(k - 1):
        for t in range(dim):
            w.U[i, t] = w.P[w.support[i + 1], t] - w.P[s0, t]
    for i in range(k - 1):
        acc = 0.0
        for t in range(dim):
            acc += w.U[i, t] * w.U[i, t]
        w.b[i] = 0.5 * acc
        for j in range(k - 1):
            acc = 0.0
            for t in range(dim):
                acc += w.U[i, t] * w.U[j, t]
            w.A[i, j] = acc
    scale = 1e-300
    for i in range(k - 1):
        if fabs(w.A[i, i]) > scale:
            scale = fabs(w.A[i, i])
    # Gaussian elimination with partial pivoting
    for col in range(k - 1):
        piv = col
        for r in range(col + 1, k - 1):
            if fabs(w.A[r, col]) > fabs(w.A[piv, col]):
                piv = r
        if fabs(w.A[piv, col]) < PIVOT_TOL * scale:
            return False
        if piv != col:
            for t in range(col, k - 1):
                tmp = w.A[col, t]
                w.A[col, t] = w.A[piv, t]
                w.A[piv, t] = tmp
            tmp = w.b[col]
            w.b[col] = w.b[piv]
            w.b[piv] = tmp
        for r in range(col + 1, k - 1):
            f = w.A[r, col] / w.A[col, col]
            for t in range(col, k - 1):
                w.A[r, t] -= f * w.A[col, t]
            w.b[r] -= f * w.b[col]
    for r in range(k - 2, -1, -1):
        acc = w.b[r]
        for t in range(r + 1, k - 1):
            acc -= w.A[r, t] * w.lam[t]
        w.lam[r] = acc / w.A[r, r]
    acc = 0.0
    for t in range(dim):
        f = w.P[s0, t]
        for i in range(k - 1):
            f += w.lam[i] * w.U[i, t]
        w.centers[k, t] = f
        tmp = f - w.P[s0, t]
        acc += tmp * tmp
    w.radii[k] = acc
    return True


cdef void _copy_row(_Work w, Py_ssize_t src, Py_ssize_t dst):
    cdef Py_ssize_t t
    for t in range(w.dim):
        w.centers[dst, t] = w.centers[src, t]
    w.radii[dst] = w.radii[src]
    w.best_size[dst] = w.best_size[src]
    for t in range(w.best_size[src]):
        w.best_support[dst, t] = w.best_support[src, t]


cdef void _mtf(_Work w, Py_ssize_t end, Py_ssize_t k):
    """Best ball for order[0:end] with support[0:k] on the boundary, in row k."""
    cdef Py_ssize_t i, t, p, j
    cdef double d2, diff, r2
    if not _circumball(w, k):
        _copy_row(w, k - 1, k)
        return
    w.best_size[k] = k
    for t in range(k):
        w.best_support[k, t] = w.support[t]
    if k == w.dim + 1:
        return
    i = 0
    while i < end:
        p = w.order[i]
        d2 = 0.0
        for t in range(w.dim):
            diff = w.P[p, t] - w.centers[k, t]
            d2 += diff * diff
        r2 = w.radii[k]
        if d2 > r2 + INSIDE_REL * (r2 if r2 > 0.0 else 0.0) + INSIDE_ABS:
            w.support[k] = p
            _mtf(w, i, k + 1)
            _copy_row(w, k + 1, k)
            for j in range(i, 0, -1):
                w.order[j] = w.order[j - 1]
            w.order[0] = p
        i += 1


def smallest_enclosing_ball(points, order):
    """Smallest enclosing ball of the rows of `points`; see ``_welzl_py``."""
    P = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t[::1] od = np.asarray(order, dtype=np.intp)
    cdef _Work w = _Work(P, od)
    _mtf(w, od.shape[0], 0)
    size = w.best_size[0]
    return (np.asarray(w.centers[0]).copy(), float(w.radii[0]),
            np.asarray(w.best_support[0, :size]).copy())
