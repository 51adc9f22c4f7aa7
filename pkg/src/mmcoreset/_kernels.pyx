# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the greedy selector and the PCA eigensolver.

Accumulation order is fixed everywhere (per-candidate sequential sums, fixed
sweep order in the eigensolver) so results do not depend on thread count.
"""

from cython.parallel import prange
from libc.math cimport fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pool_totals(double[:, ::1] feats):
    """Sum of squared distances from each row to every row of ``feats``.

    T[i] accumulates over rows p in ascending order, dimensions in ascending
    order, one scalar accumulator per candidate. Rows are independent, so the
    outer loop may run on several threads without changing any sum.
    """
    cdef Py_ssize_t m = feats.shape[0]
    cdef Py_ssize_t d = feats.shape[1]
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] totals = out
    cdef Py_ssize_t i, p, j
    cdef double acc, dist, diff
    for i in prange(m, nogil=True, schedule="static"):
        acc = 0.0
        for p in range(m):
            dist = 0.0
            for j in range(d):
                diff = feats[p, j] - feats[i, j]
                dist = dist + diff * diff
            acc = acc + dist
        totals[i] = acc
    return out


def sqdist_accumulate(double[:, ::1] feats, Py_ssize_t sel, double[::1] acc):
    """Add the squared distance to row ``sel`` onto ``acc`` for every row."""
    cdef Py_ssize_t m = feats.shape[0]
    cdef Py_ssize_t d = feats.shape[1]
    cdef Py_ssize_t i, j
    cdef double dist, diff
    for i in prange(m, nogil=True, schedule="static"):
        dist = 0.0
        for j in range(d):
            diff = feats[i, j] - feats[sel, j]
            dist = dist + diff * diff
        acc[i] = acc[i] + dist


def best_gain(double[::1] accum, double[::1] totals, unsigned char[::1] alive):
    """Position and value of the maximum gain 2*A - T over alive rows.

    Single sequential scan; on ties the lowest position wins.
    """
    cdef Py_ssize_t m = accum.shape[0]
    cdef Py_ssize_t i, best = -1
    cdef double g, best_val = 0.0
    for i in range(m):
        if alive[i]:
            g = 2.0 * accum[i] - totals[i]
            if best < 0 or g > best_val:
                best = i
                best_val = g
    if best < 0:
        raise ValueError("no alive candidate")
    return best, best_val


def jacobi_eigh(double[:, ::1] mat):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Deterministic by construction: rotations run in fixed (p, q) order and the
    sweep loop stops once the off-diagonal Frobenius norm drops below 1e-12 of
    the input norm (capped at 100 sweeps as a roundoff backstop). Returns
    ``(w, V)`` unsorted with eigenvector columns.
    """
    cdef Py_ssize_t m = mat.shape[0]
    a_arr = np.array(mat, dtype=np.float64, copy=True)
    v_arr = np.eye(m, dtype=np.float64)
    cdef double[:, ::1] A = a_arr
    cdef double[:, ::1] V = v_arr
    cdef Py_ssize_t p, q, r, sweep
    cdef double fro, off, tol, apq, app, aqq, theta, t, c, s, tau
    cdef double arp, arq

    fro = 0.0
    for p in range(m):
        for q in range(m):
            fro += A[p, q] * A[p, q]
    fro = sqrt(fro)
    if fro == 0.0:
        return np.zeros(m, dtype=np.float64), v_arr
    tol = 1e-12 * fro

    for sweep in range(100):
        off = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                off += A[p, q] * A[p, q]
        off = sqrt(2.0 * off)
        if off <= tol:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = 0.5 * (aqq - app) / apq
                if fabs(theta) > 1.0e150:
                    t = 1.0 / (2.0 * theta)
                elif theta >= 0.0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for r in range(m):
                    if r != p and r != q:
                        arp = A[r, p]
                        arq = A[r, q]
                        A[r, p] = arp - s * (arq + tau * arp)
                        A[p, r] = A[r, p]
                        A[r, q] = arq + s * (arp - tau * arq)
                        A[q, r] = A[r, q]
                for r in range(m):
                    arp = V[r, p]
                    arq = V[r, q]
                    V[r, p] = arp - s * (arq + tau * arp)
                    V[r, q] = arq + s * (arp - tau * arq)

    w = np.empty(m, dtype=np.float64)
    cdef double[::1] wv = w
    for p in range(m):
        wv[p] = A[p, p]
    return w, v_arr
