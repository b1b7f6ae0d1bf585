# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the particle-system kernels in ``pure.py``.

Same contracts as the pure backend; loops are written out so the per-step
cost of the SDE integrator stays in C.
"""

import numpy as np

from libc.math cimport sqrt


def dbm_drift_kernel(double[::1] points):
    """Drift of the symmetric singular-value particle system (see pure.py)."""
    cdef Py_ssize_t n = points.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double li, acc
    for i in range(n):
        li = points[i]
        acc = 0.0
        for j in range(n):
            if j != i:
                acc += 1.0 / (li - points[j])
            acc += 1.0 / (li + points[j])
        out[i] = acc / (2.0 * n)
    return out_arr


def attempt_step_kernel(double[::1] points, double[::1] increments, double dt):
    """Propose one Euler-Maruyama step; report whether ordering survived."""
    cdef Py_ssize_t n = points.shape[0]
    if increments.shape[0] != n:
        raise ValueError("increments must match points in length")
    prop_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] prop = prop_arr
    cdef Py_ssize_t i, j
    cdef double li, acc
    cdef double noise_scale = 1.0 / sqrt(2.0 * n)
    for i in range(n):
        li = points[i]
        acc = 0.0
        for j in range(n):
            if j != i:
                acc += 1.0 / (li - points[j])
            acc += 1.0 / (li + points[j])
        prop[i] = li + increments[i] * noise_scale + (acc / (2.0 * n)) * dt
    cdef bint ok = prop[0] > 0.0
    for i in range(1, n):
        if prop[i] <= prop[i - 1]:
            ok = False
            break
    return bool(ok), prop_arr


cdef double _pairwise(double[::1] x, Py_ssize_t lo, Py_ssize_t hi):
    cdef double acc
    cdef Py_ssize_t i, mid
    if hi - lo <= 8:
        acc = 0.0
        for i in range(lo, hi):
            acc += x[i]
        return acc
    mid = lo + (hi - lo) // 2
    return _pairwise(x, lo, mid) + _pairwise(x, mid, hi)


def pairwise_sum(values):
    """Deterministic pairwise reduction with a fixed blocking order."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] view = arr
    return float(_pairwise(view, 0, view.shape[0]))
