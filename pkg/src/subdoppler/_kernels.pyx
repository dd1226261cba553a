# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled steady-state kernels.

Same contract as ``_kernels_py``: for every (probe detuning, Doppler shift)
pair, add the detuning diagonal to the static generator, swap in the trace
row, solve the 9x9 complex system and read off the scaled -Im(rho31).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport NAN

cnp.import_array()

cdef extern from "complex.h" nogil:
    double creal(double complex)
    double cimag(double complex)


cdef inline double cabs1(double complex z) nogil:
    return abs(creal(z)) + abs(cimag(z))


cdef double _solve_point(const double complex[:, ::1] g0, double e2, double e3,
                         double scale) noexcept nogil:
    # e = (0, e2, e3); diagonal term of element (i, j) is -1j * (e_i - e_j).
    cdef double complex a[9][9]
    cdef double complex b[9]
    cdef double e[3]
    cdef double complex factor, tmp, pivot
    cdef int i, j, k, p, row, col
    cdef double best, mag

    e[0] = 0.0
    e[1] = e2
    e[2] = e3
    for i in range(9):
        for j in range(9):
            a[i][j] = g0[i, j]
        b[i] = 0.0
    for i in range(3):
        for j in range(3):
            k = 3 * i + j
            a[k][k] = a[k][k] - 1j * (e[i] - e[j])
    for j in range(9):
        a[0][j] = 0.0
    a[0][0] = 1.0
    a[0][4] = 1.0
    a[0][8] = 1.0
    b[0] = 1.0

    for col in range(9):
        p = col
        best = cabs1(a[col][col])
        for row in range(col + 1, 9):
            mag = cabs1(a[row][col])
            if mag > best:
                best = mag
                p = row
        if best == 0.0:
            return NAN
        if p != col:
            for j in range(col, 9):
                tmp = a[col][j]
                a[col][j] = a[p][j]
                a[p][j] = tmp
            tmp = b[col]
            b[col] = b[p]
            b[p] = tmp
        pivot = 1.0 / a[col][col]
        for row in range(col + 1, 9):
            if a[row][col] == 0.0:
                continue
            factor = a[row][col] * pivot
            for j in range(col + 1, 9):
                a[row][j] = a[row][j] - factor * a[col][j]
            b[row] = b[row] - factor * b[col]

    # back-substitute only as far as rho31 (index 6)
    for i in range(8, 5, -1):
        tmp = b[i]
        for j in range(i + 1, 9):
            tmp = tmp - a[i][j] * b[j]
        b[i] = tmp / a[i][i]
    return -cimag(b[6]) * scale


def response_table(g0, probe_detunings, shifts, double coupling_detuning, double scale):
    """Scaled response for every (probe detuning, shift) pair, shape (n, m)."""
    cdef const double complex[:, ::1] g = np.ascontiguousarray(g0, dtype=np.complex128)
    cdef const double[::1] dp = np.ascontiguousarray(probe_detunings, dtype=np.float64)
    cdef const double[::1] kv = np.ascontiguousarray(shifts, dtype=np.float64)
    cdef Py_ssize_t n = dp.shape[0], m = kv.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = _solve_point(g, dp[i] - coupling_detuning, dp[i] - kv[j], scale)
    return out


def doppler_average(g0, probe_detunings, shifts, weights, double coupling_detuning, double scale):
    """Weighted sum over shifts per probe detuning, accumulated in node order."""
    cdef const double complex[:, ::1] g = np.ascontiguousarray(g0, dtype=np.complex128)
    cdef const double[::1] dp = np.ascontiguousarray(probe_detunings, dtype=np.float64)
    cdef const double[::1] kv = np.ascontiguousarray(shifts, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = dp.shape[0], m = kv.shape[0], i, j
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc = acc + w[j] * _solve_point(g, dp[i] - coupling_detuning, dp[i] - kv[j], scale)
            o[i] = acc
    return out
