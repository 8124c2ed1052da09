# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels: per-node bisection fixed points and the
log-space success-probability pass.

Mirrors the contracts of ``pfaloha._kernels._py``; loops are sequential so
results are reproducible bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan, fabs, log1p, pow, sqrt, INFINITY, M_PI

BACKEND = "cython"

cdef double _TINY = 1e-308


cdef inline double _row_F(double* b, Py_ssize_t n, Py_ssize_t skip, double psi) nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0
    for j in range(n):
        if j == skip:
            continue
        s += 1.0 / (1.0 + b[j] - psi)
    return s


cdef inline double _bisect_row(double* b, Py_ssize_t n, Py_ssize_t skip,
                               double tol, int max_iter, double tail_kappa,
                               double tail_x, double sqrt_T, long* niter) nogil:
    """Root of 1/psi = sum_j 1/(1+b_j-psi) + tail(psi) on (0, 1).

    tail_kappa <= 0 disables the tail; tail_x is outer_radius/r for the
    beta=4 closed form (0 means integrate from the origin).
    """
    cdef double lo = _TINY, hi = 1.0, mid, F, root
    cdef int it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= tol:
            break
        F = _row_F(b, n, skip, mid)
        if tail_kappa > 0.0:
            root = sqrt(1.0 - mid)
            if tail_x == 0.0:
                F += tail_kappa / root * (M_PI / 2.0)
            else:
                F += tail_kappa / root * atan(sqrt_T * root / (tail_x * tail_x))
        if 1.0 / mid > F:
            lo = mid
        else:
            hi = mid
        it += 1
    niter[0] = it
    return 0.5 * (lo + hi)


def solve_fullplane(double[:, ::1] X, double[:, ::1] Y, double T, double r,
                    double beta, double tol=1e-12, int max_iter=200):
    """Per-node fixed points 1/p = sum_{j != i} 1/(1 + b_ij - p).

    Returns (p, saturated, residual, iterations); saturated nodes
    (sum 1/b <= 1) get p = 1 and residual 0.
    """
    cdef Py_ssize_t n = X.shape[0], i, j
    cdef double scale = T * pow(r, beta)
    cdef bint beta4 = beta == 4.0
    cdef cnp.ndarray p_arr = np.ones(n)
    cdef cnp.ndarray sat_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray res_arr = np.zeros(n)
    cdef cnp.ndarray it_arr = np.zeros(n, dtype=np.int64)
    cdef double[::1] p = p_arr
    cdef unsigned char[::1] sat = sat_arr
    cdef double[::1] res = res_arr
    cdef long[::1] iters = it_arr
    cdef cnp.ndarray brow_arr = np.empty(n)
    cdef double[::1] brow = brow_arr
    cdef double dx, dy, d2, a, pi_, F
    cdef long it
    with nogil:
        for i in range(n):
            a = 0.0
            for j in range(n):
                if j == i:
                    brow[j] = INFINITY
                    continue
                dx = X[i, 0] - Y[j, 0]
                dy = X[i, 1] - Y[j, 1]
                d2 = dx * dx + dy * dy
                if beta4:
                    brow[j] = d2 * d2 / scale
                else:
                    brow[j] = pow(d2, 0.5 * beta) / scale
                a += 1.0 / brow[j]
            if a <= 1.0:
                sat[i] = 1
                p[i] = 1.0
                res[i] = 0.0
                iters[i] = 0
                continue
            it = 0
            pi_ = _bisect_row(&brow[0], n, i, tol, max_iter, -1.0, 0.0, 0.0, &it)
            F = _row_F(&brow[0], n, i, pi_)
            p[i] = pi_
            res[i] = fabs(1.0 / pi_ - F)
            iters[i] = it
    return p_arr, sat_arr.view(bool), res_arr, it_arr


def log_success_probs(double[:, ::1] X, double[:, ::1] Y, double[::1] p,
                      double T, double r, double beta):
    """logq_i = sum_{j != i} log1p(-p_j / (1 + b_ji)), b_ji from |X_j - y_i|."""
    cdef Py_ssize_t n = X.shape[0], i, j
    cdef double scale = T * pow(r, beta)
    cdef bint beta4 = beta == 4.0
    cdef cnp.ndarray out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef double dx, dy, d2, b, acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                dx = X[j, 0] - Y[i, 0]
                dy = X[j, 1] - Y[i, 1]
                d2 = dx * dx + dy * dy
                if beta4:
                    b = d2 * d2 / scale
                else:
                    b = pow(d2, 0.5 * beta) / scale
                acc += log1p(-p[j] / (1.0 + b))
            out[i] = acc
    return out_arr


def solve_views_beta4(double[::1] b_flat, long[::1] offsets, double[::1] outer_x,
                      double density, double r, double T,
                      double tol=1e-12, int max_iter=200):
    """Batch fixed-point solve for local views under beta = 4.

    View k observes b_flat[offsets[k]:offsets[k+1]] plus the closed-form
    tail beyond outer_x[k] (units of r; +inf disables the tail, 0 means the
    whole plane is unobserved). Returns (psi, saturated, residual, iterations).
    """
    cdef Py_ssize_t n = offsets.shape[0] - 1, k, j, lo_off, hi_off
    cdef double kappa = M_PI * density * r * r * sqrt(T)
    cdef double sqrt_T = sqrt(T)
    cdef cnp.ndarray psi_arr = np.ones(n)
    cdef cnp.ndarray sat_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray res_arr = np.zeros(n)
    cdef cnp.ndarray it_arr = np.zeros(n, dtype=np.int64)
    cdef double[::1] psi = psi_arr
    cdef unsigned char[::1] sat = sat_arr
    cdef double[::1] res = res_arr
    cdef long[::1] iters = it_arr
    cdef double a, x, pk, F, root, tk
    cdef long it
    cdef double* bptr = NULL
    if b_flat.shape[0] > 0:
        bptr = &b_flat[0]
    with nogil:
        for k in range(n):
            lo_off = offsets[k]
            hi_off = offsets[k + 1]
            x = outer_x[k]
            a = 0.0
            for j in range(lo_off, hi_off):
                a += 1.0 / b_flat[j]
            if x == 0.0:
                a = INFINITY
            elif x != INFINITY:
                a += M_PI * density * r * r * T / (x * x)
            if a <= 1.0:
                sat[k] = 1
                psi[k] = 1.0
                continue
            tk = -1.0 if x == INFINITY else kappa
            it = 0
            pk = _bisect_row(bptr + lo_off, hi_off - lo_off, -1, tol, max_iter,
                             tk, x, sqrt_T, &it)
            F = 0.0
            for j in range(lo_off, hi_off):
                F += 1.0 / (1.0 + b_flat[j] - pk)
            if x != INFINITY:
                root = sqrt(1.0 - pk)
                if x == 0.0:
                    F += kappa / root * (M_PI / 2.0)
                else:
                    F += kappa / root * atan(sqrt_T * root / (x * x))
            psi[k] = pk
            res[k] = fabs(1.0 / pk - F)
            iters[k] = it
    return psi_arr, sat_arr.view(bool), res_arr, it_arr
