# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot-loop kernels; mirrors numpy_backend function for function."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()

KIND_EXACT = 0
KIND_QUADRATIC = 1
KIND_PADE = 2


def step_losses(points, int kind):
    """Per-step rebalancing losses (nats) along a weight trajectory."""
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t f = p.shape[0] - 1
    cdef Py_ssize_t n = p.shape[1]
    out_arr = np.empty(f, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, i
    cdef double acc, old, new, d, u
    for k in range(f):
        acc = 0.0
        if kind == 0:
            for i in range(n):
                new = p[k + 1, i]
                acc += new * log(new / p[k, i])
        elif kind == 1:
            for i in range(n):
                old = p[k, i]
                d = p[k + 1, i] - old
                acc += d * d / (2.0 * old)
        elif kind == 2:
            for i in range(n):
                old = p[k, i]
                u = (p[k + 1, i] - old) / old
                acc += old * (0.5 * u * u * (1.0 + u / 6.0) / (1.0 + 0.5 * u))
        else:
            raise ValueError(f"unknown kernel kind {kind!r}")
        out[k] = acc
    return out_arr


def kl_total_and_interior_grad(points):
    """Total exact-KL cost of a trajectory and its interior-point gradient."""
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t f = p.shape[0] - 1
    cdef Py_ssize_t n = p.shape[1]
    grad_arr = np.empty((f - 1, n), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t k, i
    cdef double total = 0.0
    cdef double r, lr
    for k in range(f):
        for i in range(n):
            r = p[k + 1, i] / p[k, i]
            lr = log(r)
            total += p[k + 1, i] * lr
            if k < f - 1:
                grad[k, i] = lr + 1.0
            if k > 0:
                grad[k - 1, i] -= r
    return total, grad_arr


def weighted_logret_totals(step_weights, log_prices):
    """Sum of weighted log price returns per path; see numpy_backend."""
    cdef const double[:, ::1] w = np.ascontiguousarray(step_weights, dtype=np.float64)
    cdef const double[:, :, ::1] lp = np.ascontiguousarray(log_prices, dtype=np.float64)
    cdef Py_ssize_t npaths = lp.shape[0]
    cdef Py_ssize_t f = w.shape[0]
    cdef Py_ssize_t n = w.shape[1]
    out_arr = np.empty(npaths, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, k, i
    cdef double acc
    for p in range(npaths):
        acc = 0.0
        for k in range(f):
            for i in range(n):
                acc += w[k, i] * (lp[p, k + 1, i] - lp[p, k, i])
        out[p] = acc
    return out_arr


def garch_log_returns(z, double h0, double omega, double alpha, double beta):
    """Driftless GARCH(1,1) per-block log returns for one asset."""
    cdef const double[:, ::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t npaths = zz.shape[0]
    cdef Py_ssize_t nblocks = zz.shape[1]
    out_arr = np.empty((npaths, nblocks), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t p, k
    cdef double h, eps
    for p in range(npaths):
        h = h0
        for k in range(nblocks):
            eps = sqrt(h) * zz[p, k]
            out[p, k] = -0.5 * h + eps
            h = omega + alpha * eps * eps + beta * h
    return out_arr
