# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels.

Mirrors ``_ref``; see there for the contract of each function.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, INFINITY


def best_split(double[::1] values, double[::1] grads, double[::1] hess,
               Py_ssize_t min_leaf, double reg_lambda):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return 0.0, -1

    cdef double g_total = 0.0, h_total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        g_total += grads[i]
        h_total += hess[i]
    cdef double parent = g_total * g_total / (h_total + reg_lambda)

    cdef double gl = 0.0, hl = 0.0, gr, hr, gain
    cdef double best_gain = -INFINITY
    cdef Py_ssize_t best_pos = -1
    # running sums over [0..p]; eligible window is [min_leaf-1, n-min_leaf-1]
    for i in range(n - min_leaf):
        gl += grads[i]
        hl += hess[i]
        if i < min_leaf - 1:
            continue
        if values[i] >= values[i + 1]:
            continue
        gr = g_total - gl
        hr = h_total - hl
        gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent
        if gain > best_gain:
            best_gain = gain
            best_pos = i
    if best_pos < 0:
        return 0.0, -1
    return best_gain, best_pos


def lambda_block(cnp.int64_t[::1] hi, cnp.int64_t[::1] lo,
                 double[::1] gains, double[::1] weights, double[::1] scores,
                 Py_ssize_t cutoff, double sigma, bint restrict,
                 double[::1] lam, double[::1] hess):
    cdef Py_ssize_t a, b, ii, jj
    cdef double rho, delta, step, curve
    for ii in range(hi.shape[0]):
        a = hi[ii]
        for jj in range(lo.shape[0]):
            b = lo[jj]
            if restrict and a >= cutoff and b >= cutoff:
                continue
            delta = fabs((gains[a] - gains[b]) * (weights[a] - weights[b]))
            if delta == 0.0:
                continue
            rho = 1.0 / (1.0 + exp(sigma * (scores[a] - scores[b])))
            step = sigma * rho * delta
            curve = sigma * sigma * rho * (1.0 - rho) * delta
            lam[a] += step
            lam[b] -= step
            hess[a] += curve
            hess[b] += curve


def lambda_map_block(cnp.int64_t[::1] hi, cnp.int64_t[::1] lo,
                     double[::1] scores, Py_ssize_t cutoff, double sigma,
                     cnp.int64_t[::1] rel_counts, double[::1] rel_prefix,
                     double n_relevant, bint restrict,
                     double[::1] lam, double[::1] hess):
    if n_relevant == 0:
        return
    cdef Py_ssize_t a, b, ii, jj, k = cutoff
    cdef double rho, delta, step, curve, term_a, t_b, mid
    for ii in range(hi.shape[0]):
        a = hi[ii]
        term_a = rel_counts[a] / (a + 1.0) if a < k else 0.0
        for jj in range(lo.shape[0]):
            b = lo[jj]
            if restrict and a >= k and b >= k:
                continue
            if a < b:
                t_b = rel_counts[b] / (b + 1.0) if b < k else 0.0
                mid = rel_prefix[min(b, k)] - rel_prefix[min(a, k - 1) + 1]
                delta = -term_a + t_b - mid
            else:
                t_b = (rel_counts[b] + 1.0) / (b + 1.0) if b < k else 0.0
                mid = rel_prefix[min(a, k)] - rel_prefix[min(b, k - 1) + 1]
                delta = t_b - term_a + mid
            delta = fabs(delta) / n_relevant
            if delta == 0.0:
                continue
            rho = 1.0 / (1.0 + exp(sigma * (scores[a] - scores[b])))
            step = sigma * rho * delta
            curve = sigma * sigma * rho * (1.0 - rho) * delta
            lam[a] += step
            lam[b] -= step
            hess[a] += curve
            hess[b] += curve
