# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled single-site update loop for the Glauber decoder.

Must stay arithmetically identical to ``_glauber_py.glauber_chunk``.
"""
from libc.math cimport exp

import numpy as np
cimport numpy as cnp

cnp.import_array()


def glauber_chunk(signed char[::1] x, double[::1] r, const int[:, ::1] var_adj,
                  const cnp.int64_t[::1] coords, const double[::1] uniforms,
                  double lam, double alpha, double inv_sigma2,
                  double rss, long weight, signed char[::1] trace=None):
    cdef Py_ssize_t t, j, f, steps = coords.shape[0]
    cdef Py_ssize_t nu = var_adj.shape[1]
    cdef double acc, h, p, e, ro, rn, delta
    cdef signed char xl, new
    cdef bint record = trace is not None
    for t in range(steps):
        j = coords[t]
        xl = x[j]
        acc = 0.0
        for f in range(nu):
            acc += r[var_adj[j, f]]
        h = lam + alpha * inv_sigma2 * (acc + nu * alpha * (xl - 0.5))
        if h >= 0:
            p = 1.0 / (1.0 + exp(-h))
        else:
            e = exp(h)
            p = e / (1.0 + e)
        new = 1 if uniforms[t] < p else 0
        if new != xl:
            delta = alpha * (new - xl)
            for f in range(nu):
                ro = r[var_adj[j, f]]
                rn = ro - delta
                r[var_adj[j, f]] = rn
                rss += rn * rn - ro * ro
            x[j] = new
            weight += new - xl
        if record:
            trace[t] = new
    return rss, weight


def gather_sum(const double[::1] v, const int[:, ::1] adj, double[::1] out):
    """``out[i] = sum(v[adj[i, :]])``: A@x with factor_adj, A.T@r with var_adj."""
    cdef Py_ssize_t i, j, rows = adj.shape[0], deg = adj.shape[1]
    cdef double acc
    for i in range(rows):
        acc = 0.0
        for j in range(deg):
            acc += v[adj[i, j]]
        out[i] = acc
