# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rank-1 recursive least squares updates.

Arrays are updated in place. ``m_inv`` must be a symmetric C-contiguous
float64 matrix; since it is symmetric its row-major buffer doubles as the
column-major matrix BLAS expects. ``beta`` (row-major, hidden x labels) is
handed to BLAS as its column-major transpose (labels x hidden).
"""

from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemv, dger

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _rank1(double[:, ::1] m_inv, double[:, ::1] beta,
                 const double[::1] h, const double[::1] y,
                 double[::1] u, double[::1] r) noexcept nogil:
    cdef int n = <int> m_inv.shape[0]
    cdef int m = <int> beta.shape[1]
    cdef int one = 1
    cdef double d_one = 1.0, d_zero = 0.0, d_neg = -1.0
    cdef double denom, scale
    cdef char trans_n = b'N'
    cdef int i

    # u = M h
    dgemv(&trans_n, &n, &n, &d_one, &m_inv[0, 0], &n,
          <double *> &h[0], &one, &d_zero, &u[0], &one)
    denom = 1.0
    for i in range(n):
        denom += h[i] * u[i]

    # residual r = y - beta^T h, computed before beta changes
    if m > 0:
        for i in range(m):
            r[i] = y[i]
        dgemv(&trans_n, &m, &n, &d_neg, &beta[0, 0], &m,
              <double *> &h[0], &one, &d_one, &r[0], &one)

    # M -= v v^T with v = u / sqrt(denom); the product v_i v_j commutes, so
    # symmetry is preserved exactly.
    scale = 1.0 / sqrt(denom)
    for i in range(n):
        u[i] *= scale
    dger(&n, &n, &d_neg, &u[0], &one, &u[0], &one, &m_inv[0, 0], &n)

    # beta += (M_new h) r^T where M_new h = u_original / denom = v / sqrt(denom)
    if m > 0:
        for i in range(n):
            u[i] *= scale
        dger(&m, &n, &d_one, &r[0], &one, &u[0], &one, &beta[0, 0], &m)


def rank1_update(double[:, ::1] m_inv, double[:, ::1] beta,
                 const double[::1] h, const double[::1] y):
    """Fold one sample into ``m_inv`` and ``beta`` in place."""
    cdef Py_ssize_t n = m_inv.shape[0]
    if m_inv.shape[1] != n or beta.shape[0] != n or h.shape[0] != n:
        raise ValueError("inconsistent hidden dimension")
    if y.shape[0] != beta.shape[1]:
        raise ValueError("target length does not match beta columns")
    cdef double[::1] u = np.empty(n)
    cdef double[::1] r = np.empty(max(beta.shape[1], 1))
    with nogil:
        _rank1(m_inv, beta, h, y, u, r)


def rank1_sweep(double[:, ::1] m_inv, double[:, ::1] beta,
                const double[:, ::1] H, const double[:, ::1] Y):
    """Apply ``rank1_update`` to each row of ``H``/``Y`` in order."""
    cdef Py_ssize_t n = m_inv.shape[0]
    cdef Py_ssize_t k
    if m_inv.shape[1] != n or beta.shape[0] != n or H.shape[1] != n:
        raise ValueError("inconsistent hidden dimension")
    if Y.shape[0] != H.shape[0] or Y.shape[1] != beta.shape[1]:
        raise ValueError("target block does not match beta columns")
    cdef double[::1] u = np.empty(n)
    cdef double[::1] r = np.empty(max(beta.shape[1], 1))
    with nogil:
        for k in range(H.shape[0]):
            _rank1(m_inv, beta, H[k], Y[k], u, r)
