# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled polar pair-term kernels (see kernels.py for the contract)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def polar_pair_eval(const double[::1] vm_a, const double[::1] va_a, const double[::1] vm_c,
                    const double[::1] va_c, const double[::1] cx, const double[::1] cw):
    cdef Py_ssize_t n = vm_a.shape[0], k
    cdef double c, s, ab, x, w
    val = np.empty(n)
    jac = np.empty((n, 4))
    cdef double[::1] v = val
    cdef double[:, ::1] J = jac
    with nogil:
        for k in range(n):
            c = cos(va_a[k] - va_c[k])
            s = sin(va_a[k] - va_c[k])
            ab = vm_a[k] * vm_c[k]
            x = ab * c
            w = ab * s
            v[k] = cx[k] * x + cw[k] * w
            J[k, 0] = vm_c[k] * (cx[k] * c + cw[k] * s)
            J[k, 1] = cw[k] * x - cx[k] * w
            J[k, 2] = vm_a[k] * (cx[k] * c + cw[k] * s)
            J[k, 3] = cx[k] * w - cw[k] * x
    return val, jac


def polar_pair_hess(const double[::1] vm_a, const double[::1] va_a, const double[::1] vm_c,
                    const double[::1] va_c, const double[::1] cx, const double[::1] cw,
                    const double[::1] weight):
    cdef Py_ssize_t n = vm_a.shape[0], k
    cdef double c, s, phi, dphi, f_at, f_ct, f_tt, wk
    hess = np.empty((n, 10))
    cdef double[:, ::1] H = hess
    with nogil:
        for k in range(n):
            c = cos(va_a[k] - va_c[k])
            s = sin(va_a[k] - va_c[k])
            wk = weight[k]
            phi = cx[k] * c + cw[k] * s
            dphi = cw[k] * c - cx[k] * s
            f_at = wk * vm_c[k] * dphi
            f_ct = wk * vm_a[k] * dphi
            f_tt = -wk * vm_a[k] * vm_c[k] * phi
            H[k, 0] = 0.0
            H[k, 1] = f_at
            H[k, 2] = wk * phi
            H[k, 3] = -f_at
            H[k, 4] = f_tt
            H[k, 5] = f_ct
            H[k, 6] = -f_tt
            H[k, 7] = 0.0
            H[k, 8] = -f_ct
            H[k, 9] = f_tt
    return hess
