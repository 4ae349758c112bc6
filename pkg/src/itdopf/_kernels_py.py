"""Pure numpy implementation of the polar pair-term kernels."""

import numpy as np


def polar_pair_eval(vm_a, va_a, vm_c, va_c, cx, cw):
    t = va_a - va_c
    c, s = np.cos(t), np.sin(t)
    x = vm_a * vm_c * c
    w = vm_a * vm_c * s
    phi = cx * c + cw * s
    jac = np.empty((len(t), 4))
    jac[:, 0] = vm_c * phi
    jac[:, 1] = cw * x - cx * w
    jac[:, 2] = vm_a * phi
    jac[:, 3] = -jac[:, 1]
    return cx * x + cw * w, jac


def polar_pair_hess(vm_a, va_a, vm_c, va_c, cx, cw, weight):
    t = va_a - va_c
    c, s = np.cos(t), np.sin(t)
    phi = cx * c + cw * s
    dphi = cw * c - cx * s
    f_at = weight * vm_c * dphi
    f_ct = weight * vm_a * dphi
    f_tt = -weight * vm_a * vm_c * phi
    zero = np.zeros_like(t)
    return np.column_stack([zero, f_at, weight * phi, -f_at, f_tt, f_ct, -f_tt, zero, -f_ct, f_tt])
