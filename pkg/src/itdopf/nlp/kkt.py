"""First-order optimality residuals of the original (slack-free) problem."""

from __future__ import annotations

import numpy as np


def kkt_residuals(model, x, y, zl, zu):
    """Infinity norms ``(stationarity, feasibility, complementarity)``.

    Sign convention: ``grad f + J^T y - zl + zu = 0``; ``y_i > 0`` prices an
    active upper row bound, ``y_i < 0`` an active lower one.  Fixed variables
    (``lo == hi``) are excluded from stationarity.
    """
    x = np.asarray(x, float)
    lo, hi = model.lo, model.hi
    free = lo < hi
    g = model.grad(x)
    J = model.jacobian(x)
    r = g + J.T @ y - zl + zu
    stat = float(np.max(np.abs(r[free]), initial=0.0))

    c = model.constraints(x)
    cl, cu = model.cl, model.cu
    viol = np.maximum(np.where(np.isfinite(cl), cl - c, 0.0), np.where(np.isfinite(cu), c - cu, 0.0))
    bviol = np.maximum(np.where(np.isfinite(lo), lo - x, 0.0), np.where(np.isfinite(hi), x - hi, 0.0))
    feas = float(max(np.max(np.maximum(viol, 0.0), initial=0.0), np.max(np.maximum(bviol, 0.0), initial=0.0)))

    # bound complementarity (and sign feasibility of the bound multipliers)
    fl = free & np.isfinite(lo)
    fu = free & np.isfinite(hi)
    comp = [
        np.abs((x - lo)[fl] * zl[fl]),
        np.abs((hi - x)[fu] * zu[fu]),
        np.abs(np.minimum(zl[free], 0.0)),
        np.abs(np.minimum(zu[free], 0.0)),
        np.abs(zl[free & ~np.isfinite(lo)]),
        np.abs(zu[free & ~np.isfinite(hi)]),
    ]
    eq = np.isfinite(cl) & (cl == cu)
    ineq = ~eq
    yp = np.where(ineq, np.maximum(y, 0.0), 0.0)
    yn = np.where(ineq, np.maximum(-y, 0.0), 0.0)
    fin_u, fin_l = np.isfinite(cu), np.isfinite(cl)
    up = np.where(fin_u, np.where(fin_u, cu, 0.0) - c, 1.0) * yp
    dn = np.where(fin_l, c - np.where(fin_l, cl, 0.0), 1.0) * yn
    comp += [np.abs(up), np.abs(dn)]
    compl = float(max(np.max(v, initial=0.0) for v in comp))
    return stat, feas, compl
