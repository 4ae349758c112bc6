"""Finite-difference verification of constraint-block Jacobians.

Residuals are re-evaluated in ``np.longdouble`` by a separate, plain-numpy
implementation of the term families, so central differences with a 1e-6
step are not dominated by double-precision cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LD = np.longdouble

# tangent rows whose |e_a| or |cos(atan(f_a/e_a) + shift)| fall below this are
# reported as ill-conditioned instead of failed
TAN_GUARD = 1e-3


def _residual_ld(terms, x):
    r = np.zeros(terms.m, LD)
    r += terms.const.astype(LD)
    if len(terms.lin_r):
        np.add.at(r, terms.lin_r, terms.lin_v.astype(LD) * x[terms.lin_c])
    if len(terms.pol_r):
        d = x[terms.pol_ja] - x[terms.pol_jc]
        mag = x[terms.pol_ia] * x[terms.pol_ic]
        np.add.at(r, terms.pol_r, mag * (terms.pol_cx.astype(LD) * np.cos(d) + terms.pol_cw.astype(LD) * np.sin(d)))
    if len(terms.q_r):
        np.add.at(r, terms.q_r, terms.q_c.astype(LD) * x[terms.q_p] * x[terms.q_q])
    if len(terms.t_r):
        ang = np.arctan(x[terms.t_fa] / x[terms.t_ea]) + terms.t_shift.astype(LD)
        np.add.at(r, terms.t_r, terms.t_c.astype(LD) * np.tan(ang) * x[terms.t_eb])
    return r


def color_columns(rows, cols):
    """Greedy grouping of columns that share no row.  Returns ``{color: [cols]}``."""
    by_col = {}
    for r, c in zip(rows.tolist(), cols.tolist()):
        by_col.setdefault(c, set()).add(r)
    groups, used = [], []
    for c in sorted(by_col):
        rs = by_col[c]
        for k, u in enumerate(used):
            if not (u & rs):
                groups[k].append(c)
                u |= rs
                break
        else:
            groups.append([c])
            used.append(set(rs))
    return groups


@dataclass
class BlockCheck:
    name: str
    owner: str
    rows: int
    max_abs_error: float = 0.0
    max_rel_error: float = 0.0
    worst_row: str = ""
    failures: int = 0
    ill_conditioned: int = 0

    @property
    def passed(self):
        return self.failures == 0


@dataclass
class DerivativeReport:
    points: int
    step: float
    rel_tol: float
    abs_tol: float
    blocks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(b.passed for b in self.blocks)

    @property
    def max_rel_error(self):
        return max((b.max_rel_error for b in self.blocks), default=0.0)

    def lines(self):
        out = [f"derivative check: {self.points} point(s), step {self.step:g}, "
               f"tolerance {self.rel_tol:g} relative + {self.abs_tol:g} absolute"]
        for b in self.blocks:
            flag = "ok  " if b.passed else "FAIL"
            extra = f" ill-conditioned={b.ill_conditioned}" if b.ill_conditioned else ""
            out.append(f"{flag} {b.name:<40s} rows={b.rows:<5d} max_abs={b.max_abs_error:.2e} "
                       f"max_rel={b.max_rel_error:.2e}{extra}")
        out.append("PASS" if self.passed else "FAIL")
        return out


def _tangent_flags(terms, x, m):
    flags = np.zeros(m, bool)
    if len(terms.t_r):
        ea, cosv = terms.tangent_conditioning(x)
        bad = (ea < TAN_GUARD) | (cosv < TAN_GUARD)
        flags[terms.t_r[bad]] = True
    return flags


def check_block(block, points, step=1e-6, rel_tol=1e-6, abs_tol=1e-8) -> BlockCheck:
    t = block.terms
    res = BlockCheck(block.name, block.owner, block.m)
    if block.m == 0 or len(t.jac_rows) == 0:
        return res
    groups = color_columns(t.jac_rows, t.jac_cols)
    n = len(points[0])
    group_of = np.full(n, -1)
    for g, cols in enumerate(groups):
        group_of[cols] = g
    for x in points:
        J = block.jacobian(x, n).tocsc()
        J.sum_duplicates()
        ill = _tangent_flags(t, x, block.m)
        entry_col = np.repeat(np.arange(n), np.diff(J.indptr))
        entry_group = group_of[entry_col]
        xl = np.asarray(x, LD)

        def central(h):
            num = np.zeros(J.nnz)
            for g, cols in enumerate(groups):
                xp = xl.copy()
                xm = xl.copy()
                xp[cols] += LD(h)
                xm[cols] -= LD(h)
                diff = (_residual_ld(t, xp) - _residual_ld(t, xm)) / LD(2 * h)
                sel = entry_group == g
                num[sel] = diff[J.indices[sel]].astype(float)
            return num

        an = J.data
        rows = J.indices
        flagged = ill[rows]
        num = central(step)
        err = np.abs(num - an)
        bad = err > rel_tol * np.abs(an) + abs_tol
        # near a tangent pole the truncation error of a fixed step dominates;
        # long double leaves room to shrink the step for those rows only
        h = step
        while np.any(bad & flagged) and h > step * 1e-4:
            h /= 10.0
            retry = bad & flagged
            num[retry] = central(h)[retry]
            err = np.abs(num - an)
            bad = err > rel_tol * np.abs(an) + abs_tol
        res.ill_conditioned += int(np.sum(bad & flagged))
        res.failures += int(np.sum(bad & ~flagged))
        err_ok = np.where(bad & flagged, 0.0, err)
        if len(err_ok):
            k = int(np.argmax(err_ok))
            if err_ok[k] > res.max_abs_error:
                res.max_abs_error = float(err_ok[k])
                lab = block.row_labels[rows[k]] if block.row_labels else str(rows[k])
                res.worst_row = f"{lab} / column {entry_col[k]}"
            rel = err_ok / np.maximum(np.abs(an), abs_tol / rel_tol)
            res.max_rel_error = max(res.max_rel_error, float(np.max(rel)))
    return res


def check_jacobians(blocks, points, step=1e-6, rel_tol=1e-6, abs_tol=1e-8) -> DerivativeReport:
    """Compare each block's analytic Jacobian with central differences.

    An entry passes when ``|fd - analytic| <= rel_tol * |analytic| + abs_tol``.
    ``points`` is one point or a sequence of points.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    report = DerivativeReport(len(pts), step, rel_tol, abs_tol)
    for blk in blocks:
        report.blocks.append(check_block(blk, pts, step, rel_tol, abs_tol))
    return report


def random_interior_points(model, count, seed=0, spread=0.25):
    """Points strictly inside the variable bounds, scattered around the initial point."""
    rng = np.random.default_rng(seed)
    lo, hi, x0 = model.lo, model.hi, model.x0
    span = np.where(np.isfinite(lo) & np.isfinite(hi), hi - lo, 2.0)
    r = spread * np.minimum(span, 2.0)
    inner_lo = np.where(np.isfinite(lo), lo + 0.05 * span, -np.inf)
    inner_hi = np.where(np.isfinite(hi), hi - 0.05 * span, np.inf)
    pts = x0 + rng.uniform(-1.0, 1.0, size=(count, len(x0))) * r
    pts = np.clip(pts, inner_lo, inner_hi)
    fixed = lo >= hi
    pts[:, fixed] = lo[fixed]
    return pts
