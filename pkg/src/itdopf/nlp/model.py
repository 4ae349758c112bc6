"""Formulation-agnostic NLP container.

Constraints are sums of four term families, all evaluated vectorized:

* linear     ``a * x[col]`` plus a per-row constant;
* polar      ``cx * X + cw * W`` with ``X = x[ia] x[ic] cos(x[ja] - x[jc])`` and
             ``W = x[ia] x[ic] sin(x[ja] - x[jc])``;
* quadratic  ``coef * x[p] * x[q]``;
* tangent    ``coef * tan(atan(x[fa] / x[ea]) + shift) * x[eb]``.

Every family has exact first and second derivatives, so the model offers
residuals, a sparse Jacobian, and the Hessian of the Lagrangian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import kernels

_I = np.int64


def _cat(parts, dtype=float):
    if not parts:
        return np.zeros(0, dtype=dtype)
    return np.concatenate([np.asarray(p, dtype=dtype).ravel() for p in parts])


def _bcast(n, *arrays):
    out = []
    for a in arrays:
        a = np.asarray(a)
        out.append(np.broadcast_to(a, (n,)).copy() if a.ndim == 0 else a.ravel())
    return out


class TermSet:
    """Immutable bundle of constraint terms over ``m`` rows."""

    def __init__(self, m, lin=None, const=None, polar=None, quad=None, tan=None):
        self.m = int(m)
        empty_i = np.zeros(0, dtype=_I)
        empty_f = np.zeros(0)
        self.lin_r, self.lin_c, self.lin_v = lin if lin is not None else (empty_i, empty_i, empty_f)
        self.const = np.zeros(self.m) if const is None else np.asarray(const, float)
        if polar is None:
            polar = (empty_i,) * 5 + (empty_f, empty_f)
        self.pol_r, self.pol_ia, self.pol_ja, self.pol_ic, self.pol_jc, self.pol_cx, self.pol_cw = polar
        if quad is None:
            quad = (empty_i, empty_i, empty_i, empty_f)
        self.q_r, self.q_p, self.q_q, self.q_c = quad
        if tan is None:
            tan = (empty_i,) * 4 + (empty_f, empty_f)
        self.t_r, self.t_ea, self.t_fa, self.t_eb, self.t_shift, self.t_c = tan
        for name in ("lin_v", "const", "pol_cx", "pol_cw", "q_c", "t_shift", "t_c"):
            getattr(self, name).setflags(write=False)

        self.jac_rows = _cat([self.lin_r, np.repeat(self.pol_r, 4), np.repeat(self.q_r, 2),
                              np.repeat(self.t_r, 3)], _I)
        pol_vars = np.column_stack([self.pol_ia, self.pol_ja, self.pol_ic, self.pol_jc]) \
            if len(self.pol_r) else np.zeros((0, 4), _I)
        tan_vars = np.column_stack([self.t_ea, self.t_fa, self.t_eb]) if len(self.t_r) else np.zeros((0, 3), _I)
        self._pol_vars = pol_vars
        self._tan_vars = tan_vars
        self.jac_cols = _cat([self.lin_c, pol_vars.ravel(),
                              np.column_stack([self.q_p, self.q_q]).ravel() if len(self.q_r) else [],
                              tan_vars.ravel()], _I)

        # Hessian structure: both triangles of every off-diagonal pair.
        hr, hc = [], []
        if len(self.pol_r):
            for a, b in kernels.HESS_PAIRS:
                hr.append(pol_vars[:, a]); hc.append(pol_vars[:, b])
                if a != b:
                    hr.append(pol_vars[:, b]); hc.append(pol_vars[:, a])
        if len(self.q_r):
            hr += [self.q_p, self.q_q]; hc += [self.q_q, self.q_p]
        if len(self.t_r):
            for a, b in _TAN_PAIRS:
                hr.append(tan_vars[:, a]); hc.append(tan_vars[:, b])
                if a != b:
                    hr.append(tan_vars[:, b]); hc.append(tan_vars[:, a])
        self.hess_rows = _cat(hr, _I)
        self.hess_cols = _cat(hc, _I)

    @property
    def is_affine(self) -> bool:
        return not (len(self.pol_r) or len(self.q_r) or len(self.t_r))

    def variables(self) -> np.ndarray:
        return np.unique(self.jac_cols)

    # -- evaluation ---------------------------------------------------------

    def _polar(self, x):
        return kernels.polar_pair_eval(
            x[self.pol_ia], x[self.pol_ja], x[self.pol_ic], x[self.pol_jc], self.pol_cx, self.pol_cw
        )

    def _tan(self, x):
        ea, fa, eb = x[self.t_ea], x[self.t_fa], x[self.t_eb]
        rho2 = ea * ea + fa * fa
        alpha = np.arctan(fa / ea)
        T = np.tan(alpha + self.t_shift)
        dT = 1.0 + T * T
        a_e = -fa / rho2
        a_f = ea / rho2
        return ea, fa, eb, rho2, T, dT, a_e, a_f

    def values(self, x) -> np.ndarray:
        r = self.const.copy()
        if len(self.lin_r):
            np.add.at(r, self.lin_r, self.lin_v * x[self.lin_c])
        if len(self.pol_r):
            v, _ = self._polar(x)
            np.add.at(r, self.pol_r, v)
        if len(self.q_r):
            np.add.at(r, self.q_r, self.q_c * x[self.q_p] * x[self.q_q])
        if len(self.t_r):
            _, _, eb, _, T, *_ = self._tan(x)
            np.add.at(r, self.t_r, self.t_c * T * eb)
        return r

    def jac_values(self, x) -> np.ndarray:
        parts = [self.lin_v]
        if len(self.pol_r):
            _, jac = self._polar(x)
            parts.append(jac.ravel())
        if len(self.q_r):
            parts.append(np.column_stack([self.q_c * x[self.q_q], self.q_c * x[self.q_p]]).ravel())
        if len(self.t_r):
            ea, fa, eb, rho2, T, dT, a_e, a_f = self._tan(x)
            c = self.t_c
            parts.append(np.column_stack([c * eb * dT * a_e, c * eb * dT * a_f, c * T]).ravel())
        return _cat(parts)

    def hess_values(self, x, y) -> np.ndarray:
        """Entries of ``sum_i y_i * Hess(c_i)`` aligned with ``hess_rows/cols``."""
        parts = []
        if len(self.pol_r):
            w = y[self.pol_r]
            h = kernels.polar_pair_hess(
                x[self.pol_ia], x[self.pol_ja], x[self.pol_ic], x[self.pol_jc], self.pol_cx, self.pol_cw, w
            )
            for k, (a, b) in enumerate(kernels.HESS_PAIRS):
                parts.append(h[:, k])
                if a != b:
                    parts.append(h[:, k])
        if len(self.q_r):
            v = self.q_c * y[self.q_r]
            parts += [v, v]
        if len(self.t_r):
            ea, fa, eb, rho2, T, dT, a_e, a_f = self._tan(x)
            w = self.t_c * y[self.t_r]
            d2T = 2.0 * T * dT
            rho4 = rho2 * rho2
            a_ee = 2.0 * ea * fa / rho4
            a_ff = -a_ee
            a_ef = (fa * fa - ea * ea) / rho4
            T_ee = d2T * a_e * a_e + dT * a_ee
            T_ff = d2T * a_f * a_f + dT * a_ff
            T_ef = d2T * a_e * a_f + dT * a_ef
            vals = {
                (0, 0): w * eb * T_ee,
                (0, 1): w * eb * T_ef,
                (0, 2): w * dT * a_e,
                (1, 1): w * eb * T_ff,
                (1, 2): w * dT * a_f,
                (2, 2): np.zeros_like(w),
            }
            for a, b in _TAN_PAIRS:
                parts.append(vals[(a, b)])
                if a != b:
                    parts.append(vals[(a, b)])
        return _cat(parts)

    def tangent_conditioning(self, x):
        """Per tangent term: ``(|e_a|, |cos(alpha + shift)|)`` (small values mean ill-conditioned)."""
        if not len(self.t_r):
            return np.zeros(0), np.zeros(0)
        ea, fa = x[self.t_ea], x[self.t_fa]
        return np.abs(ea), np.abs(np.cos(np.arctan(fa / ea) + self.t_shift))


_TAN_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def merge_termsets(sets, offsets, m) -> TermSet:
    def cat(attr, dtype, shift=False):
        return _cat([getattr(s, attr) + (o if shift else 0) for s, o in zip(sets, offsets)], dtype)

    I, F = _I, float
    const = np.zeros(m)
    for s, o in zip(sets, offsets):
        const[o : o + s.m] = s.const
    return TermSet(
        m,
        lin=(cat("lin_r", I, True), cat("lin_c", I), cat("lin_v", F)),
        const=const,
        polar=(cat("pol_r", I, True), cat("pol_ia", I), cat("pol_ja", I), cat("pol_ic", I),
               cat("pol_jc", I), cat("pol_cx", F), cat("pol_cw", F)),
        quad=(cat("q_r", I, True), cat("q_p", I), cat("q_q", I), cat("q_c", F)),
        tan=(cat("t_r", I, True), cat("t_ea", I), cat("t_fa", I), cat("t_eb", I),
             cat("t_shift", F), cat("t_c", F)),
    )


@dataclass(frozen=True)
class ConstraintBlock:
    """A named group of rows with ``cl <= c(x) <= cu``.

    ``kind`` is ``"eq"`` when every row has ``cl == cu``.
    """

    name: str
    owner: str
    terms: TermSet
    cl: np.ndarray
    cu: np.ndarray
    row_labels: tuple = ()

    @property
    def m(self):
        return self.terms.m

    @property
    def kind(self):
        return "eq" if np.array_equal(self.cl, self.cu) else "ineq"

    def residual(self, x):
        return self.terms.values(x)

    def jacobian(self, x, n=None):
        n = len(x) if n is None else n
        return sp.csr_matrix(
            (self.terms.jac_values(x), (self.terms.jac_rows, self.terms.jac_cols)), shape=(self.m, n)
        )


class BlockBuilder:
    """Accumulates terms for one block; row indices are local to the block."""

    def __init__(self, name, owner, m, cl=0.0, cu=0.0):
        self.name = name
        self.owner = owner
        self.m = int(m)
        self.cl = np.broadcast_to(np.asarray(cl, float), (self.m,)).copy()
        self.cu = np.broadcast_to(np.asarray(cu, float), (self.m,)).copy()
        self.const = np.zeros(self.m)
        self._lin, self._pol, self._quad, self._tan = [], [], [], []
        self.labels = [""] * self.m

    def linear(self, row, col, val):
        n = np.size(col)
        self._lin.append(_bcast(max(n, np.size(row)), row, col, val))
        return self

    def constant(self, row, val):
        np.add.at(self.const, np.asarray(row), val)
        return self

    def polar(self, row, vm_a, va_a, vm_c, va_c, cx, cw):
        n = max(np.size(a) for a in (row, vm_a, va_a, vm_c, va_c, cx, cw))
        self._pol.append(_bcast(n, row, vm_a, va_a, vm_c, va_c, cx, cw))
        return self

    def quad(self, row, p, q, coef):
        n = max(np.size(a) for a in (row, p, q, coef))
        self._quad.append(_bcast(n, row, p, q, coef))
        return self

    def tangent(self, row, ea, fa, eb, shift, coef):
        n = max(np.size(a) for a in (row, ea, fa, eb, shift, coef))
        self._tan.append(_bcast(n, row, ea, fa, eb, shift, coef))
        return self

    def build(self) -> ConstraintBlock:
        def stack(parts, k, kinds):
            return tuple(_cat([p[j] for p in parts], kinds[j]) for j in range(k))

        I, F = _I, float
        terms = TermSet(
            self.m,
            lin=stack(self._lin, 3, (I, I, F)),
            const=self.const,
            polar=stack(self._pol, 7, (I, I, I, I, I, F, F)),
            quad=stack(self._quad, 4, (I, I, I, F)),
            tan=stack(self._tan, 6, (I, I, I, I, F, F)),
        )
        for attr in ("lin_r", "pol_r", "q_r", "t_r"):
            rows = getattr(terms, attr)
            if len(rows) and (rows.min() < 0 or rows.max() >= self.m):
                raise ValueError(f"block {self.name}: row index out of range")
        return ConstraintBlock(self.name, self.owner, terms, self.cl, self.cu, tuple(self.labels))


class QuadraticObjective:
    """``sum_k c2[k] (a_k . x)^2 + c1[k] (a_k . x) + c0[k]`` with sparse rows ``a_k``."""

    def __init__(self, n, rows, cols, vals, c2, c1, c0):
        self.n = n
        self.A = sp.csr_matrix((vals, (rows, cols)), shape=(len(c2), n))
        self.c2 = np.asarray(c2, float)
        self.c1 = np.asarray(c1, float)
        self.c0 = np.asarray(c0, float)
        H = (self.A.T @ sp.diags(2.0 * self.c2) @ self.A).tocoo()
        self.h_rows, self.h_cols, self.h_vals = H.row.astype(_I), H.col.astype(_I), H.data

    def value(self, x):
        p = self.A @ x
        return float(np.sum(self.c2 * p * p + self.c1 * p + self.c0))

    def terms(self, x):
        p = self.A @ x
        return self.c2 * p * p + self.c1 * p + self.c0

    def gradient(self, x):
        p = self.A @ x
        return self.A.T @ (2.0 * self.c2 * p + self.c1)

    @property
    def is_linear(self):
        return not np.any(self.c2)


@dataclass
class NlpModel:
    lo: np.ndarray
    hi: np.ndarray
    x0: np.ndarray
    names: list
    blocks: list
    objective: QuadraticObjective
    obj_scale: float = 1.0
    terms: TermSet = field(init=False, repr=False)
    cl: np.ndarray = field(init=False, repr=False)
    cu: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.offsets = np.cumsum([0] + [b.m for b in self.blocks])
        m = int(self.offsets[-1])
        self.terms = merge_termsets([b.terms for b in self.blocks], self.offsets[:-1], m)
        self.cl = _cat([b.cl for b in self.blocks])
        self.cu = _cat([b.cu for b in self.blocks])
        self.x0 = np.clip(self.x0, self.lo, self.hi)

    @property
    def n(self):
        return len(self.lo)

    @property
    def m(self):
        return int(self.offsets[-1])

    def block_rows(self, name):
        for b, o in zip(self.blocks, self.offsets):
            if b.name == name:
                return slice(o, o + b.m)
        raise KeyError(name)

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def is_affine(self):
        return self.terms.is_affine

    # scaled objective used by the solver
    def f(self, x):
        return self.obj_scale * self.objective.value(x)

    def grad(self, x):
        return self.obj_scale * self.objective.gradient(x)

    def cost(self, x):
        return self.objective.value(x)

    def constraints(self, x):
        return self.terms.values(x)

    def jacobian(self, x):
        t = self.terms
        return sp.csr_matrix((t.jac_values(x), (t.jac_rows, t.jac_cols)), shape=(self.m, self.n))

    def auto_scale(self, x=None, target=1.0):
        g = self.objective.gradient(self.x0 if x is None else x)
        gmax = float(np.max(np.abs(g), initial=0.0))
        self.obj_scale = target / max(target, gmax) if gmax > 0 else 1.0
        return self.obj_scale


class ModelBuilder:
    def __init__(self):
        self._lo, self._hi, self._x0, self._names = [], [], [], []
        self.n = 0
        self.blocks: list[ConstraintBlock] = []
        self._obj = ([], [], [], [], [], [])  # rows, cols, vals, c2, c1, c0

    def add_vars(self, name, count, lo=-np.inf, hi=np.inf, x0=0.0, labels=None) -> np.ndarray:
        idx = np.arange(self.n, self.n + count, dtype=_I)
        self._lo.append(np.broadcast_to(np.asarray(lo, float), (count,)))
        self._hi.append(np.broadcast_to(np.asarray(hi, float), (count,)))
        self._x0.append(np.broadcast_to(np.asarray(x0, float), (count,)))
        if labels is None:
            labels = [f"{name}[{k}]" for k in range(count)]
        self._names.extend(labels)
        self.n += count
        return idx

    def block(self, name, owner, m, cl=0.0, cu=0.0) -> BlockBuilder:
        return BlockBuilder(name, owner, m, cl, cu)

    def add_block(self, bb):
        blk = bb.build() if isinstance(bb, BlockBuilder) else bb
        if blk.m:
            self.blocks.append(blk)
        return blk

    def add_cost(self, cols, weights, c2, c1, c0):
        """One objective row ``c2 p^2 + c1 p + c0`` with ``p = sum(weights * x[cols])``."""
        row = len(self._obj[3])
        cols = np.atleast_1d(cols)
        self._obj[0].append(np.full(len(cols), row, _I))
        self._obj[1].append(cols)
        self._obj[2].append(np.broadcast_to(np.asarray(weights, float), (len(cols),)))
        self._obj[3].append(c2)
        self._obj[4].append(c1)
        self._obj[5].append(c0)

    def build(self) -> NlpModel:
        lo, hi, x0 = _cat(self._lo), _cat(self._hi), _cat(self._x0)
        if np.any(lo > hi):
            bad = int(np.argmax(lo > hi))
            raise ValueError(f"variable {self._names[bad]} has lower bound above upper bound")
        r, c, v, c2, c1, c0 = self._obj
        obj = QuadraticObjective(self.n, _cat(r, _I), _cat(c, _I), _cat(v), c2, c1, c0)
        return NlpModel(lo, hi, x0, list(self._names), list(self.blocks), obj)
