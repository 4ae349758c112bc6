"""Primal-dual interior-point method for :class:`NlpModel`.

Inequality rows get slack variables; fixed variables (``lo == hi``) are
removed before the loop.  Each iteration solves the regularized primal-dual
KKT system with a sparse LDL^T factorization whose diagonal gives the
inertia, so the primal block is convexified when necessary.  Steps are
globalized with an l1 merit function, a fraction-to-boundary rule and one
second-order correction.  The barrier parameter follows the monotone
Fiacco-McCormick strategy.

Iterate log columns (one line per iteration, fixed format)::

    iter  mu  objective  stationarity  feasibility  complementarity
    delta_w  alpha_primal  alpha_dual  line_search_trials
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np
import qdldl
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .kkt import kkt_residuals
from .model import NlpModel

LOG_HEADER = "iter         mu           objective      stat      feas      comp   delta_w   alpha_p   alpha_d ls"


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 300
    mu_init: float = 0.1
    mu_factor: float = 0.2
    mu_superlinear: float = 1.5
    kappa: float = 0.99
    armijo: float = 1e-4
    delta_w_init: float = 1e-8
    delta_w_growth: float = 10.0
    delta_w_max: float = 1e10
    delta_c: float = 1e-10
    max_backtracks: int = 4
    max_bumps: int = 8
    bump_init: float = 1e-4
    bound_push: float = 1e-2
    bound_relax: float = 1e-8
    hessian: str = "exact"
    debug: bool = False
    log: object = None  # callable taking one line, or None

    def __post_init__(self):
        for name in ("tol", "mu_init", "armijo", "delta_w_init", "delta_w_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.bound_relax >= 0:
            raise ValueError("bound_relax must be non-negative")
        if not 0 < self.kappa < 1 or not 0 < self.mu_factor < 1:
            raise ValueError("kappa and mu_factor must lie in (0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.hessian not in ("exact", "gauss-newton"):
            raise ValueError("hessian must be 'exact' or 'gauss-newton'")


@dataclass
class Solution:
    status: Status
    x: np.ndarray
    y: np.ndarray
    zl: np.ndarray
    zu: np.ndarray
    objective: float
    iterations: int
    seconds: float
    stationarity: float
    feasibility: float
    complementarity: float
    log: list = field(default_factory=list)
    mu_history: list = field(default_factory=list)
    message: str = ""

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    @property
    def kkt(self):
        return self.stationarity, self.feasibility, self.complementarity


class _SymAssembler:
    """Fixed-pattern upper-triangular CSC assembly from COO contributions."""

    def __init__(self, rows, cols, dim):
        rows = np.asarray(rows, np.int64)
        cols = np.asarray(cols, np.int64)
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        keys = hi * dim + lo
        uniq, self.inv = np.unique(keys, return_inverse=True)
        self.dim = dim
        self.nnz = len(uniq)
        col = uniq // dim
        self.indices = (uniq % dim).astype(np.int32)
        self.indptr = np.zeros(dim + 1, np.int32)
        np.add.at(self.indptr, col + 1, 1)
        self.indptr = np.cumsum(self.indptr).astype(np.int32)

    def matrix(self, vals):
        data = np.bincount(self.inv, weights=vals, minlength=self.nnz)
        return sp.csc_matrix((data, self.indices, self.indptr), shape=(self.dim, self.dim))


class _Problem:
    """Reduced view: free variables plus slacks, active constraint rows."""

    def __init__(self, model: NlpModel, opts: SolverOptions):
        self.model = model
        self.opts = opts
        lo, hi = model.lo, model.hi
        self.free = np.flatnonzero(lo < hi)
        self.fixed = np.flatnonzero(lo >= hi)
        self.n = len(self.free)
        colmap = np.full(model.n, -1, np.int64)
        colmap[self.free] = np.arange(self.n)
        self.colmap = colmap

        cl, cu = model.cl, model.cu
        eq = np.isfinite(cl) & (cl == cu)
        ineq = ~eq & (np.isfinite(cl) | np.isfinite(cu))
        self.rows = np.flatnonzero(eq | ineq)
        self.m = len(self.rows)
        rowmap = np.full(model.m, -1, np.int64)
        rowmap[self.rows] = np.arange(self.m)
        self.rowmap = rowmap
        self.eq_mask = eq[self.rows]
        self.ineq_rows = np.flatnonzero(~self.eq_mask)  # positions within active rows
        self.mi = len(self.ineq_rows)
        self.N = self.n + self.mi

        self.lw = np.concatenate([lo[self.free], cl[self.rows][self.ineq_rows]])
        self.uw = np.concatenate([hi[self.free], cu[self.rows][self.ineq_rows]])
        self.has_l = np.isfinite(self.lw)
        self.has_u = np.isfinite(self.uw)
        # a relative sliver of slack keeps the barrier problem solvable when the
        # feasible set touches a bound with no interior (a generator pinned at zero)
        r = opts.bound_relax
        self.lw = np.where(self.has_l, self.lw - r * np.maximum(1.0, np.abs(self.lw)), self.lw)
        self.uw = np.where(self.has_u, self.uw + r * np.maximum(1.0, np.abs(self.uw)), self.uw)
        self.rhs_eq = np.where(self.eq_mask, cl[self.rows], 0.0)

        t = model.terms
        # Jacobian entries restricted to free columns and active rows
        jr, jc = rowmap[t.jac_rows], colmap[t.jac_cols]
        self.jkeep = (jr >= 0) & (jc >= 0)
        self.jr, self.jc = jr[self.jkeep], jc[self.jkeep]
        # Hessian entries (constraints then objective)
        hr, hc = colmap[t.hess_rows], colmap[t.hess_cols]
        self.hkeep = (hr >= 0) & (hc >= 0)
        obj = model.objective
        ohr, ohc = colmap[obj.h_rows], colmap[obj.h_cols]
        self.ohkeep = (ohr >= 0) & (ohc >= 0)
        h_rows = np.concatenate([hr[self.hkeep], ohr[self.ohkeep]])
        h_cols = np.concatenate([hc[self.hkeep], ohc[self.ohkeep]])
        self.h_upper = h_rows <= h_cols
        h_rows, h_cols = h_rows[self.h_upper], h_cols[self.h_upper]

        N, m = self.N, self.m
        diag = np.arange(N + m)
        slack_r = self.ineq_rows
        slack_c = self.n + np.arange(self.mi)
        self.kkt = _SymAssembler(
            np.concatenate([h_rows, diag, self.jc, slack_c]),
            np.concatenate([h_cols, diag, N + self.jr, N + slack_r]),
            N + m,
        )
        self.n_h = len(h_rows)
        self.slack_pos = (slack_r, slack_c)

    # -- evaluations in the reduced space ----------------------------------

    def full_x(self, x):
        xf = self.model.x0.copy()
        xf[self.fixed] = self.model.lo[self.fixed]
        xf[self.free] = x
        return xf

    def evaluate(self, w):
        xf = self.full_x(w[: self.n])
        c = self.model.constraints(xf)[self.rows]
        C = c - self.rhs_eq
        C[self.ineq_rows] -= w[self.n :]
        return xf, C

    def jac_vals(self, xf):
        return self.model.terms.jac_values(xf)[self.jkeep]

    def A_matrix(self, jv):
        rows = np.concatenate([self.jr, self.slack_pos[0]])
        cols = np.concatenate([self.jc, self.slack_pos[1]])
        vals = np.concatenate([jv, -np.ones(self.mi)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.N))

    def hess_vals(self, xf, y_active, jv):
        model = self.model
        y = np.zeros(model.m)
        y[self.rows] = y_active
        oh = model.obj_scale * model.objective.h_vals[self.ohkeep]
        if self.opts.hessian == "exact":
            ch = model.terms.hess_values(xf, y)[self.hkeep]
        else:
            ch = np.zeros(int(self.hkeep.sum()))
        return np.concatenate([ch, oh])[self.h_upper]

    def grad(self, xf):
        g = np.zeros(self.N)
        g[: self.n] = self.model.grad(xf)[self.free]
        return g


def _frac_to_boundary(v, dv, lo, hi, has_l, has_u, tau):
    alpha = 1.0
    if np.any(has_l):
        d = dv[has_l]
        neg = d < 0
        if np.any(neg):
            gap = (v[has_l] - lo[has_l])[neg]
            alpha = min(alpha, float(np.min(-tau * gap / d[neg])))
    if np.any(has_u):
        d = dv[has_u]
        pos = d > 0
        if np.any(pos):
            gap = (hi[has_u] - v[has_u])[pos]
            alpha = min(alpha, float(np.min(tau * gap / d[pos])))
    return alpha


def _frac_dual(z, dz, tau):
    neg = dz < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-tau * z[neg] / dz[neg])))


def solve(model: NlpModel, opts: SolverOptions | None = None) -> Solution:
    """Solve ``min f(x) s.t. cl <= c(x) <= cu, lo <= x <= hi``."""
    opts = opts or SolverOptions()
    t_start = time.perf_counter()
    P = _Problem(model, opts)
    n, N, m = P.n, P.N, P.m
    lw, uw, has_l, has_u = P.lw, P.uw, P.has_l, P.has_u
    log_lines: list[str] = []

    def emit(line):
        log_lines.append(line)
        if opts.log is not None:
            opts.log(line)

    emit(LOG_HEADER)

    # initial point pushed into the interior
    x0 = model.x0[P.free].copy()
    xf0 = P.full_x(x0)
    s0 = model.constraints(xf0)[P.rows][P.ineq_rows]
    w = np.concatenate([x0, s0])
    kp = opts.bound_push
    span = np.where(has_l & has_u, uw - lw, np.inf)
    pl = np.where(has_l, np.minimum(kp * np.maximum(1.0, np.abs(lw)), 0.5 * kp * span), 0.0)
    pu = np.where(has_u, np.minimum(kp * np.maximum(1.0, np.abs(uw)), 0.5 * kp * span), 0.0)
    w = np.where(has_l, np.maximum(w, lw + pl), w)
    w = np.where(has_u, np.minimum(w, uw - pu), w)

    y = np.zeros(m)
    zl = np.where(has_l, 1.0, 0.0)
    zu = np.where(has_u, 1.0, 0.0)
    mu = opts.mu_init
    nu = 1.0
    delta_w_last = 0.0
    status = None
    message = ""
    mu_hist = []
    theta_hist = []
    factor = None
    polished = None
    last_polish, next_polish = 0, 0  # re-estimation attempts back off, up to every 10th iteration
    it = 0
    kkt_now = (math.inf, math.inf, math.inf)

    def merit_parts(w_, mu_):
        xf_, C_ = P.evaluate(w_)
        phi = model.f(xf_)
        if np.any(has_l):
            phi -= mu_ * float(np.sum(np.log(w_[has_l] - lw[has_l])))
        if np.any(has_u):
            phi -= mu_ * float(np.sum(np.log(uw[has_u] - w_[has_u])))
        return phi, float(np.sum(np.abs(C_))), xf_, C_

    def original_multipliers(w_, y_, zl_, zu_):
        # reported points honour the unrelaxed variable bounds
        xf_ = np.clip(P.full_x(w_[:n]), model.lo, model.hi)
        yf = np.zeros(model.m)
        yf[P.rows] = y_
        zlf = np.zeros(model.n)
        zuf = np.zeros(model.n)
        zlf[P.free] = zl_[:n]
        zuf[P.free] = zu_[:n]
        return xf_, yf, zlf, zuf

    xf, C = P.evaluate(w)
    y = _least_squares_multipliers(P, xf, w, zl, zu)
    while True:
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(C))):
            status, message = Status.NUMERICAL_FAILURE, "non-finite iterate"
            break
        g = P.grad(xf)
        jv = P.jac_vals(xf)
        A = P.A_matrix(jv)
        gap_l = np.where(has_l, w - lw, 1.0)
        gap_u = np.where(has_u, uw - w, 1.0)

        # optimality test on the original problem
        kkt_now = kkt_residuals(model, *original_multipliers(w, y, zl, zu))
        theta = float(np.max(np.abs(C), initial=0.0))
        theta_hist.append(theta)
        if max(kkt_now) <= opts.tol:
            status = Status.OPTIMAL
            emit(_log_line(it, mu, model.cost(xf), kkt_now, 0.0, 0.0, 0.0, 0))
            break
        if kkt_now[1] <= opts.tol and it >= next_polish:
            next_polish = it + min(10, max(1, it - last_polish))
            last_polish = it
            # feasible, but the barrier multipliers may be far from any valid set
            # (degenerate bounds, where they grow like mu / gap); try a fresh estimate
            polished = _polished_multipliers(model, np.clip(xf, model.lo, model.hi), opts.tol)
            if polished is not None:
                status = Status.OPTIMAL
                emit(_log_line(it, mu, model.cost(xf), polished[1], 0.0, 0.0, 0.0, 0))
                break
        if it >= opts.max_iter:
            status, message = Status.ITERATION_LIMIT, f"stopped after {it} iterations"
            emit(_log_line(it, mu, model.cost(xf), kkt_now, 0.0, 0.0, 0.0, 0))
            break

        # barrier subproblem error and monotone mu update
        while True:
            stat = g + A.T @ y - zl + zu
            sd = max(100.0, (np.sum(np.abs(y)) + np.sum(zl) + np.sum(zu)) / max(1, N + m)) / 100.0
            comp_l = np.where(has_l, gap_l * zl - mu, 0.0)
            comp_u = np.where(has_u, gap_u * zu - mu, 0.0)
            err = max(float(np.max(np.abs(stat), initial=0.0)) / sd, theta,
                      float(np.max(np.abs(np.concatenate([comp_l, comp_u])), initial=0.0)) / sd)
            if err > 10.0 * mu or mu <= opts.tol / 10.0 + 1e-300:
                break
            mu = max(opts.tol / 10.0, min(opts.mu_factor * mu, mu ** opts.mu_superlinear))
            # new barrier problem: merit penalty restarts from its current value
        mu_hist.append(mu)
        tau = max(opts.kappa, 1.0 - mu)

        # KKT matrix pieces
        sig = np.where(has_l, zl / gap_l, 0.0) + np.where(has_u, zu / gap_u, 0.0)
        hv = P.hess_vals(xf, y, jv)
        grad_phi = g - np.where(has_l, mu / gap_l, 0.0) + np.where(has_u, mu / gap_u, 0.0)
        r_w = grad_phi + A.T @ y

        def assemble(dw_reg, dc_reg):
            diag = np.concatenate([sig + dw_reg, np.full(m, -dc_reg)])
            if opts.hessian == "gauss-newton":
                col_sq = np.zeros(N)
                np.add.at(col_sq, P.jc, jv * jv)
                diag[:N] += 1e-4 * col_sq
            vals = np.concatenate([hv, diag, jv, -np.ones(P.mi)])
            return P.kkt.matrix(vals)

        def factorize(K):
            nonlocal factor
            try:
                if factor is None:
                    factor = qdldl.Solver(K, upper=True)
                else:
                    factor.update(K, upper=True)
            except RuntimeError:
                return False
            d = factor.factors()[1]
            if not np.all(np.isfinite(d)):
                return False
            return int(np.sum(d > 0)) == N and int(np.sum(d < 0)) == m

        delta_w = 0.0
        ok = factorize(assemble(0.0, opts.delta_c))
        if not ok:
            delta_w = opts.delta_w_init if delta_w_last == 0.0 else max(opts.delta_w_init, delta_w_last / 3.0)
            while True:
                ok = factorize(assemble(delta_w, opts.delta_c))
                if ok or delta_w > opts.delta_w_max:
                    break
                delta_w *= opts.delta_w_growth if delta_w_last == 0.0 else opts.delta_w_growth
        if not ok:
            status, message = Status.NUMERICAL_FAILURE, "KKT matrix could not be regularized"
            break
        delta_w_last = delta_w
        K_exact = assemble(delta_w, 0.0)
        K_sym = _full_symmetric(K_exact)

        def kkt_solve(rhs):
            sol = factor.solve(rhs)
            # refine against the system without dual regularization
            for _ in range(2):
                res = rhs - K_sym @ sol
                if not np.all(np.isfinite(res)):
                    return sol
                sol = sol + factor.solve(res)
            res = rhs - K_sym @ sol
            if not np.all(np.isfinite(res)) or _constraints_accurate(res, rhs, N):
                return sol
            # refinement stalls when the regularization outweighs J S^-1 J^T
            # (huge barrier diagonal); Krylov iterations on the same factor fix it
            Mop = spla.LinearOperator(K_sym.shape, matvec=factor.solve)
            better, _ = spla.gmres(K_sym, rhs, x0=sol, M=Mop, rtol=1e-12, atol=0.0, restart=20, maxiter=1)
            if np.all(np.isfinite(better)) and np.linalg.norm(rhs - K_sym @ better) < np.linalg.norm(res):
                sol = better
            return sol

        def dz_of(dw_):
            dzl = np.where(has_l, mu / gap_l - zl - zl / gap_l * dw_, 0.0)
            dzu = np.where(has_u, mu / gap_u - zu + zu / gap_u * dw_, 0.0)
            return dzl, dzu

        rhs = -np.concatenate([r_w, C])
        c1 = float(np.sum(np.abs(C)))
        phi0, _, _, _ = merit_parts(w, mu)
        theta_noise = 1e3 * np.finfo(float).eps * max(1, m)
        bumps = 0
        while True:
            sol = kkt_solve(rhs)
            dw, dy = sol[:N], sol[N:]
            if not np.all(np.isfinite(sol)):
                break

            # penalty parameter update
            Wdd = float(dw @ (_sym_matvec(K_exact, np.concatenate([dw, np.zeros(m)]))[:N]))
            if c1 > 0:
                nu_trial = (float(grad_phi @ dw) + 0.5 * max(Wdd, 0.0)) / (0.9 * c1)
                if nu < nu_trial:
                    nu = 1.1 * nu_trial + 1e-4
            D = float(grad_phi @ dw) - nu * c1
            merit0 = phi0 + nu * c1
            alpha_max = _frac_to_boundary(w, dw, lw, uw, has_l, has_u, tau)
            alpha = alpha_max
            accepted = False
            trials = 0
            step_w = dw
            step_y = dy
            # a step lost in rounding cannot be judged by the merit function; take it
            if np.max(np.abs(dw) / (1.0 + np.abs(w)), initial=0.0) < 10.0 * np.finfo(float).eps:
                w_try = w + alpha * dw
                phi_t, c1_t, xf_t, C_t = merit_parts(w_try, mu)
                accepted = bool(np.isfinite(phi_t))
            while alpha > 1e-14 and not accepted:
                trials += 1
                w_try = w + alpha * step_w
                phi_t, c1_t, xf_t, C_t = merit_parts(w_try, mu)
                if np.isfinite(phi_t) and phi_t + nu * c1_t <= merit0 + opts.armijo * alpha * min(D, 0.0) + 1e-14 * max(1.0, abs(merit0)):
                    accepted = True
                    break
                if np.isfinite(phi_t) and c1 <= theta_noise and c1_t <= theta_noise and \
                        phi_t <= phi0 + opts.armijo * alpha * min(float(grad_phi @ dw), 0.0) + 1e-14 * max(1.0, abs(phi0)):
                    # both violations are rounding noise that nu would amplify
                    accepted = True
                    break
                if trials == 1 and c1_t >= c1 and c1 > 0:
                    # second-order correction
                    c_soc = alpha * C + C_t
                    sol_soc = kkt_solve(-np.concatenate([r_w, c_soc]))
                    dw_soc = sol_soc[:N]
                    a_soc = _frac_to_boundary(w, dw_soc, lw, uw, has_l, has_u, tau)
                    w_soc = w + a_soc * dw_soc
                    phi_s, c1_s, xf_s, C_s = merit_parts(w_soc, mu)
                    if np.isfinite(phi_s) and phi_s + nu * c1_s <= merit0 + opts.armijo * alpha * min(D, 0.0):
                        step_w, step_y, alpha = dw_soc, sol_soc[N:], a_soc
                        w_try, xf_t, C_t = w_soc, xf_s, C_s
                        accepted = True
                        break
                if trials >= opts.max_backtracks and bumps < opts.max_bumps:
                    break
                alpha *= 0.5
            if accepted or bumps >= opts.max_bumps:
                break
            # deep backtracking: the quadratic model is not trusted this far, so
            # shorten the step by stiffening the primal block and try again
            bumps += 1
            delta_w = max(opts.bump_init, opts.delta_w_growth * delta_w)
            if not factorize(assemble(delta_w, opts.delta_c)):
                break
            K_exact = assemble(delta_w, 0.0)
            K_sym = _full_symmetric(K_exact)
        if not np.all(np.isfinite(sol)):
            status, message = Status.NUMERICAL_FAILURE, "non-finite search direction"
            break
        if not accepted:
            # tiny step: take it anyway so the barrier loop can progress or stall visibly
            alpha = min(alpha_max, 1e-8) if alpha_max > 0 else 0.0
            w_try = w + alpha * dw
            xf_t, C_t = P.evaluate(w_try)
            step_y = dy
            step_w = dw

        dzl, dzu = dz_of(step_w)
        alpha_z = min(_frac_dual(zl[has_l], dzl[has_l], tau) if np.any(has_l) else 1.0,
                      _frac_dual(zu[has_u], dzu[has_u], tau) if np.any(has_u) else 1.0)
        w = w_try
        y = y + alpha * step_y
        zl = zl + alpha_z * dzl
        zu = zu + alpha_z * dzu
        # keep bound multipliers close to the central path
        gap_l = np.where(has_l, w - lw, 1.0)
        gap_u = np.where(has_u, uw - w, 1.0)
        ks = 1e10
        zl = np.where(has_l, np.clip(zl, mu / (ks * gap_l), ks * mu / gap_l), 0.0)
        zu = np.where(has_u, np.clip(zu, mu / (ks * gap_u), ks * mu / gap_u), 0.0)
        xf, C = xf_t, C_t
        if opts.debug:
            assert np.all(w[has_l] > lw[has_l]) and np.all(w[has_u] < uw[has_u]), "iterate left the interior"
        it += 1
        emit(_log_line(it, mu, model.cost(xf), kkt_now, delta_w, alpha, alpha_z, trials))

        # infeasibility detection
        th = float(np.max(np.abs(C), initial=0.0))
        if it >= 30 and th > 1e3 * opts.tol:
            recent = min(theta_hist[-10:])
            before = min(theta_hist[-30:-10])
            if recent > 0.99 * before:
                status, message = Status.INFEASIBLE, "constraint violation stalled"
                break
            grad_theta = float(np.max(np.abs(P.A_matrix(P.jac_vals(xf)).T @ C), initial=0.0))
            if grad_theta < 1e-8 * max(1.0, th) and not accepted:
                status, message = Status.INFEASIBLE, "stationary point of the constraint violation"
                break
        if nu > 1e14 and th > opts.tol:
            status, message = Status.INFEASIBLE, "penalty parameter diverged"
            break

    if polished is not None:
        (xf_final, yf, zlf, zuf), _ = polished
    else:
        xf_final, yf, zlf, zuf = original_multipliers(w, y, zl, zu)
    stat, feas, comp = kkt_residuals(model, xf_final, yf, zlf, zuf)
    if status is Status.OPTIMAL and max(stat, feas, comp) > opts.tol:
        status = Status.NUMERICAL_FAILURE
    return Solution(
        status=status,
        x=xf_final,
        y=yf,
        zl=zlf,
        zu=zuf,
        objective=model.cost(xf_final),
        iterations=it,
        seconds=time.perf_counter() - t_start,
        stationarity=stat,
        feasibility=feas,
        complementarity=comp,
        log=log_lines,
        mu_history=mu_hist,
        message=message,
    )


def _least_squares_multipliers(P, xf, w, zl, zu):
    """Constraint multipliers minimizing the initial stationarity residual."""
    if P.m == 0:
        return np.zeros(0)
    A = P.A_matrix(P.jac_vals(xf))
    g = P.grad(xf) - zl + zu
    K = sp.bmat([[sp.identity(P.N), A.T], [A, None]], format="csc")
    rhs = np.concatenate([-g, np.zeros(P.m)])
    try:
        sol = spla.splu(K).solve(rhs)
    except RuntimeError:
        return np.zeros(P.m)
    y = sol[P.N :]
    if not np.all(np.isfinite(y)) or np.max(np.abs(y), initial=0.0) > 1e3:
        return np.zeros(P.m)
    return y


def _polished_multipliers(model, x, tol):
    """Sign-constrained least-squares multipliers at ``x``.

    Only bounds and inequality rows within ``sqrt(tol)`` of being active may
    carry a multiplier, and each such multiplier is damped by its distance to
    the bound so complementarity is fitted along with stationarity.  Returns ``((x, y, zl, zu), kkt)`` when the estimate
    meets ``tol`` and None otherwise.
    """
    lo, hi = model.lo, model.hi
    free = np.flatnonzero(lo < hi)
    if len(free) == 0:
        return None
    near = math.sqrt(tol)
    c = model.constraints(x)
    cl, cu = model.cl, model.cu
    eq = np.isfinite(cl) & (cl == cu)
    at_u = ~eq & np.isfinite(cu) & (cu - c <= near * np.maximum(1.0, np.abs(cu)))
    at_l = ~eq & np.isfinite(cl) & (c - cl <= near * np.maximum(1.0, np.abs(cl)))
    rows = np.flatnonzero(eq | at_u | at_l)
    bl = free[np.isfinite(lo[free]) & (x[free] - lo[free] <= near * np.maximum(1.0, np.abs(lo[free])))]
    bu = free[np.isfinite(hi[free]) & (hi[free] - x[free] <= near * np.maximum(1.0, np.abs(hi[free])))]
    pos = np.full(model.n, -1)
    pos[free] = np.arange(len(free))
    JT = model.jacobian(x).T.tocsr()[free][:, rows]
    k = len(free)
    El = sp.csr_matrix((-np.ones(len(bl)), (pos[bl], np.arange(len(bl)))), shape=(k, len(bl)))
    Eu = sp.csr_matrix((np.ones(len(bu)), (pos[bu], np.arange(len(bu)))), shape=(k, len(bu)))
    M = sp.hstack([JT, El, Eu], format="csr")
    if M.shape[1] == 0:
        return None
    low = np.concatenate([np.where(at_u[rows] & ~at_l[rows], 0.0, -np.inf),
                          np.zeros(len(bl) + len(bu))])
    high = np.concatenate([np.where(at_l[rows] & ~at_u[rows], 0.0, np.inf),
                           np.full(len(bl) + len(bu), np.inf)])
    damp = np.concatenate([
        np.where(at_u[rows] & ~at_l[rows], cu[rows] - c[rows], 0.0) +
        np.where(at_l[rows] & ~at_u[rows], c[rows] - cl[rows], 0.0),
        x[bl] - lo[bl],
        hi[bu] - x[bu],
    ])
    rhs = -model.grad(x)[free]
    v = _signed_least_squares(M, rhs, low, high, np.abs(damp))
    if v is None:
        return None
    y = np.zeros(model.m)
    y[rows] = v[: len(rows)]
    zl = np.zeros(model.n)
    zu = np.zeros(model.n)
    zl[bl] = v[len(rows): len(rows) + len(bl)]
    zu[bu] = v[len(rows) + len(bl):]
    kkt = kkt_residuals(model, x, y, zl, zu)
    if max(kkt) > tol:
        return None
    return (x, y, zl, zu), kkt


def _signed_least_squares(M, rhs, low, high, damp, passes=8):
    """``min |M v - rhs|^2 + |damp * v|^2`` with sign bounds on ``v``.

    Wrongly signed columns are dropped and the fit repeated.

    A cheap active-set loop; callers verify the result independently.
    """
    k, p = M.shape
    keep = np.ones(p, bool)
    v = np.zeros(p)
    for _ in range(passes):
        cols = np.flatnonzero(keep)
        Ms = M[:, cols]
        # [[I, Ms], [Ms^T, -D^2]] [r; v] = [rhs; 0] gives the damped LS solution
        D2 = sp.diags(damp[cols] ** 2 + 1e-12)
        K = sp.bmat([[sp.identity(k), Ms], [Ms.T, -D2]], format="csc")
        try:
            sol = spla.splu(K).solve(np.concatenate([rhs, np.zeros(len(cols))]))
        except RuntimeError:
            return None
        if not np.all(np.isfinite(sol)):
            return None
        v[:] = 0.0
        v[cols] = sol[k:]
        wrong = keep & ((v < low) | (v > high))
        if not wrong.any():
            return v
        keep &= ~wrong
    return None


def _constraints_accurate(res, rhs, N):
    """Constraint rows of the step residual small against the violation itself.

    Near a solution the violation sits many orders below the stationarity
    rows, so an absolute test on the whole residual would miss this.
    """
    floor = 1e-14 * max(1.0, float(np.max(np.abs(rhs[:N]), initial=0.0)))
    return np.max(np.abs(res[N:]), initial=0.0) <= 1e-3 * float(np.max(np.abs(rhs[N:]), initial=0.0)) + floor


def _full_symmetric(U):
    return (U + U.T - sp.diags(U.diagonal())).tocsr()


def _sym_matvec(U, v):
    """Product with the symmetric matrix whose upper triangle is ``U``."""
    return U @ v + U.T @ v - U.diagonal() * v


def _log_line(it, mu, obj, kkt, delta_w, alpha_p, alpha_d, trials):
    return (f"{it:4d} {mu:10.3e} {obj:+19.12e} {kkt[0]:9.2e} {kkt[1]:9.2e} {kkt[2]:9.2e} "
            f"{delta_w:9.2e} {alpha_p:9.2e} {alpha_d:9.2e} {trials:2d}")


def solve_linear(model: NlpModel, opts: SolverOptions | None = None) -> Solution:
    """Same interior-point loop, restricted to models whose constraints are affine."""
    if not model.is_affine():
        raise ValueError("solve_linear requires affine constraint blocks")
    return solve(model, opts)
