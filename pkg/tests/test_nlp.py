import numpy as np
import pytest

from itdopf.nlp.solver import LOG_HEADER
from itdopf.nlp import ModelBuilder, SolverOptions, Status, kkt_residuals, solve, solve_linear


def _bounded_quadratic():
    # min (x - 2)^2 on [0, 1]
    mb = ModelBuilder()
    x = mb.add_vars("x", 1, lo=0.0, hi=1.0, x0=0.5)
    mb.add_cost(x, 1.0, 1.0, -4.0, 4.0)
    return mb.build()


def _lp():
    # min x + y  s.t.  x + y >= 1,  x, y >= 0
    mb = ModelBuilder()
    v = mb.add_vars("v", 2, lo=0.0, x0=2.0)
    mb.add_cost(v[:1], 1.0, 0.0, 1.0, 0.0)
    mb.add_cost(v[1:], 1.0, 0.0, 1.0, 0.0)
    mb.add_block(mb.block("sum", "toy", 1, cl=1.0, cu=np.inf).linear(0, v, 1.0))
    return mb.build()


def _circle():
    # min x  s.t.  x^2 + y^2 = 1
    mb = ModelBuilder()
    v = mb.add_vars("v", 2, x0=(0.3, 0.8))
    mb.add_cost(v[:1], 1.0, 0.0, 1.0, 0.0)
    mb.add_block(mb.block("circle", "toy", 1, cl=1.0, cu=1.0).quad(0, v, v, 1.0))
    return mb.build()


def test_bound_active_minimum():
    sol = solve(_bounded_quadratic())
    assert sol.status is Status.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(1.0, abs=1e-5)
    # the upper-bound multiplier prices the clipped gradient 2(x - 2) = -2
    assert sol.zu[0] == pytest.approx(2.0, rel=1e-4)


def test_linear_program():
    model = _lp()
    assert model.is_affine()
    sol = solve_linear(model)
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(1.0, abs=1e-6)
    assert sol.x.sum() == pytest.approx(1.0, abs=1e-6)


def test_solve_linear_rejects_nonlinear_rows():
    with pytest.raises(ValueError):
        solve_linear(_circle())


def test_nonconvex_equality():
    sol = solve(_circle())
    assert sol.status is Status.OPTIMAL
    np.testing.assert_allclose(sol.x, [-1.0, 0.0], atol=1e-6)


def test_infeasible_rows_reported():
    mb = ModelBuilder()
    x = mb.add_vars("x", 1, lo=0.0, hi=1.0)
    mb.add_cost(x, 1.0, 0.0, 1.0, 0.0)
    mb.add_block(mb.block("too_big", "toy", 1, cl=2.0, cu=np.inf).linear(0, x, 1.0))
    sol = solve(mb.build(), SolverOptions(max_iter=200))
    assert sol.status is Status.INFEASIBLE


@pytest.mark.parametrize("make", [_bounded_quadratic, _lp, _circle])
def test_kkt_reverification(make):
    model = make()
    sol = solve(model)
    stat, feas, comp = kkt_residuals(model, sol.x, sol.y, sol.zl, sol.zu)
    assert max(stat, feas, comp) <= 1e-6
    assert (stat, feas, comp) == pytest.approx(sol.kkt, abs=1e-9)


def test_logs_are_deterministic():
    a, b = solve(_circle()), solve(_circle())
    assert a.log == b.log
    # header, one line per iteration, one summary line at the returned point
    assert a.log[0] == LOG_HEADER
    assert len(a.log) == a.iterations + 2


def test_log_hook_receives_every_line():
    seen = []
    sol = solve(_lp(), SolverOptions(log=seen.append))
    assert seen == sol.log


def test_iteration_limit():
    sol = solve(_circle(), SolverOptions(max_iter=1))
    assert sol.status is Status.ITERATION_LIMIT


@pytest.mark.parametrize("bad", [dict(tol=0.0), dict(kappa=1.0), dict(max_iter=-1), dict(hessian="bfgs")])
def test_option_validation(bad):
    with pytest.raises(ValueError):
        SolverOptions(**bad)


def test_inverted_bounds_rejected():
    mb = ModelBuilder()
    mb.add_vars("x", 1, lo=2.0, hi=1.0)
    with pytest.raises(ValueError, match="x\\[0\\]"):
        mb.build()
