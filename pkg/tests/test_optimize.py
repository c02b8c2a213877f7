import numpy as np
import pytest

from conftest import make_problem
from pffc import verify
from pffc.forward import uniform_times
from pffc.optimize import (IterationRecord, OptSettings, conjugate_gradient, fd_check_gradient, fit_order,
                           hessian_asymmetry, newton_cg)

Q = 3000.0


def test_opt_settings_validation():
    with pytest.raises(ValueError):
        OptSettings(damping=0.0)
    with pytest.raises(ValueError):
        OptSettings(newton_tol=-1.0)
    with pytest.raises(ValueError):
        OptSettings(cg_max=0)


def test_cg_solves_spd_system_in_weighted_inner_product(rng):
    n = 12
    B = rng.standard_normal((n, n))
    Mw = B @ B.T + n * np.eye(n)          # inner-product matrix
    C = rng.standard_normal((n, n))
    S = C @ C.T + np.eye(n)
    H = np.linalg.solve(Mw, S)            # self-adjoint in the Mw product
    g = rng.standard_normal(n)
    inner = lambda a, b: float(a @ Mw @ b)
    res = conjugate_gradient(lambda v: H @ v, g, inner, 1e-12, 100)
    assert res.converged and not res.negative_curvature
    assert res.iterations <= n + 2
    assert np.allclose(H @ res.x, -g, atol=1e-8)


def test_cg_negative_curvature_fallback():
    g = np.array([1.0, 2.0])
    res = conjugate_gradient(lambda v: -v, g, lambda a, b: float(a @ b), 1e-2, 10, descent_scale=0.5)
    assert res.negative_curvature and res.iterations == 1
    assert np.allclose(res.x, -0.5 * g)


def test_cg_zero_gradient():
    res = conjugate_gradient(lambda v: v, np.zeros(3), lambda a, b: float(a @ b), 1e-2, 10)
    assert res.converged and res.iterations == 0 and not np.any(res.x)


def test_csv_row_round_trips_17_digits():
    rec = IterationRecord(3, 7, 1 / 3, 2e-9, np.pi, 0.1, 1e-300, 2473.4)
    row = rec.csv_row().split(",")
    assert row[:2] == ["3", "7"]
    assert [float(v) for v in row[2:]] == [1 / 3, 2e-9, np.pi, 0.1, 1e-300, 2473.4]
    assert len(IterationRecord.CSV_HEADER.split(",")) == len(row)


def test_fit_order_of_synthetic_data():
    steps = 10.0 ** -np.arange(1, 8)
    errors = 3 * steps ** 2 + 1e-12
    assert fit_order(steps, errors) == pytest.approx(2.0, abs=0.05)


def test_duality(small_problem):
    check = verify.check_duality(small_problem, small_problem.control(Q), k=10)
    assert check.passed, check.line()


def test_gradient_fd_order(small_problem, rng):
    d = verify.directions(small_problem, 1, seed=5)
    rep = fd_check_gradient(small_problem, Q, d)
    assert rep.min_error <= 1e-6
    assert 1.7 <= rep.orders()[0] <= 2.3


def test_hessian_symmetric(small_problem):
    ev = small_problem.evaluate(Q)
    d1, d2 = verify.directions(small_problem, 2, seed=9)
    assert hessian_asymmetry(small_problem, ev, d1, d2) <= 1e-8


def test_already_optimal_returns_immediately():
    """phi_0 = phi_d = 1 and q_0 = q_d = 0: the gradient vanishes at the start."""
    problem = make_problem(notch=None, target=None, q_d=0.0)
    res = newton_cg(problem, 0.0, OptSettings(newton_tol=1e-8))
    assert res.converged and len(res.records) == 1
    assert res.records[0].rel_residual == 0.0 or res.records[0].abs_residual <= 1e-8


def test_records_and_tikhonov_recompute(small_problem):
    seen = []
    res = newton_cg(small_problem, 1.0, OptSettings(newton_tol=1e-10, max_newton=4),
                    callback=lambda rec, ev: seen.append((rec, ev.q.copy())))
    assert res.records[0].rel_residual == 1.0
    assert [r.iter for r in res.records] == list(range(len(res.records)))
    alpha, M = small_problem.cost.alpha, small_problem.times.size - 1
    for rec, q in seen:
        d = q - 1e3
        tik = 0.5 * alpha * M * float(d @ (small_problem.mesh.boundary_mass @ d))
        assert rec.tikhonov == pytest.approx(tik, rel=1e-14)
        assert rec.max_force == np.max(np.abs(q))
        assert rec.cost == pytest.approx(rec.tracking + rec.tikhonov, rel=1e-15)


def test_newton_converges_superlinearly_on_smooth_instance():
    """Intact body with a uniform desired field just below 1: no crack, smooth reduced cost."""
    problem = make_problem(notch=None, target=None, alpha=1e-8, q_d=1e4)
    problem.cost.phi_d[:] = 0.999
    res = newton_cg(problem, 1e4, OptSettings(newton_tol=1e-13, max_newton=8, cg_forcing=1e-10))
    rel = [r.rel_residual for r in res.records]
    assert res.converged and len(rel) <= 6
    for a, b in zip(rel[1:], rel[2:]):
        assert b <= a ** 1.5


def test_dt_weighting_scales_cost_not_optimum():
    a = make_problem(time_weighting="sum")
    b = make_problem(time_weighting="dt")
    ea, eb = a.evaluate(Q), b.evaluate(Q)
    M = a.times.size - 1
    assert eb.cost * M == pytest.approx(ea.cost, rel=1e-12)
    assert np.allclose(b.reduced_gradient(eb) * M, a.reduced_gradient(ea), rtol=1e-10)
