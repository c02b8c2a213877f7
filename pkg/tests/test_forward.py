import numpy as np
import pytest

from pffc import verify
from pffc.forms import WeakForms
from pffc.forward import (ConvergenceError, ForwardSolver, NewtonSettings, Trajectory, space_time_residual,
                          stepwise_residual, uniform_times)
from pffc.mesh import build_mesh, interpolate_slit_field
from pffc.model import ModelParams


def _setup(n=8, notch=(0.5, 1.0), gamma=1e5, settings=None):
    mesh = build_mesh(n)
    forms = WeakForms(mesh, ModelParams.from_engineering(1e6, 0.2, eps=4 * mesh.h, gamma=gamma))
    phi0 = interpolate_slit_field(notch, 0.0, mesh)
    U0 = mesh.join(np.zeros(mesh.num_nodes), np.zeros(mesh.num_nodes), phi0)
    return mesh, ForwardSolver(forms, settings), U0


def test_newton_settings_validation():
    with pytest.raises(ValueError):
        NewtonSettings(abs_tol=0.0)
    with pytest.raises(ValueError):
        NewtonSettings(max_iter=0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.zeros((2, 3)), [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        Trajectory(np.zeros((2, 3)), [0.0, 0.0])
    assert np.allclose(Trajectory(np.zeros((3, 3)), uniform_times(2)).dt, 0.5)


def test_trivial_forward_exact():
    mesh, solver, _ = _setup(n=4)
    U0 = mesh.join(np.zeros(mesh.num_nodes), np.zeros(mesh.num_nodes), np.ones(mesh.num_nodes))
    traj, rep = solver.solve_forward(np.zeros(mesh.n + 1), U0, uniform_times(4))
    for m in range(5):
        ux, uy, phi = mesh.split(traj[m])
        assert np.abs(ux).max() <= 1e-14 and np.abs(uy).max() <= 1e-14
        assert np.abs(phi - 1).max() <= 1e-14
    assert max(rep.final_residuals) <= 1e-12


def test_initial_projection_is_identity_on_discrete_fields(rng):
    mesh, solver, _ = _setup(n=4)
    U0 = verify.random_fields(mesh, rng)
    assert np.allclose(solver.solve_initial(U0), U0, atol=1e-12)


def test_elastic_response_matches_uniaxial_closed_form():
    """Intact bar under uniform traction: u_y(top) = q (1 - nu^2) / E in plane strain (lateral contraction free)."""
    mesh, solver, _ = _setup(n=8)
    U0 = mesh.join(np.zeros(mesh.num_nodes), np.zeros(mesh.num_nodes), np.ones(mesh.num_nodes))
    q = 100.0
    traj, _ = solver.solve_forward(np.full(mesh.n + 1, q), U0, uniform_times(1))
    uy = mesh.split(traj[1])[1][mesh.top_nodes]
    # clamped bottom edge stiffens the response slightly, between the two classical limits
    E, nu = 1e6, 0.2
    free = q * (1 - nu ** 2) / E
    confined = q * (1 + nu) * (1 - 2 * nu) / (E * (1 - nu))
    assert confined <= uy.mean() <= free * 1.001


def test_converged_steps_satisfy_residual():
    mesh, solver, U0 = _setup()
    q = np.full(mesh.n + 1, 3000.0)
    traj, rep = solver.solve_forward(q, U0, uniform_times(3))
    R = stepwise_residual(solver, q, traj, U0)
    R[:, mesh.dirichlet_dofs] = 0.0
    tol = 1e-9 * max(1.0, (1 / 3) * np.linalg.norm(solver.forms.boundary_load(q)))
    assert np.linalg.norm(R[1:], axis=1).max() <= tol
    assert len(rep.iterations) == 3


def test_mirror_symmetry_for_centered_notch():
    mesh, solver, U0 = _setup(notch=(0.25, 0.75))
    q = np.full(mesh.n + 1, 3000.0)
    traj, _ = solver.solve_forward(q, U0, uniform_times(3))
    r = mesh.x_reflection()
    for m in range(4):
        ux, uy, phi = mesh.split(traj[m])
        assert np.allclose(phi[r], phi, atol=1e-10)
        assert np.allclose(uy[r], uy, atol=1e-10 * max(1.0, np.abs(uy).max()))
        assert np.allclose(ux[r], -ux, atol=1e-10 * max(1.0, np.abs(ux).max()))


def test_penalty_limits_phase_field_growth():
    q = np.full(9, 3000.0)
    viol = []
    for gamma in (1e3, 1e5):
        mesh, solver, U0 = _setup(gamma=gamma)
        _, rep = solver.solve_forward(q, U0, uniform_times(5))
        viol.append(max(rep.violations))
    assert viol[1] <= viol[0]


def test_step_residual_is_step_energy_gradient(rng):
    mesh, solver, U0 = _setup(n=4)
    q = np.full(mesh.n + 1, 500.0)
    Up = verify.random_fields(mesh, rng)
    U = verify.random_fields(mesh, rng)
    dU = verify.random_fields(mesh, rng)
    h = 1e-6
    fd = (solver.step_energy(q, U + h * dU, Up, 0.1) - solver.step_energy(q, U - h * dU, Up, 0.1)) / (2 * h)
    assert solver.step_residual(q, U, Up, 0.1) @ dU == pytest.approx(fd, rel=1e-6)


def test_failure_raises_convergence_error():
    mesh, solver, U0 = _setup(n=4, settings=NewtonSettings(max_iter=1, abs_tol=1e-300, rel_tol=1e-300))
    with pytest.raises(ConvergenceError) as info:
        solver.solve_forward(np.full(mesh.n + 1, 3000.0), U0, uniform_times(2))
    assert info.value.step == 1
    assert info.value.best is not None


def test_space_time_residual_matches_stepwise(rng):
    mesh, solver, U0 = _setup(n=2)
    times = uniform_times(2)
    traj = verify.random_trajectory(mesh, 2, rng, 1e-5, 1e-3)
    q = 10 * rng.standard_normal(mesh.n + 1)
    a = space_time_residual(solver.forms, q, Trajectory(traj.states, times), U0)
    b = stepwise_residual(solver, q, Trajectory(traj.states, times), U0)
    assert np.abs(a - b).max() <= 1e-13


def test_growth_squared_oracle():
    mesh, solver, _ = _setup(n=4)
    ones = np.ones(mesh.num_nodes)
    f = solver.forms
    assert f.growth_squared(0.3 * ones, 0.1 * ones) == pytest.approx(0.04)
    assert f.growth_squared(0.1 * ones, 0.3 * ones) == 0.0
