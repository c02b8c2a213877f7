"""Time stepping of the penalized, viscous phase-field fracture state equation.

At ``t_0`` the initial data are L2-projected. For ``m = 1..M`` the step
residual, tested with ``Phi``, is

    gamma (chi_m (phi_m - phi_{m-1}), Phi_phi) + eta (phi_m - phi_{m-1}, Phi_phi)
        + dt_m a(q, U_m)(Phi)

with ``chi_m`` the pointwise indicator of ``phi_m > phi_{m-1}``. It is
solved by a semi-smooth Newton method with residual backtracking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .forms import WeakForms
from . import linalg
from .mesh import apply_dirichlet

log = logging.getLogger(__name__)


@dataclass
class NewtonSettings:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    max_iter: int = 50
    max_backtracks: int = 20
    active_set_freeze: bool = False

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("Newton tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class StepReport:
    iterations: int
    residuals: list
    active_points: int
    violation: float
    converged: bool = True
    penalized_growth: float = 0.0


@dataclass
class ForwardReport:
    steps: list = field(default_factory=list)

    @property
    def iterations(self):
        return [s.iterations for s in self.steps]

    @property
    def final_residuals(self):
        return [s.residuals[-1] for s in self.steps]

    @property
    def active_points(self):
        return [s.active_points for s in self.steps]

    @property
    def violations(self):
        """Per-step L2 norm of the nodal interpolant of ``(phi_m - phi_{m-1})_+``."""
        return [s.violation for s in self.steps]

    @property
    def penalized_growth(self):
        """Per-step ``||(phi_m - phi_{m-1})_+||^2`` at the quadrature points (the penalized quantity)."""
        return [s.penalized_growth for s in self.steps]


@dataclass
class Trajectory:
    """States ``U(t_0), ..., U(t_M)`` stored densely as rows."""

    states: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        if self.states.shape[0] != self.times.size:
            raise ValueError("one state per time point required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time points must be strictly increasing")

    @property
    def M(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def __getitem__(self, m):
        return self.states[m]

    def __len__(self):
        return self.states.shape[0]


class ConvergenceError(RuntimeError):
    """Newton failure; carries the best iterate, the report and the step index."""

    def __init__(self, msg, best=None, report=None, step=None):
        super().__init__(msg)
        self.best = best
        self.report = report
        self.step = step


def uniform_times(M: int, T: float = 1.0) -> np.ndarray:
    return np.linspace(0.0, T, M + 1)


class ForwardSolver:
    def __init__(self, forms: WeakForms, settings: NewtonSettings | None = None):
        self.forms = forms
        self.mesh = forms.mesh
        self.params = forms.params
        self.settings = settings or NewtonSettings()
        self._mass_lu = None

    # ------------------------------------------------------------------
    def solve_initial(self, U0) -> np.ndarray:
        """L2 projection ``(U(0), Phi) = (U_0, Phi)`` onto the discrete space."""
        if self._mass_lu is None:
            self._mass_lu = spla.splu(self.mesh.full_mass.tocsc())
        M = self.mesh.full_mass
        return self._mass_lu.solve(M @ np.asarray(U0, dtype=float))

    def step_residual(self, q, U, U_prev, dt, chi=None) -> np.ndarray:
        """Unconstrained residual of one time step (dof vector)."""
        f = self.forms
        phi, phi_prev = self.mesh.split(U)[2], self.mesh.split(U_prev)[2]
        if chi is None:
            chi = f.active_set(phi, phi_prev)
        P = f.coupling_matrix(chi)
        return P @ (np.asarray(U) - U_prev) + dt * f.residual_a(q, U)

    def step_jacobian(self, U, dt, chi):
        _, K = self.forms.assemble_a(U)
        return self.forms.coupling_matrix(chi) + dt * K

    def step_energy(self, q, U, U_prev, dt) -> float:
        """Incremental energy whose gradient is :meth:`step_residual`."""
        f = self.forms
        N, _, w = self.mesh.quadrature
        d = np.einsum("ca,qa->cq", (self.mesh.split(U)[2] - self.mesh.split(U_prev)[2])[self.mesh.cells], N)
        p = self.params
        pen = np.einsum("cq,q->", 0.5 * p.gamma * np.maximum(d, 0.0) ** 2 + 0.5 * p.eta * d * d, w)
        return dt * f.energy(q, U) + float(pen)

    def _descent_direction(self, U, r, dt, chi):
        """Newton direction for the step energy; shifted towards the mass matrix if not descending."""
        mesh = self.mesh
        J = self.step_jacobian(U, dt, chi)
        shift = 0.0
        scale = float(np.abs(J.diagonal()).max()) / float(mesh.full_mass.diagonal().max())
        for _ in range(12):
            A = J if shift == 0.0 else J + shift * mesh.full_mass
            A, b = apply_dirichlet(A, -r, mesh)
            dx = linalg.solve(A, b, mesh.n)
            slope = float(r @ dx)
            if np.all(np.isfinite(dx)) and slope < 0:
                return dx, slope
            shift = 1e-6 * scale if shift == 0.0 else 10.0 * shift
        return -r, -float(r @ r)

    def _constrained_norm(self, r):
        r = r.copy()
        r[self.mesh.dirichlet_dofs] = 0.0
        return float(np.linalg.norm(r)), r

    def step_state(self, q, U_prev, dt, m: int = 0, guess=None, chi_guess=None):
        """Solve one time step; returns ``(U_m, StepReport)``.

        ``chi_guess`` replaces the active set in the first Jacobian; at the
        default start ``U = U_prev`` every point is a tie, where both
        indicator values are valid generalized derivatives.
        """
        s = self.settings
        f = self.forms
        mesh = self.mesh
        phi_prev = mesh.split(U_prev)[2]
        U = np.array(U_prev if guess is None else guess, dtype=float)
        U[mesh.dirichlet_dofs] = 0.0

        chi = f.active_set(mesh.split(U)[2], phi_prev)
        res = lambda V, c: self.step_residual(q, V, U_prev, dt, c)
        norm, r = self._constrained_norm(res(U, chi))
        history = [norm]
        scale = max(norm, dt * float(np.linalg.norm(f.boundary_load(q))))
        tol = max(s.abs_tol, s.rel_tol * scale)
        it = 0
        converged = norm <= tol
        energy = lambda V: self.step_energy(q, V, U_prev, dt)
        E = energy(U)
        while not converged and it < s.max_iter:
            it += 1
            use = chi_guess if (it == 1 and chi_guess is not None) else chi
            dx, slope = self._descent_direction(U, r, dt, use)

            t = 1.0
            for _ in range(s.max_backtracks + 1):
                trial = U + t * dx
                chi_t = chi if s.active_set_freeze else f.active_set(mesh.split(trial)[2], phi_prev)
                n_t, r_t = self._constrained_norm(res(trial, chi_t))
                E_t = energy(trial)
                if n_t <= (1.0 - 1e-4 * t) * norm or E_t <= E + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                # no decrease: accept if stalled at roundoff, else fail
                if np.linalg.norm(dx) <= 1e-12 * (1.0 + np.linalg.norm(U)):
                    converged = True
                    break
                raise ConvergenceError(f"line search failed at step {m} (residual {norm:.3e})",
                                       best=U, report=history, step=m)
            U, chi, norm, r, E = trial, chi_t, n_t, r_t, E_t
            history.append(norm)
            converged = norm <= tol
        if not converged:
            raise ConvergenceError(f"Newton did not converge at step {m} after {it} iterations "
                                   f"(residual {norm:.3e})", best=U, report=history, step=m)

        chi = f.active_set(mesh.split(U)[2], phi_prev)
        growth = np.maximum(mesh.split(U)[2] - phi_prev, 0.0)
        violation = float(np.sqrt(growth @ (mesh.scalar_mass @ growth)))
        log.debug("step %d: %d Newton iterations, residual %.3e", m, it, norm)
        rep = StepReport(it, history, int(chi.sum()), violation,
                         penalized_growth=f.growth_squared(mesh.split(U)[2], phi_prev))
        rep.chi = chi
        return U, rep

    def solve_forward(self, q, U0, times):
        """Initial projection and ``M`` Newton steps; returns ``(Trajectory, ForwardReport)``."""
        times = np.asarray(times, dtype=float)
        states = np.empty((times.size, self.mesh.num_dofs))
        states[0] = self.solve_initial(U0)
        report = ForwardReport()
        chi = None
        for m in range(1, times.size):
            try:
                states[m], rep = self.step_state(q, states[m - 1], times[m] - times[m - 1], m,
                                                 chi_guess=chi)
                chi = rep.chi
            except ConvergenceError as err:
                err.report = report
                raise
            report.steps.append(rep)
        return Trajectory(states, times), report


def space_time_residual(forms: WeakForms, q, traj: Trajectory, U0) -> np.ndarray:
    """Monolithic dG(0) residual tested with every basis function at every time point.

    Built term by term from the jump form with the pointwise scalar
    evaluators, i.e. independently of the assembled per-step residuals.
    The cost is one scalar integral per (time, dof) pair, so this is meant
    for small verification meshes only.
    """
    from .forms import StepContext

    mesh = forms.mesh
    n = mesh.num_dofs
    out = np.zeros((traj.M + 1, n))
    basis = np.eye(n)
    out[0] = mesh.full_mass @ (traj[0] - np.asarray(U0, dtype=float))
    for m in range(1, traj.M + 1):
        dt = traj.times[m] - traj.times[m - 1]
        ctx = StepContext(dt, mesh.split(traj[m - 1])[2], forms.params)
        phi_m = mesh.split(traj[m])[2]
        for i in range(n):
            Phi = basis[i]
            jump = forms.eval_penalty_coupling(ctx, phi_m, mesh.split(Phi)[2])
            out[m, i] = jump + dt * forms.eval_a(q, traj[m], Phi)
    return out


def stepwise_residual(solver: ForwardSolver, q, traj: Trajectory, U0) -> np.ndarray:
    """Per-step residuals stacked over ``m = 0..M`` (assembled route)."""
    mesh = solver.mesh
    out = np.zeros((traj.M + 1, mesh.num_dofs))
    out[0] = mesh.full_mass @ (traj[0] - np.asarray(U0, dtype=float))
    for m in range(1, traj.M + 1):
        out[m] = solver.step_residual(q, traj[m], traj[m - 1], traj.times[m] - traj.times[m - 1])
    return out
