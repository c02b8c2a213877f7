"""Linear sweeps around a converged state trajectory.

* tangent (forward in time): derivative of the states in a control direction,
* adjoint (backward in time): multipliers delivering the reduced gradient,
* adjoint Hessian (backward in time): derivative of the multipliers, which
  together with a tangent sweep gives Hessian-vector products.

All three use the step matrices

    A_m = P_m + dt_m K(U_m),    P_m = gamma M_{chi_m} + eta M    (phase-field block)

with the active sets ``chi_m`` of the state trajectory held fixed. ``K`` is
symmetric, so the same (constrained) factorization serves the forward and
the backward sweeps, and the backward sweeps are exact discrete transposes of
the tangent sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .forms import WeakForms
from .forward import Trajectory
from .mesh import apply_dirichlet
from .model import CostParams


class SweepError(RuntimeError):
    """A step matrix could not be factorized; ``step`` is the time index."""

    def __init__(self, msg, step=None):
        super().__init__(msg)
        self.step = step


@dataclass
class StepLinearization:
    dt: float
    chi: np.ndarray
    P: object  # sparse coupling matrix
    lu: linalg.Factorization


@dataclass
class AdjointContext:
    """Converged states for a control ``q`` plus the cached step linearizations.

    Build it with :func:`linearize`; the factorizations are computed once
    and reused by every sweep.
    """

    forms: WeakForms
    trajectory: Trajectory
    q: np.ndarray
    cost: CostParams
    steps: list = field(default_factory=list)  # index m-1 holds step m

    @property
    def mesh(self):
        return self.forms.mesh

    @property
    def M(self) -> int:
        return self.trajectory.M

    @property
    def weights(self) -> np.ndarray:
        return self.cost.weights(self.trajectory.times)

    def step(self, m: int) -> StepLinearization:
        return self.steps[m - 1]

    def constrained_matrix(self, m: int):
        """Constrained step matrix ``A_m`` (for inspection and tests)."""
        lin = self.step(m)
        _, K = self.forms.assemble_a(self.trajectory[m])
        A, _ = apply_dirichlet(lin.P + lin.dt * K, np.zeros(self.mesh.num_dofs), self.mesh)
        return A


def linearize(forms: WeakForms, trajectory: Trajectory, q, cost: CostParams) -> AdjointContext:
    """Freeze active sets and factorize every step matrix of ``trajectory``."""
    mesh = forms.mesh
    ctx = AdjointContext(forms, trajectory, np.asarray(q, dtype=float), cost)
    zero = np.zeros(mesh.num_dofs)
    for m in range(1, trajectory.M + 1):
        dt = float(trajectory.times[m] - trajectory.times[m - 1])
        chi = forms.active_set(mesh.split(trajectory[m])[2], mesh.split(trajectory[m - 1])[2])
        P = forms.coupling_matrix(chi)
        _, K = forms.assemble_a(trajectory[m])
        A, _ = apply_dirichlet(P + dt * K, zero, mesh)
        try:
            lu = linalg.Factorization(A, mesh.n)
        except RuntimeError as err:
            raise SweepError(f"singular step matrix at step {m}: {err}", step=m) from err
        ctx.steps.append(StepLinearization(dt, chi, P, lu))
    return ctx


def _solve(ctx: AdjointContext, m: int, rhs: np.ndarray) -> np.ndarray:
    rhs = np.array(rhs, dtype=float)
    rhs[ctx.mesh.dirichlet_dofs] = 0.0
    x = ctx.step(m).lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SweepError(f"non-finite solution at step {m}", step=m)
    return x


def _control_history(ctx: AdjointContext, dq) -> np.ndarray:
    """``dq`` as one control per step: a single vector is held constant in time."""
    dq = np.asarray(dq, dtype=float)
    if dq.ndim == 1:
        return np.broadcast_to(dq, (ctx.M, dq.size))
    if dq.shape[0] != ctx.M:
        raise ValueError(f"time-dependent direction needs {ctx.M} rows, got {dq.shape[0]}")
    return dq


def tracking_source(ctx: AdjointContext, m: int, phi_m: np.ndarray) -> np.ndarray:
    """Dof vector of ``w_m (phi_m - phi_d, Phi_phi)``."""
    mesh = ctx.mesh
    out = np.zeros(mesh.num_dofs)
    phi_d = ctx.cost.phi_d
    out[2::3] = ctx.weights[m - 1] * (mesh.scalar_mass @ (phi_m - phi_d))
    return out


def solve_tangent(ctx: AdjointContext, dq) -> Trajectory:
    """Forward sweep ``A_m dU_m = P_m dU_{m-1} + dt_m B dq`` with ``dU_0 = 0``."""
    forms = ctx.forms
    dqs = _control_history(ctx, dq)
    out = np.zeros_like(ctx.trajectory.states)
    for m in range(1, ctx.M + 1):
        lin = ctx.step(m)
        rhs = lin.P @ out[m - 1] + lin.dt * forms.boundary_load(dqs[m - 1])
        out[m] = _solve(ctx, m, rhs)
    return Trajectory(out, ctx.trajectory.times)


def _backward(ctx: AdjointContext, source) -> Trajectory:
    """Backward sweep ``A_m x_m = source(m) + P_{m+1} x_{m+1}`` with ``x_0 = x_1``."""
    out = np.zeros_like(ctx.trajectory.states)
    for m in range(ctx.M, 0, -1):
        rhs = source(m)
        if m < ctx.M:
            rhs = rhs + ctx.step(m + 1).P @ out[m + 1]
        out[m] = _solve(ctx, m, rhs)
    out[0] = out[1]
    return Trajectory(out, ctx.trajectory.times)


def solve_adjoint(ctx: AdjointContext) -> Trajectory:
    """Adjoint sweep with the tracking derivative as source."""
    mesh = ctx.mesh
    traj = ctx.trajectory
    return _backward(ctx, lambda m: tracking_source(ctx, m, mesh.split(traj[m])[2]))


def solve_adjoint_hessian(ctx: AdjointContext, Z: Trajectory, dU: Trajectory) -> Trajectory:
    """Derivative of the adjoint sweep along the tangent ``dU``.

    Source at step ``m``: ``w_m (dphi_m, Phi_phi) - dt_m a''_uu(U_m)(dU_m, Phi, Z_m)``.
    The control enters only through ``dU`` since ``a`` is affine in ``q``.
    """
    mesh = ctx.mesh
    forms = ctx.forms
    traj = ctx.trajectory

    def source(m):
        out = np.zeros(mesh.num_dofs)
        out[2::3] = ctx.weights[m - 1] * (mesh.scalar_mass @ mesh.split(dU[m])[2])
        out -= ctx.step(m).dt * forms.assemble_a_third(traj[m], dU[m], Z[m])
        return out

    return _backward(ctx, source)


def control_trace(ctx: AdjointContext, X: Trajectory) -> np.ndarray:
    """``sum_m dt_m X_m|_{u_y, Gamma_N}`` (nodal values on the top edge)."""
    ctrl = ctx.mesh.control_dofs
    dts = np.array([s.dt for s in ctx.steps])
    return dts @ X.states[1:, ctrl]
