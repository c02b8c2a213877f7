"""Reduced cost, gradient and Hessian of the control problem, and Newton-CG.

The control is a time-constant traction ``q`` given by its nodal values on
the top edge. Gradients and Hessian-vector products are returned as Riesz
representers in the ``(., .)_{Gamma_N}`` inner product, i.e. after applying
the inverse boundary mass matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import sensitivity as sens
from .forms import WeakForms
from .forward import ConvergenceError, ForwardSolver, NewtonSettings, Trajectory
from .model import CostParams

log = logging.getLogger(__name__)


@dataclass
class Evaluation:
    """Everything computed at one control: cost split, states and (lazily) sensitivities."""

    q: np.ndarray
    cost: float
    tracking: float
    tikhonov: float
    trajectory: Trajectory
    report: object = None
    context: sens.AdjointContext | None = None
    adjoint: Trajectory | None = None
    gradient: np.ndarray | None = None


class ReducedProblem:
    """``j(q) = J(q, S(q))`` for a fixed mesh, model, cost and time grid.

    Parameters
    ----------
    forms : WeakForms
    cost : CostParams
    U0 : ndarray
        Initial data (dof vector), L2-projected at ``t_0``.
    times : ndarray
        Time points ``t_0 < ... < t_M``.
    newton : NewtonSettings, optional
        Settings of the forward Newton solver.
    """

    def __init__(self, forms: WeakForms, cost: CostParams, U0, times, newton: NewtonSettings | None = None):
        self.forms = forms
        self.mesh = forms.mesh
        self.cost = cost
        self.U0 = np.asarray(U0, dtype=float)
        self.times = np.asarray(times, dtype=float)
        self.solver = ForwardSolver(forms, newton)
        self._mgamma_lu = spla.splu(self.mesh.boundary_mass.tocsc())
        if cost.phi_d.shape != (self.mesh.num_nodes,):
            raise ValueError("desired phase-field must have one value per node")
        if cost.q_d.shape not in ((), (1,), (self.mesh.n + 1,)):
            raise ValueError("nominal control must be a scalar or one value per top node")

    # ------------------------------------------------------------------
    @property
    def weights(self) -> np.ndarray:
        return self.cost.weights(self.times)

    @property
    def num_controls(self) -> int:
        return self.mesh.n + 1

    def inner(self, a, b) -> float:
        """``(a, b)_{Gamma_N}`` for nodal control vectors."""
        return float(np.asarray(a) @ (self.mesh.boundary_mass @ np.asarray(b)))

    def norm(self, a) -> float:
        return math.sqrt(max(self.inner(a, a), 0.0))

    def riesz(self, functional: np.ndarray) -> np.ndarray:
        return self._mgamma_lu.solve(np.asarray(functional, dtype=float))

    def control(self, value) -> np.ndarray:
        """Broadcast a scalar or array to a nodal control vector."""
        return np.broadcast_to(np.asarray(value, dtype=float), (self.num_controls,)).copy()

    # ------------------------------------------------------------------
    def tikhonov(self, q) -> float:
        d = np.asarray(q, dtype=float) - self.control(self.cost.q_d)
        return 0.5 * self.cost.alpha * float(self.weights.sum()) * self.inner(d, d)

    def tracking(self, traj: Trajectory) -> float:
        Mphi = self.mesh.scalar_mass
        total = 0.0
        for m, w in enumerate(self.weights, start=1):
            d = self.mesh.split(traj[m])[2] - self.cost.phi_d
            total += 0.5 * w * float(d @ (Mphi @ d))
        return total

    def evaluate(self, q) -> Evaluation:
        """Forward solve and cost split; raises :class:`ConvergenceError` on failure."""
        q = self.control(q)
        if not np.all(np.isfinite(q)):
            raise ValueError("control must be finite")
        traj, report = self.solver.solve_forward(q, self.U0, self.times)
        tr, tk = self.tracking(traj), self.tikhonov(q)
        return Evaluation(q, tr + tk, tr, tk, traj, report)

    def reduced_cost(self, q):
        """``(j, tracking, tikhonov, trajectory)``."""
        ev = self.evaluate(q)
        return ev.cost, ev.tracking, ev.tikhonov, ev.trajectory

    def linearize(self, ev: Evaluation) -> sens.AdjointContext:
        if ev.context is None:
            ev.context = sens.linearize(self.forms, ev.trajectory, ev.q, self.cost)
        return ev.context

    def reduced_gradient(self, ev: Evaluation) -> np.ndarray:
        """Riesz representer of ``j'(q)``; also stores the adjoint on ``ev``."""
        if ev.gradient is None:
            ctx = self.linearize(ev)
            ev.adjoint = sens.solve_adjoint(ctx)
            qd = self.control(self.cost.q_d)
            ev.gradient = (self.cost.alpha * float(self.weights.sum()) * (ev.q - qd)
                           + sens.control_trace(ctx, ev.adjoint))
        return ev.gradient

    def hessian_vector(self, ev: Evaluation, dq) -> np.ndarray:
        """Riesz representer of ``j''(q)(dq, .)`` with the active sets of ``ev`` frozen."""
        dq = np.asarray(dq, dtype=float)
        if not np.any(dq):
            return np.zeros_like(dq)
        ctx = self.linearize(ev)
        self.reduced_gradient(ev)
        dU = sens.solve_tangent(ctx, dq)
        dZ = sens.solve_adjoint_hessian(ctx, ev.adjoint, dU)
        return self.cost.alpha * float(self.weights.sum()) * dq + sens.control_trace(ctx, dZ)

    def tangent_derivative(self, ev: Evaluation, dq) -> float:
        """``j'(q)(dq)`` through a tangent sweep (independent of the adjoint)."""
        ctx = self.linearize(ev)
        dU = sens.solve_tangent(ctx, dq)
        Mphi = self.mesh.scalar_mass
        val = 0.0
        for m, w in enumerate(self.weights, start=1):
            d = self.mesh.split(ev.trajectory[m])[2] - self.cost.phi_d
            val += w * float(self.mesh.split(dU[m])[2] @ (Mphi @ d))
        qd = self.control(self.cost.q_d)
        return val + self.cost.alpha * float(self.weights.sum()) * self.inner(ev.q - qd, dq)


# ----------------------------------------------------------------------
# Newton-CG
# ----------------------------------------------------------------------
@dataclass
class OptSettings:
    newton_tol: float = 1e-8
    max_newton: int = 20
    cg_forcing: float = 1e-2
    cg_max: int = 100
    damping: float = 1.0
    max_step_halvings: int = 8
    residual: str = "min"  # "min": min(rel, abs) <= tol; "relative": rel <= tol

    def __post_init__(self):
        if not (self.newton_tol > 0 and self.cg_forcing > 0):
            raise ValueError("tolerances must be positive")
        if self.residual not in ("min", "relative"):
            raise ValueError(f"residual must be 'min' or 'relative', got {self.residual!r}")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_newton < 0 or self.cg_max < 1:
            raise ValueError("iteration limits must be non-negative (cg_max >= 1)")


@dataclass
class IterationRecord:
    iter: int
    cg: int
    rel_residual: float
    abs_residual: float
    cost: float
    tracking: float
    tikhonov: float
    max_force: float
    flags: list = field(default_factory=list)

    CSV_HEADER = "iter,cg,rel_residual,abs_residual,cost,tracking,tikhonov,max_force"

    def csv_row(self) -> str:
        fmt = lambda v: format(v, ".17g")
        vals = [self.rel_residual, self.abs_residual, self.cost, self.tracking, self.tikhonov, self.max_force]
        return ",".join([str(self.iter), str(self.cg)] + [fmt(float(v)) for v in vals])


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    converged: bool
    negative_curvature: bool


def conjugate_gradient(apply_H, g, inner, rtol, maxiter, descent_scale: float = 1.0) -> CGResult:
    """CG for ``H x = -g`` in the inner product ``inner``.

    Stops on the relative residual ``rtol``, after ``maxiter`` products or on
    non-positive curvature; in the last case the current iterate is
    returned, or ``-descent_scale * g`` if it is the first step.
    """
    x = np.zeros_like(g)
    r = -np.asarray(g, dtype=float)
    p = r.copy()
    rr = inner(r, r)
    target = rtol * math.sqrt(rr)
    if math.sqrt(rr) == 0.0:
        return CGResult(x, 0, True, False)
    for k in range(1, maxiter + 1):
        Hp = apply_H(p)
        curv = inner(p, Hp)
        if curv <= 0:
            if k == 1:
                x = descent_scale * r
            return CGResult(x, k, False, True)
        a = rr / curv
        x = x + a * p
        r = r - a * Hp
        rr_new = inner(r, r)
        if math.sqrt(rr_new) <= target:
            return CGResult(x, k, True, False)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return CGResult(x, maxiter, False, False)


@dataclass
class OptResult:
    q: np.ndarray
    records: list
    converged: bool
    evaluation: Evaluation
    message: str = ""


def newton_cg(problem: ReducedProblem, q0, settings: OptSettings | None = None, callback=None) -> OptResult:
    """Reduced Newton-CG; one :class:`IterationRecord` per outer iteration.

    Terminates when the relative or the absolute gradient residual (norm in
    ``Gamma_N``) is at most ``newton_tol`` (only the relative one with
    ``residual = "relative"``). Steps are scaled by ``damping``;
    if the forward solve fails at a trial control the step is halved up to
    ``max_step_halvings`` times.
    ``callback(record, evaluation)`` is called after each record.
    """
    s = settings or OptSettings()
    q = problem.control(q0)
    ev = problem.evaluate(q)
    records: list[IterationRecord] = []
    g0 = None
    cg_count = 0
    flags: list[str] = []
    for it in range(s.max_newton + 1):
        g = problem.reduced_gradient(ev)
        gn = problem.norm(g)
        if g0 is None:
            g0 = gn
        rel = gn / g0 if g0 > 0 else 0.0
        rec = IterationRecord(it, cg_count, rel, gn, ev.cost, ev.tracking, ev.tikhonov,
                              float(np.max(np.abs(ev.q))), flags)
        records.append(rec)
        log.info("iter %d cg %d rel %.3e abs %.3e cost %.6e", it, cg_count, rel, gn, ev.cost)
        if callback is not None:
            callback(rec, ev)
        test = rel if s.residual == "relative" else min(rel, gn)
        if test <= s.newton_tol:
            return OptResult(ev.q, records, True, ev, "converged")
        if it == s.max_newton:
            break
        # on immediate negative curvature fall back to the step of the Tikhonov Hessian
        tik = problem.cost.alpha * float(problem.weights.sum())
        cg = conjugate_gradient(lambda v: problem.hessian_vector(ev, v), g, problem.inner,
                                s.cg_forcing, s.cg_max, descent_scale=1.0 / tik)
        cg_count = cg.iterations
        flags = ["negative_curvature"] if cg.negative_curvature else []
        if not cg.converged and not cg.negative_curvature:
            flags.append("cg_maxiter")
        step = s.damping
        for _ in range(s.max_step_halvings + 1):
            try:
                ev_new = problem.evaluate(ev.q + step * cg.x)
                break
            except ConvergenceError as err:
                log.warning("forward solve failed at trial control (%s); halving step", err)
                step *= 0.5
                flags.append("step_halved")
        else:
            return OptResult(ev.q, records, False, ev, "forward solver failed at every trial step")
        ev = ev_new
    return OptResult(ev.q, records, False, ev, "maximum number of Newton iterations reached")


# ----------------------------------------------------------------------
# finite-difference oracles
# ----------------------------------------------------------------------
@dataclass
class FDReport:
    steps: np.ndarray
    errors: np.ndarray  # (directions, steps)
    reference: np.ndarray

    @property
    def min_errors(self) -> np.ndarray:
        return self.errors.min(axis=1)

    @property
    def min_error(self) -> float:
        return float(self.errors.min())

    def orders(self) -> np.ndarray:
        """Observed convergence order per direction, see :func:`fit_order`."""
        return np.asarray([fit_order(self.steps, e) for e in self.errors])


def fit_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step) in the truncation regime.

    Steps are expected in decreasing order. The fit uses the steps before
    the smallest error (which is usually already polluted by rounding),
    and at least the first two.
    """
    steps, errors = np.asarray(steps, float), np.asarray(errors, float)
    k = max(int(np.argmin(errors)), 2)
    x, y = np.log(steps[:k]), np.log(np.maximum(errors[:k], 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / scale


def fd_check_gradient(problem: ReducedProblem, q, directions, steps=None) -> FDReport:
    """Central differences of ``j`` against ``(g, dq)_{Gamma_N}``.

    ``steps`` are relative to ``max(1, |q|_inf)`` and each direction is used as given.
    """
    steps = np.asarray(steps if steps is not None else 10.0 ** -np.arange(1, 8), dtype=float)
    q = problem.control(q)
    ev = problem.evaluate(q)
    g = problem.reduced_gradient(ev)
    scale = max(1.0, float(np.max(np.abs(q))))
    errs, refs = [], []
    for d in directions:
        d = np.asarray(d, dtype=float)
        ref = problem.inner(g, d)
        row = []
        for h in steps:
            hh = h * scale
            jp = problem.evaluate(q + hh * d).cost
            jm = problem.evaluate(q - hh * d).cost
            row.append(_rel((jp - jm) / (2 * hh), ref))
        errs.append(row)
        refs.append(ref)
    return FDReport(steps, np.asarray(errs), np.asarray(refs))


def fd_check_hessian(problem: ReducedProblem, q, directions, steps=None) -> FDReport:
    """Central differences of the reduced gradient against ``H dq``."""
    steps = np.asarray(steps if steps is not None else 10.0 ** -np.arange(1, 8), dtype=float)
    q = problem.control(q)
    ev = problem.evaluate(q)
    scale = max(1.0, float(np.max(np.abs(q))))
    errs, refs = [], []
    for d in directions:
        d = np.asarray(d, dtype=float)
        Hd = problem.hessian_vector(ev, d)
        row = []
        for h in steps:
            hh = h * scale
            gp = problem.reduced_gradient(problem.evaluate(q + hh * d))
            gm = problem.reduced_gradient(problem.evaluate(q - hh * d))
            row.append(_rel((gp - gm) / (2 * hh), Hd) if np.any(Hd) else float(np.linalg.norm(gp - gm)))
        errs.append(row)
        refs.append(Hd)
    return FDReport(steps, np.asarray(errs), np.asarray(refs))


def hessian_asymmetry(problem: ReducedProblem, ev: Evaluation, d1, d2) -> float:
    """``|(H d1, d2) - (d1, H d2)| / max(|(H d1, d2)|, |(d1, H d2)|)``."""
    a = problem.inner(problem.hessian_vector(ev, d1), d2)
    b = problem.inner(d1, problem.hessian_vector(ev, d2))
    return abs(a - b) / max(abs(a), abs(b), 1e-300)
