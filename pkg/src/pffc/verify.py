"""Self-checks of the discretization and of the derivative machinery.

Each check returns a :class:`Check` with a measured value, the threshold it
is compared against and a short human-readable detail line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import WeakForms
from .forward import ForwardSolver, Trajectory, space_time_residual, stepwise_residual, uniform_times
from .mesh import build_mesh
from .model import ModelParams
from .optimize import ReducedProblem, fd_check_gradient, fd_check_hessian, fit_order, hessian_asymmetry

DEFAULT_STEPS = 10.0 ** -np.arange(2, 8)


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.3e} threshold={self.threshold:.1e} {self.detail}".rstrip()


def random_fields(mesh, rng, u_scale=1e-3):
    """Random dof vector: displacements of size ``u_scale``, phase-field in (0, 1)."""
    ux = u_scale * rng.standard_normal(mesh.num_nodes)
    uy = u_scale * rng.standard_normal(mesh.num_nodes)
    phi = rng.uniform(0.0, 1.0, mesh.num_nodes)
    return mesh.join(ux, uy, phi)


@dataclass
class KernelFD:
    steps: np.ndarray
    central: np.ndarray  # relative errors of the central quotient
    taylor: np.ndarray  # first-order Taylor remainders relative to the exact derivative

    @property
    def min_error(self) -> float:
        return float(self.central.min())

    @property
    def central_order(self) -> float:
        return fit_order(self.steps, self.central)

    @property
    def taylor_order(self) -> float:
        return fit_order(self.steps, self.taylor)


def kernel_fd(n: int = 2, seed: int = 0, steps=DEFAULT_STEPS, params: ModelParams | None = None):
    """Finite-difference checks of the assembled ``a'_u`` against ``a`` and ``a''_uu`` against ``a'_u``.

    Returns ``(first, second)`` :class:`KernelFD` records. ``a'_u`` is
    quadratic in the state, so its central difference quotient is exact up
    to rounding; for that check the Taylor remainder carries the order.
    """
    mesh = build_mesh(n)
    params = params or ModelParams.from_engineering(1e6, 0.2, eps=0.5)
    forms = WeakForms(mesh, params)
    rng = np.random.default_rng(seed)
    U, dU, Z = (random_fields(mesh, rng) for _ in range(3))
    steps = np.asarray(steps, float)

    r0, K0 = forms.assemble_a(U)
    exact1 = K0 @ dU
    exact2 = forms.assemble_a_third(U, dU, Z)
    KZ0 = K0 @ Z
    c1, t1, c2, t2 = [], [], [], []
    n1, n2 = np.linalg.norm(exact1), np.linalg.norm(exact2)
    for h in steps:
        rp, Kp = forms.assemble_a(U + h * dU)
        rm, Km = forms.assemble_a(U - h * dU)
        c1.append(np.linalg.norm((rp - rm) / (2 * h) - exact1) / n1)
        t1.append(np.linalg.norm(rp - r0 - h * exact1) / n1)
        c2.append(np.linalg.norm((Kp @ Z - Km @ Z) / (2 * h) - exact2) / n2)
        t2.append(np.linalg.norm(Kp @ Z - KZ0 - h * exact2) / n2)
    return KernelFD(steps, np.array(c1), np.array(t1)), KernelFD(steps, np.array(c2), np.array(t2))


def check_kernels(seed: int = 0) -> list[Check]:
    first, second = kernel_fd(seed=seed)
    out = []
    for name, rec, order in (("kernel a'_u vs a", first, first.central_order),
                             ("kernel a''_uu vs a'_u", second, second.taylor_order)):
        ok = rec.min_error <= 1e-6 and abs(order - 2.0) <= 0.3
        out.append(Check(name, ok, rec.min_error, 1e-6, f"order={order:.2f}"))
    return out


def random_trajectory(mesh, M, rng, u_scale=1e-3, phi_step=None) -> Trajectory:
    """Random piecewise-constant trajectory.

    With ``phi_step`` the phase-field performs a random walk of that step
    size from a random start in (0.5, 1); otherwise every time point is
    drawn independently.
    """
    if phi_step is None:
        states = np.stack([random_fields(mesh, rng, u_scale) for _ in range(M + 1)])
    else:
        phi = rng.uniform(0.5, 1.0, mesh.num_nodes)
        states = []
        for _ in range(M + 1):
            U = random_fields(mesh, rng, u_scale)
            U[2::3] = phi
            states.append(U)
            phi = np.clip(phi + phi_step * rng.standard_normal(phi.size), 0.0, 1.0)
        states = np.stack(states)
    return Trajectory(states, uniform_times(M))


def residual_equivalence(n: int = 4, M: int = 3, seed: int = 0, u_scale=1e-5, phi_step=1e-3, q_scale=10.0):
    """``(max abs difference, max abs residual component)`` of the two residual routes."""
    mesh = build_mesh(n)
    forms = WeakForms(mesh, ModelParams.from_engineering(1e6, 0.2, eps=4 * mesh.h))
    rng = np.random.default_rng(seed)
    traj = random_trajectory(mesh, M, rng, u_scale, phi_step)
    U0 = random_fields(mesh, rng, u_scale)
    q = rng.uniform(0.0, q_scale, n + 1)
    mono = space_time_residual(forms, q, traj, U0)
    steps = stepwise_residual(ForwardSolver(forms), q, traj, U0)
    return float(np.abs(mono - steps).max()), float(np.abs(mono).max())


def check_residual_equivalence(n: int = 4, M: int = 3, seed: int = 0, tol: float = 1e-13) -> Check:
    """Monolithic space-time residual against the stacked per-step residuals.

    The absolute tolerance is meaningful for residual components of order
    one, so the random trajectories are small perturbations of a damaged
    state. A large-amplitude trajectory is also compared, relative to the
    largest residual component, and reported in the detail string.
    """
    err, size = residual_equivalence(n, M, seed)
    big_err, big_size = residual_equivalence(n, M, seed, u_scale=1e-3, phi_step=None, q_scale=2e3)
    rel = big_err / big_size
    ok = err <= tol and rel <= 1e-14
    return Check("residual equivalence", ok, err, tol,
                 f"max|R|={size:.2e}; large amplitude: rel={rel:.2e} (max|R|={big_size:.2e})")


def check_trivial_forward(n: int = 4, M: int = 3, tol: float = 1e-12) -> Check:
    """Intact body without load stays at ``u = 0``, ``phi = 1``."""
    mesh = build_mesh(n)
    forms = WeakForms(mesh, ModelParams.from_engineering(1e6, 0.2, eps=4 * mesh.h))
    solver = ForwardSolver(forms)
    U0 = mesh.join(0, 0, np.ones(mesh.num_nodes))
    traj, rep = solver.solve_forward(np.zeros(n + 1), U0, uniform_times(M))
    ux, uy, phi = (np.stack(a) for a in zip(*(mesh.split(traj[m]) for m in range(M + 1))))
    dev = float(max(np.abs(ux).max(), np.abs(uy).max(), np.abs(phi - 1).max()))
    res = max(rep.final_residuals)
    return Check("trivial forward", dev <= tol and res <= tol, max(dev, res), tol)


def directions(problem: ReducedProblem, k: int, seed: int):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(problem.num_controls) for _ in range(k)]


def check_duality(problem: ReducedProblem, q, k: int = 10, seed: int = 0, tol: float = 1e-10) -> Check:
    """Adjoint gradient against tangent directional derivatives."""
    ev = problem.evaluate(q)
    g = problem.reduced_gradient(ev)
    worst = 0.0
    for d in directions(problem, k, seed):
        a = problem.inner(g, d)
        b = problem.tangent_derivative(ev, d)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return Check("gradient-tangent duality", worst <= tol, worst, tol, f"{k} directions")


def check_gradient_fd(problem: ReducedProblem, q, k: int = 3, seed: int = 1, tol: float = 1e-4) -> Check:
    rep = fd_check_gradient(problem, q, directions(problem, k, seed))
    worst = float(rep.min_errors.max())
    orders = ", ".join(f"{o:.2f}" for o in rep.orders())
    return Check("reduced gradient FD", worst <= tol, worst, tol, f"orders=[{orders}]")


def check_hessian_fd(problem: ReducedProblem, q, k: int = 3, seed: int = 2, tol: float = 1e-3) -> Check:
    rep = fd_check_hessian(problem, q, directions(problem, k, seed))
    worst = float(rep.min_errors.max())
    return Check("Hessian-vector FD", worst <= tol, worst, tol)


def check_hessian_symmetry(problem: ReducedProblem, q, seed: int = 3, tol: float = 1e-8) -> Check:
    ev = problem.evaluate(q)
    d1, d2 = directions(problem, 2, seed)
    asym = hessian_asymmetry(problem, ev, d1, d2)
    return Check("Hessian symmetry", asym <= tol, asym, tol)
