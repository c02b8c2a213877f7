"""Config-driven experiment, verification and gradient-check runners."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, verify
from .config import ConfigError, ExperimentConfig, dump_config
from .forms import WeakForms
from .forward import ConvergenceError, NewtonSettings, uniform_times
from .mesh import build_mesh, interpolate_slit_field
from .model import CostParams, ModelParams
from .optimize import OptSettings, ReducedProblem, fd_check_gradient, fd_check_hessian, newton_cg
from .sensitivity import SweepError

log = logging.getLogger(__name__)

VERIFY_MAX_N = 16
VERIFY_MAX_M = 8


@dataclass
class Setup:
    config: ExperimentConfig
    problem: ReducedProblem
    phi0: np.ndarray
    phi_d: np.ndarray

    @property
    def mesh(self):
        return self.problem.mesh


def build(cfg: ExperimentConfig) -> Setup:
    """Mesh, model, cost and reduced problem described by ``cfg``."""
    mesh = build_mesh(cfg.n)
    params = ModelParams.from_engineering(cfg.E, cfg.nu, G_c=cfg.G_c, eps=cfg.epsilon, kappa=cfg.kappa,
                                          gamma=cfg.gamma, eta=cfg.eta, eta0=cfg.eta0)
    phi0 = interpolate_slit_field((cfg.notch_start, cfg.notch_end), 0.0, mesh)
    phi_d = interpolate_slit_field((cfg.target_start, cfg.target_end), cfg.target_halfwidth * mesh.h, mesh)
    if cfg.phi_d_include_notch:
        phi_d = np.minimum(phi_d, phi0)
    cost = CostParams(cfg.alpha, phi_d, cfg.q_d, cfg.time_weighting)
    newton = NewtonSettings(cfg.forward_abs_tol, cfg.forward_rel_tol, cfg.forward_max_iter)
    U0 = mesh.join(np.zeros(mesh.num_nodes), np.zeros(mesh.num_nodes), phi0)
    problem = ReducedProblem(WeakForms(mesh, params), cost, U0, uniform_times(cfg.M, cfg.T), newton)
    return Setup(cfg, problem, phi0, phi_d)


def opt_settings(cfg: ExperimentConfig) -> OptSettings:
    return OptSettings(cfg.newton_tol, cfg.max_newton, cfg.cg_forcing, cfg.cg_max, cfg.damping,
                       cfg.max_step_halvings, cfg.newton_residual)


def crack_tip(mesh, U, threshold: float = 0.5, side: str = "left") -> float:
    """Extreme x on ``y = 0.5`` with ``phi < threshold`` (nan if there is none)."""
    row = mesh.grid(mesh.split(U)[2])[mesh.n // 2]
    x = np.linspace(0.0, 1.0, mesh.n + 1)
    hit = x[row < threshold]
    if hit.size == 0:
        return float("nan")
    return float(hit.min() if side == "left" else hit.max())


@dataclass
class RunResult:
    status: int
    out: Path
    records: list
    q: np.ndarray | None
    message: str
    setup: Setup
    evaluation: object = None


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Optimize and write ``iterations.csv``, ``force_profile.txt``, ``controls.txt`` and snapshots.

    Exit status 0 on convergence, 1 if the optimizer stopped without
    meeting the tolerance, 2 on a solver failure (partial table kept).
    """
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    setup = build(cfg)
    problem, mesh = setup.problem, setup.mesh
    x = np.linspace(0.0, 1.0, mesh.n + 1)
    t0 = time.perf_counter()
    with io.IterationLog(out / "iterations.csv") as table, (out / "controls.txt").open("w") as ctl:
        ctl.write("# iter followed by the nodal control values on the top edge, x ascending\n")

        def record(rec, ev):
            table.append(rec)
            ctl.write(" ".join([str(rec.iter)] + [io.fmt(v) for v in ev.q]) + "\n")
            ctl.flush()

        try:
            res = newton_cg(problem, cfg.q0, opt_settings(cfg), callback=record)
        except (ConvergenceError, SweepError) as err:
            log.error("solver failure: %s", err)
            return RunResult(2, out, [], None, f"solver failure: {err}", setup)
    elapsed = time.perf_counter() - t0

    io.write_force_profile(out / "force_profile.txt", x, res.q)
    ev = res.evaluation
    times = ev.trajectory.times
    for m in cfg.snapshot_indices():
        io.write_state_vtk(out / f"state_m{m}.vtk", mesh, ev.trajectory[m], times[m])
        if ev.adjoint is not None:
            io.write_adjoint_vtk(out / f"adjoint_m{m}.vtk", mesh, ev.adjoint[m], times[m])
    tips = [crack_tip(mesh, ev.trajectory[m]) for m in range(cfg.M + 1)]
    summary = [f"status = {res.message}", f"iterations = {len(res.records) - 1}",
               f"elapsed_seconds = {elapsed:.3f}",
               f"final_cost = {io.fmt(ev.cost)}", f"final_max_force = {io.fmt(np.max(np.abs(res.q)))}",
               f"left_crack_tip = {io.fmt(tips[-1])}",
               f"right_crack_tip = {io.fmt(crack_tip(mesh, ev.trajectory[cfg.M], side='right'))}"]
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    status = 0 if res.converged else 1
    return RunResult(status, out, res.records, res.q, res.message, setup, ev)


def check_verification_size(cfg: ExperimentConfig):
    if cfg.n > VERIFY_MAX_N or cfg.M > VERIFY_MAX_M:
        raise ConfigError(f"verification is limited to n <= {VERIFY_MAX_N} and M <= {VERIFY_MAX_M} "
                          f"(got n={cfg.n}, M={cfg.M})")


def run_verification(cfg: ExperimentConfig, out: Path | None = None) -> tuple[int, list]:
    """Run all self-checks on a small configuration and write ``verification.txt``."""
    check_verification_size(cfg)
    setup = build(cfg)
    problem = setup.problem
    q = problem.control(cfg.probe_control)
    checks = []
    checks += verify.check_kernels(cfg.seed)
    checks.append(verify.check_trivial_forward())
    checks.append(verify.check_residual_equivalence(seed=cfg.seed))
    checks.append(verify.check_duality(problem, q, seed=cfg.seed))
    checks.append(verify.check_gradient_fd(problem, q, cfg.fd_directions, cfg.seed + 1))
    checks.append(verify.check_hessian_fd(problem, q, cfg.fd_directions, cfg.seed + 2))
    checks.append(verify.check_hessian_symmetry(problem, q, cfg.seed + 3))
    out = Path(out) if out is not None else cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    lines = [c.line() for c in checks]
    (out / "verification.txt").write_text("\n".join(lines) + "\n")
    status = 0 if all(c.passed for c in checks) else 1
    return status, checks


def run_gradcheck(cfg: ExperimentConfig, out: Path | None = None) -> tuple[int, str]:
    """Finite-difference tables for the reduced gradient and Hessian; writes ``gradcheck.txt``."""
    check_verification_size(cfg)
    problem = build(cfg).problem
    q = problem.control(cfg.probe_control)
    dirs = verify.directions(problem, cfg.fd_directions, cfg.seed)
    lines = []
    ok = True
    for title, fn, tol in (("gradient", fd_check_gradient, 1e-4), ("hessian", fd_check_hessian, 1e-3)):
        rep = fn(problem, q, dirs)
        lines.append(f"# {title}: relative error per direction (rows) and step (columns)")
        lines.append("step " + " ".join(f"{s:.1e}" for s in rep.steps))
        for k, row in enumerate(rep.errors):
            lines.append(f"d{k} " + " ".join(f"{e:.3e}" for e in row))
        lines.append(f"min errors: {' '.join(f'{e:.3e}' for e in rep.min_errors)} (tolerance {tol:.0e})")
        lines.append(f"orders: {' '.join(f'{o:.2f}' for o in rep.orders())}")
        ok &= bool(np.all(rep.min_errors <= tol))
    text = "\n".join(lines) + "\n"
    out = Path(out) if out is not None else cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "gradcheck.txt").write_text(text)
    return (0 if ok else 1), text
