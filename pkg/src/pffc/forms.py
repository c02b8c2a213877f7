"""The semilinear form of the coupled displacement/phase-field system and its derivatives.

Two independent routes are provided:

* scalar evaluators (``eval_*``) interpolate every field at the quadrature
  points and integrate the pointwise integrands with full 2x2 tensors;
* assembly (``assemble_*``) goes through the element kernels and returns
  global vectors/matrices for the solvers.

Tests use the first route as the oracle for the second.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .mesh import Mesh, NCOMP, UY, PHI, _GAUSS_1D
from .model import ModelParams, degradation, degradation_prime, stress


@dataclass
class StepContext:
    """Data of one time step ``m``: length and previous phase-field (nodal)."""

    dt: float
    phi_prev: np.ndarray
    params: ModelParams

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")


def _ddot(a, b):
    return np.einsum("...ij,...ij->...", a, b)


class WeakForms:
    """Evaluation and assembly of ``a``, ``a'_u``, ``a'_q``, ``a''_uu`` and the time couplings."""

    def __init__(self, mesh: Mesh, params: ModelParams):
        self.mesh = mesh
        self.params = params

    # ------------------------------------------------------------------
    # pointwise fields
    # ------------------------------------------------------------------
    def fields(self, U):
        """Quadrature-point values of ``phi``, ``grad phi`` and the strain tensor of ``u``."""
        N, dN, _ = self.mesh.quadrature
        ce = self.mesh.cell_values(U).reshape(self.mesh.num_cells, 4, NCOMP)
        phi = np.einsum("ca,qa->cq", ce[..., PHI], N)
        grad = np.einsum("ca,qad->cqd", ce[..., PHI], dN)
        du = np.einsum("cak,qad->cqkd", ce[..., :2], dN)  # du_k / dx_d
        strain = 0.5 * (du + np.swapaxes(du, -1, -2))
        return phi, grad, strain

    def _integrate(self, integrand):
        _, _, w = self.mesh.quadrature
        return float(np.einsum("cq,q->", integrand, w))

    def _boundary_integral(self, f_top, g_top):
        """(f, g) on Gamma_N for top-node values, by 2-point Gauss per edge."""
        hc = self.mesh.side
        total = 0.0
        for s in _GAUSS_1D:
            fv = (1 - s) * f_top[:-1] + s * f_top[1:]
            gv = (1 - s) * g_top[:-1] + s * g_top[1:]
            total += 0.5 * hc * np.dot(fv, gv)
        return float(total)

    def _top_uy(self, U):
        return np.asarray(U)[self.mesh.control_dofs]

    # ------------------------------------------------------------------
    # scalar evaluators
    # ------------------------------------------------------------------
    def eval_a(self, q, U, Phi) -> float:
        p = self.params
        phi, grad, e = self.fields(U)
        tphi, tgrad, te = self.fields(Phi)
        sig = stress(e, p.mu, p.lam)
        val = (degradation(phi, p.kappa) * _ddot(sig, te)
               + p.G_c * p.eps * np.einsum("cqd,cqd->cq", grad, tgrad)
               - p.G_c / p.eps * (1 - phi) * tphi
               + (1 - p.kappa) * phi * _ddot(sig, e) * tphi)
        return self._integrate(val) - self._boundary_integral(np.asarray(q, float), self._top_uy(Phi))

    def eval_a_prime_u(self, q, U, dU, Z) -> float:
        p = self.params
        phi, _, e = self.fields(U)
        dphi, dgrad, de = self.fields(dU)
        zphi, zgrad, ze = self.fields(Z)
        sig = stress(e, p.mu, p.lam)
        sig_d = stress(de, p.mu, p.lam)
        k1 = 1 - p.kappa
        val = (degradation(phi, p.kappa) * _ddot(sig_d, ze)
               + degradation_prime(phi, p.kappa) * dphi * _ddot(sig, ze)
               + p.G_c * p.eps * np.einsum("cqd,cqd->cq", dgrad, zgrad)
               + p.G_c / p.eps * dphi * zphi
               + k1 * dphi * _ddot(sig, e) * zphi
               + 2 * k1 * phi * _ddot(sig_d, e) * zphi)
        return self._integrate(val)

    def eval_a_prime_q(self, dq, Phi) -> float:
        return -self._boundary_integral(np.asarray(dq, float), self._top_uy(Phi))

    def eval_a_second_uu(self, q, U, dU, Phi, Z) -> float:
        """Second derivative of ``a`` in ``u`` along ``dU`` and ``Phi`` tested with ``Z``."""
        p = self.params
        phi, _, e = self.fields(U)
        dphi, _, de = self.fields(dU)
        tphi, _, te = self.fields(Phi)
        zphi, _, ze = self.fields(Z)
        C = lambda t: stress(t, p.mu, p.lam)
        k2 = 2 * (1 - p.kappa)
        val = k2 * (phi * tphi * _ddot(C(de), ze)
                    + dphi * tphi * _ddot(C(e), ze)
                    + phi * dphi * _ddot(C(te), ze)
                    + phi * _ddot(C(te), de) * zphi
                    + dphi * _ddot(C(te), e) * zphi
                    + tphi * _ddot(C(de), e) * zphi)
        return self._integrate(val)

    def energy(self, q, U) -> float:
        """Stored elastic plus crack energy minus traction work; ``a`` is its gradient."""
        p = self.params
        phi, grad, e = self.fields(U)
        sig = stress(e, p.mu, p.lam)
        dens = (0.5 * degradation(phi, p.kappa) * _ddot(sig, e)
                + 0.5 * p.G_c / p.eps * (1 - phi) ** 2
                + 0.5 * p.G_c * p.eps * np.einsum("cqd,cqd->cq", grad, grad))
        return self._integrate(dens) - self._boundary_integral(np.asarray(q, float), self._top_uy(U))

    def eval_penalty_coupling(self, ctx: StepContext, phi_m, psi) -> float:
        """gamma (chi (phi_m - phi_prev), psi) + eta (phi_m - phi_prev, psi), chi pointwise."""
        N, _, w = self.mesh.quadrature
        cells = self.mesh.cells
        diff = np.einsum("ca,qa->cq", (np.asarray(phi_m) - ctx.phi_prev)[cells], N)
        tq = np.einsum("ca,qa->cq", np.asarray(psi)[cells], N)
        chi = diff > 0
        p = ctx.params
        return self._integrate((p.gamma * chi + p.eta) * diff * tq)

    # ------------------------------------------------------------------
    # assembly
    # ------------------------------------------------------------------
    def _kernel_args(self):
        N, dN, w = self.mesh.quadrature
        return N, dN, w

    def assemble_a(self, U, want_matrix: bool = True):
        """Volume part of ``a(U)(.)`` as a vector and ``a'_u(U)`` as a sparse matrix."""
        p = self.params
        N, dN, w = self._kernel_args()
        re, Ke = kernels.element_a(np.ascontiguousarray(self.mesh.cell_values(U)), N, dN, w,
                                   p.G_c, p.eps, p.kappa, p.mu, p.lam, want_matrix)
        r = self.mesh.scatter_vector(np.asarray(re))
        K = self.mesh.scatter_matrix(np.asarray(Ke)) if want_matrix else None
        return r, K

    def boundary_load(self, q) -> np.ndarray:
        """Dof vector of ``Phi -> (q, Phi_uy)_{Gamma_N}``."""
        out = np.zeros(self.mesh.num_dofs)
        out[self.mesh.control_dofs] = self.mesh.boundary_mass @ np.asarray(q, float)
        return out

    def residual_a(self, q, U) -> np.ndarray:
        """Dof vector of ``a(q, U)(.)`` including the traction term."""
        r, _ = self.assemble_a(U, want_matrix=False)
        return r - self.boundary_load(q)

    def assemble_a_third(self, U, dU, Z) -> np.ndarray:
        """Dof vector of ``Phi -> a''_uu(U)(dU, Phi, Z)``."""
        p = self.params
        N, dN, w = self._kernel_args()
        cv = lambda X: np.ascontiguousarray(self.mesh.cell_values(X))
        ve = kernels.element_a_third(cv(U), cv(dU), cv(Z), N, dN, w, p.kappa, p.mu, p.lam)
        return self.mesh.scatter_vector(np.asarray(ve))

    def active_set(self, phi_m, phi_prev) -> np.ndarray:
        """Pointwise indicator (ncells, nq) of strict phase-field growth."""
        N, _, _ = self.mesh.quadrature
        diff = np.einsum("ca,qa->cq", (np.asarray(phi_m) - np.asarray(phi_prev))[self.mesh.cells], N)
        return diff > 0

    def growth_squared(self, phi_m, phi_prev) -> float:
        """``||(phi_m - phi_prev)_+||^2`` with the positive part taken at the quadrature points.

        This is the quantity the irreversibility penalty acts on.
        """
        N, _, w = self.mesh.quadrature
        d = np.einsum("ca,qa->cq", (np.asarray(phi_m) - np.asarray(phi_prev))[self.mesh.cells], N)
        return float(np.einsum("cq,q->", np.maximum(d, 0.0) ** 2, w))

    def coupling_matrix(self, chi, gamma: float | None = None, eta: float | None = None) -> sp.csr_matrix:
        """Phi-block matrix of ``gamma (chi ., .) + eta (., .)`` in dof numbering."""
        gamma = self.params.gamma if gamma is None else gamma
        eta = self.params.eta if eta is None else eta
        weights = gamma * np.asarray(chi, dtype=float) + eta
        return self.mesh.embed_phi(self.mesh.weighted_scalar_mass(weights))
