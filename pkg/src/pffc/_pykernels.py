"""Vectorized numpy element kernels (fallback for the compiled core).

Per quadrature point every local dof is described by a generalized strain
``[e_xx, e_yy, 2 e_xy, phi, dphi/dx, dphi/dy]``; the element quantities are
contractions of these rows with pointwise coefficient vectors/matrices.
"""

import numpy as np


def _b_rows(N, dN):
    """(nq, 12, 6) generalized strain rows of the local dofs."""
    nq = N.shape[0]
    B = np.zeros((nq, 12, 6))
    for a in range(4):
        dx, dy = dN[:, a, 0], dN[:, a, 1]
        B[:, 3 * a, 0] = dx
        B[:, 3 * a, 2] = dy
        B[:, 3 * a + 1, 1] = dy
        B[:, 3 * a + 1, 2] = dx
        B[:, 3 * a + 2, 3] = N[:, a]
        B[:, 3 * a + 2, 4] = dx
        B[:, 3 * a + 2, 5] = dy
    return B


def _voigt(Ue, B):
    """Generalized strains (nc, nq, 6) of element dof values."""
    return np.einsum("ci,qik->cqk", Ue, B)


def _stress(ev, mu, lam):
    tr = ev[..., 0] + ev[..., 1]
    return np.stack([2 * mu * ev[..., 0] + lam * tr, 2 * mu * ev[..., 1] + lam * tr,
                     mu * ev[..., 2]], axis=-1)


def element_a(Ue, N, dN, w, G_c, eps, kappa, mu, lam, want_matrix=True):
    """Element residual of the semilinear form (no boundary term) and its Jacobian."""
    B = _b_rows(N, dN)
    gs = _voigt(Ue, B)
    e = gs[..., :3]
    phi = gs[..., 3]
    grad = gs[..., 4:]
    sig = _stress(e, mu, lam)
    W = np.einsum("cqk,cqk->cq", sig, e)
    g = (1 - kappa) * phi * phi + kappa

    coef = np.empty(gs.shape)
    coef[..., :3] = g[..., None] * sig
    coef[..., 3] = -G_c / eps * (1 - phi) + (1 - kappa) * phi * W
    coef[..., 4:] = G_c * eps * grad
    r = np.einsum("q,qik,cqk->ci", w, B, coef)
    if not want_matrix:
        return r, None

    C = np.array([[2 * mu + lam, lam, 0.0], [lam, 2 * mu + lam, 0.0], [0.0, 0.0, mu]])
    nc, nq = phi.shape
    D = np.zeros((nc, nq, 6, 6))
    D[..., :3, :3] = g[..., None, None] * C
    cpl = 2 * (1 - kappa) * phi[..., None] * sig
    D[..., :3, 3] = cpl
    D[..., 3, :3] = cpl
    D[..., 3, 3] = G_c / eps + (1 - kappa) * W
    D[..., 4, 4] = G_c * eps
    D[..., 5, 5] = G_c * eps
    wB = w[:, None, None] * B
    DB = np.einsum("cqkl,qjl->cqkj", D, B)
    K = np.einsum("qik,cqkj->cij", wB, DB)
    return r, K


def element_a_third(Ue, dUe, Ze, N, dN, w, kappa, mu, lam):
    """Element vector of the second derivative a''_uu(dU, Phi, Z) over test dofs Phi."""
    B = _b_rows(N, dN)
    gu, gd, gz = _voigt(Ue, B), _voigt(dUe, B), _voigt(Ze, B)
    su, sd, sz = _stress(gu[..., :3], mu, lam), _stress(gd[..., :3], mu, lam), _stress(gz[..., :3], mu, lam)
    phi, dphi, zphi = gu[..., 3], gd[..., 3], gz[..., 3]
    c2 = 2 * (1 - kappa)

    coef = np.zeros(gu.shape)
    coef[..., :3] = c2 * ((phi * dphi)[..., None] * sz + (dphi * zphi)[..., None] * su
                          + (phi * zphi)[..., None] * sd)
    coef[..., 3] = c2 * (dphi * np.einsum("cqk,cqk->cq", su, gz[..., :3])
                         + phi * np.einsum("cqk,cqk->cq", sd, gz[..., :3])
                         + zphi * np.einsum("cqk,cqk->cq", sd, gu[..., :3]))
    return np.einsum("q,qik,cqk->ci", w, B, coef)
