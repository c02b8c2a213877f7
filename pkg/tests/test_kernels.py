import os
import subprocess
import sys

import numpy as np
import pytest

from pffc import kernels, verify
from pffc.forms import WeakForms
from pffc.mesh import build_mesh
from pffc.model import ModelParams


@pytest.fixture(scope="module")
def forms():
    mesh = build_mesh(4)
    return WeakForms(mesh, ModelParams.from_engineering(1e6, 0.2, eps=0.3, kappa=1e-3))


def _args(forms, U):
    p = forms.params
    N, dN, w = forms.mesh.quadrature
    return (np.ascontiguousarray(forms.mesh.cell_values(U)), N, dN, w, p.G_c, p.eps, p.kappa, p.mu, p.lam)


def test_backend_is_known():
    assert kernels.BACKEND in ("python", "cython")
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled core not built")
def test_cython_matches_numpy(forms, rng):
    U = verify.random_fields(forms.mesh, rng)
    dU = verify.random_fields(forms.mesh, rng)
    Z = verify.random_fields(forms.mesh, rng)
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    args = _args(forms, U)
    r1, K1 = py.element_a(*args, True)
    r2, K2 = cy.element_a(*args, True)
    assert np.allclose(r1, np.asarray(r2), rtol=1e-13, atol=1e-9)
    assert np.allclose(K1, np.asarray(K2), rtol=1e-13, atol=1e-6)
    cv = lambda X: np.ascontiguousarray(forms.mesh.cell_values(X))
    p = forms.params
    N, dN, w = forms.mesh.quadrature
    v1 = py.element_a_third(cv(U), cv(dU), cv(Z), N, dN, w, p.kappa, p.mu, p.lam)
    v2 = cy.element_a_third(cv(U), cv(dU), cv(Z), N, dN, w, p.kappa, p.mu, p.lam)
    assert np.allclose(v1, np.asarray(v2), rtol=1e-12, atol=1e-9)


def test_assembled_matches_scalar_forms(forms, rng):
    """The kernel route and the direct quadrature route are independent implementations."""
    mesh = forms.mesh
    q = 1e3 * rng.standard_normal(mesh.n + 1)
    U, dU, Z = (verify.random_fields(mesh, rng) for _ in range(3))
    Phi = rng.standard_normal(mesh.num_dofs)
    r = forms.residual_a(q, U)
    assert r @ Phi == pytest.approx(forms.eval_a(q, U, Phi), rel=1e-12)
    _, K = forms.assemble_a(U)
    assert Z @ (K @ dU) == pytest.approx(forms.eval_a_prime_u(q, U, dU, Z), rel=1e-11)
    v = forms.assemble_a_third(U, dU, Z)
    assert v @ Phi == pytest.approx(forms.eval_a_second_uu(q, U, dU, Phi, Z), rel=1e-11)


def test_jacobian_is_symmetric(forms, rng):
    _, K = forms.assemble_a(verify.random_fields(forms.mesh, rng))
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()


def test_residual_is_energy_gradient(forms, rng):
    mesh = forms.mesh
    q = 100 * np.ones(mesh.n + 1)
    U, dU = verify.random_fields(mesh, rng), verify.random_fields(mesh, rng)
    h = 1e-5
    fd = (forms.energy(q, U + h * dU) - forms.energy(q, U - h * dU)) / (2 * h)
    assert forms.residual_a(q, U) @ dU == pytest.approx(fd, rel=1e-7)


def test_third_derivative_symmetric_in_du_and_z(forms, rng):
    """a''_uu(U)(dU, Phi, Z) is a third derivative of the energy, so symmetric in its slots."""
    mesh = forms.mesh
    U, dU, Z = (verify.random_fields(mesh, rng) for _ in range(3))
    assert np.allclose(forms.assemble_a_third(U, dU, Z), forms.assemble_a_third(U, Z, dU), rtol=1e-12,
                       atol=1e-12 * np.abs(forms.assemble_a_third(U, dU, Z)).max())


def test_kernel_fd_checks_pass():
    for check in verify.check_kernels(seed=3):
        assert check.passed, check.line()


def test_numpy_fallback_selected_by_environment():
    code = ("import pffc, numpy as np; from pffc import verify; print(pffc.KERNEL_BACKEND);"
            "print(all(c.passed for c in verify.check_kernels(0)))")
    out = subprocess.run([sys.executable, "-c", code], env={**os.environ, "PFFC_KERNELS": "python"},
                         capture_output=True, text=True, check=True).stdout.split()
    assert out == ["python", "True"]
