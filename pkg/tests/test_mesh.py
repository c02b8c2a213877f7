import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from pffc.mesh import (apply_dirichlet, build_mesh, interpolate_slit_field, q1_eval)


@given(st.floats(0, 1), st.floats(0, 1))
def test_q1_partition_of_unity(s, t):
    vals, grads = q1_eval((s, t))
    assert vals.sum() == pytest.approx(1.0)
    assert np.allclose(grads.sum(axis=0), 0.0, atol=1e-14)


def test_q1_nodal_interpolation():
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    for a, c in enumerate(corners):
        vals, _ = q1_eval(c)
        assert np.allclose(vals, np.eye(4)[a])


@pytest.mark.parametrize("n", [1, 3, 0])
def test_odd_or_tiny_mesh_rejected(n):
    with pytest.raises(ValueError):
        build_mesh(n)


def test_counts_and_numbering():
    m = build_mesh(4)
    assert (m.num_nodes, m.num_cells, m.num_dofs) == (25, 16, 75)
    assert np.allclose(m.nodes[m.top_nodes, 1], 1.0)
    assert np.all(np.diff(m.nodes[m.top_nodes, 0]) > 0)
    assert np.allclose(m.nodes[m.bottom_nodes, 1], 0.0)
    assert m.h == pytest.approx(np.sqrt(2) / 4)
    assert len(m.dirichlet_dofs) == 2 * 5
    assert np.all(m.control_dofs % 3 == 1)


def test_boundary_tags_cover_edges():
    tags = build_mesh(4).boundary_tags()
    assert len(tags["N"]) == len(tags["D"]) == 4
    assert len(tags["free"]) == 8


@pytest.mark.parametrize("n", [2, 6])
def test_mass_matrices_integrate_constants_and_linears(n):
    m = build_mesh(n)
    one = np.ones(m.num_nodes)
    assert one @ (m.scalar_mass @ one) == pytest.approx(1.0)
    x = m.nodes[:, 0]
    assert one @ (m.scalar_mass @ x) == pytest.approx(0.5)
    assert x @ (m.scalar_mass @ x) == pytest.approx(1 / 3)
    top = np.ones(n + 1)
    xt = m.nodes[m.top_nodes, 0]
    assert top @ (m.boundary_mass @ top) == pytest.approx(1.0)
    assert xt @ (m.boundary_mass @ xt) == pytest.approx(1 / 3)
    assert abs(m.full_mass - m.full_mass.T).max() == 0


def test_gradients_integrate_exactly():
    """Stiffness of x: int |grad x|^2 = 1 through the quadrature data."""
    m = build_mesh(4)
    N, dN, w = m.quadrature
    x = m.nodes[:, 0][m.cells]
    gx = np.einsum("ca,qad->cqd", x, dN)
    assert np.allclose(gx[..., 0], 1.0) and np.allclose(gx[..., 1], 0.0)
    assert (w.sum() * m.num_cells) == pytest.approx(1.0)


def test_slit_field_examples():
    m = build_mesh(64)
    phi0 = interpolate_slit_field((0.5, 1.0), 0.0, m)
    g = m.grid(phi0)
    assert np.all(g[32, 32:] == 0) and np.all(g[32, :32] == 1)
    assert np.all(np.delete(g, 32, axis=0) == 1)
    phid = interpolate_slit_field((0.25, 0.5), m.h, m)
    node = np.argmin(np.hypot(m.nodes[:, 0] - 0.3, m.nodes[:, 1] - 0.5))
    assert m.nodes[node, 0] == pytest.approx(0.296875)
    assert phid[node] == 0.0
    assert interpolate_slit_field(None, 0.0, m).min() == 1.0
    assert interpolate_slit_field((0.6, 0.4), 0.0, m).min() == 1.0


def test_x_reflection_is_involution():
    m = build_mesh(4)
    r = m.x_reflection()
    assert np.array_equal(r[r], np.arange(m.num_nodes))
    assert np.allclose(m.nodes[r, 0], 1 - m.nodes[:, 0])


def test_apply_dirichlet_symmetric_and_prescribes(rng):
    m = build_mesh(2)
    A = sp.random(m.num_dofs, m.num_dofs, density=0.3, random_state=1) + 5 * sp.identity(m.num_dofs)
    A = (A + A.T).tocsr()
    b = rng.standard_normal(m.num_dofs)
    g = rng.standard_normal(len(m.dirichlet_dofs))
    Ac, bc = apply_dirichlet(A, b, m, g)
    assert abs(Ac - Ac.T).max() < 1e-14
    x = np.linalg.solve(Ac.toarray(), bc)
    assert np.allclose(x[m.dirichlet_dofs], g)
    free = m.free_dofs
    assert np.allclose((A @ x)[free], b[free])
