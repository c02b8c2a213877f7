"""Uniform quadrilateral mesh of the unit square with Q1 elements.

Degrees of freedom are node-major: node ``k`` owns dofs ``3k`` (u_x),
``3k + 1`` (u_y) and ``3k + 2`` (phi). Node ``k = j (n + 1) + i`` sits at
``(i / n, j / n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .model import ParameterError

NCOMP = 3
UX, UY, PHI = 0, 1, 2

_GAUSS_1D = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def q1_eval(ref_point):
    """Bilinear shape values and reference gradients at ``(s, t)`` in [0, 1]^2.

    Local node order is counter-clockwise from the origin:
    (0, 0), (1, 0), (1, 1), (0, 1).

    Returns
    -------
    values : ndarray, shape (4,)
    grads : ndarray, shape (4, 2)
    """
    s, t = ref_point
    values = np.array([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t])
    grads = np.array([
        [-(1 - t), -(1 - s)],
        [1 - t, -s],
        [t, s],
        [-t, 1 - s],
    ])
    return values, grads


class _Scatter:
    """Precomputed CSR pattern for summing element matrices into a global one."""

    def __init__(self, dofs: np.ndarray, size: int):
        nloc = dofs.shape[1]
        rows = np.repeat(dofs, nloc, axis=1).ravel()
        cols = np.tile(dofs, (1, nloc)).ravel()
        keys = rows.astype(np.int64) * size + cols
        uniq, self.inverse = np.unique(keys, return_inverse=True)
        self.indices = (uniq % size).astype(np.int32)
        r = uniq // size
        self.indptr = np.searchsorted(r, np.arange(size + 1)).astype(np.int32)
        self.size = size
        self.nnz = uniq.size

    def __call__(self, element_matrices: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.inverse, weights=element_matrices.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.size, self.size))


@dataclass
class Mesh:
    """Structured ``n x n`` mesh of (0, 1)^2.

    Boundary parts: Gamma_N is the top edge (y = 1), Gamma_D the bottom
    edge (y = 0), the vertical sides are traction free.
    """

    n: int
    nodes: np.ndarray = field(init=False, repr=False)
    cells: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n
        if n < 2 or n % 2:
            raise ParameterError(f"mesh needs an even number of cells per side >= 2, got {n}")
        x = np.linspace(0.0, 1.0, n + 1)
        X, Y = np.meshgrid(x, x)
        self.nodes = np.column_stack([X.ravel(), Y.ravel()])
        i, j = np.meshgrid(np.arange(n), np.arange(n))
        k = (j * (n + 1) + i).ravel()
        self.cells = np.column_stack([k, k + 1, k + n + 2, k + n + 1])

    # -- sizes -------------------------------------------------------------
    @property
    def num_nodes(self) -> int:
        return (self.n + 1) ** 2

    @property
    def num_cells(self) -> int:
        return self.n * self.n

    @property
    def num_dofs(self) -> int:
        return NCOMP * self.num_nodes

    @property
    def side(self) -> float:
        return 1.0 / self.n

    @property
    def h(self) -> float:
        """Cell diameter."""
        return np.sqrt(2.0) / self.n

    # -- boundary ----------------------------------------------------------
    @cached_property
    def top_nodes(self) -> np.ndarray:
        """Gamma_N nodes, x ascending."""
        return np.arange(self.n * (self.n + 1), self.num_nodes)

    @cached_property
    def bottom_nodes(self) -> np.ndarray:
        return np.arange(self.n + 1)

    def boundary_tags(self) -> dict[str, np.ndarray]:
        """Boundary edges (pairs of node ids) per tag."""
        n = self.n
        b = self.bottom_nodes
        t = self.top_nodes
        left = np.arange(0, self.num_nodes, n + 1)
        right = left + n
        pairs = lambda a: np.column_stack([a[:-1], a[1:]])
        return {"N": pairs(t), "D": pairs(b), "free": np.vstack([pairs(left), pairs(right)])}

    @cached_property
    def dirichlet_dofs(self) -> np.ndarray:
        b = self.bottom_nodes
        return np.sort(np.concatenate([NCOMP * b + UX, NCOMP * b + UY]))

    @cached_property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.num_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.flatnonzero(mask)

    @cached_property
    def control_dofs(self) -> np.ndarray:
        """u_y dofs of the Gamma_N nodes; the control acts on these."""
        return NCOMP * self.top_nodes + UY

    # -- quadrature --------------------------------------------------------
    @cached_property
    def quadrature(self):
        """2x2 Gauss rule: shape values (nq, 4), physical gradients (nq, 4, 2), weights (nq,)."""
        pts = [(s, t) for t in _GAUSS_1D for s in _GAUSS_1D]
        vals, grads = zip(*(q1_eval(p) for p in pts))
        hc = self.side
        weights = np.full(len(pts), 0.25 * hc * hc)
        return np.array(vals), np.array(grads) / hc, weights

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        return (NCOMP * self.cells[:, :, None] + np.arange(NCOMP)).reshape(self.num_cells, -1)

    @cached_property
    def _scatter(self) -> _Scatter:
        return _Scatter(self.cell_dofs, self.num_dofs)

    @cached_property
    def _scatter_nodes(self) -> _Scatter:
        return _Scatter(self.cells, self.num_nodes)

    def scatter_matrix(self, element_matrices: np.ndarray) -> sp.csr_matrix:
        """Sum (ncells, 12, 12) element matrices into the global dof matrix."""
        return self._scatter(element_matrices)

    def scatter_vector(self, element_vectors: np.ndarray) -> np.ndarray:
        return np.bincount(self.cell_dofs.ravel(), weights=element_vectors.ravel(),
                           minlength=self.num_dofs)

    def cell_values(self, U: np.ndarray) -> np.ndarray:
        """Gather a dof vector into (ncells, 12) element arrays."""
        return np.asarray(U)[self.cell_dofs]

    # -- mass matrices -----------------------------------------------------
    def weighted_scalar_mass(self, qp_weights: np.ndarray | None = None) -> sp.csr_matrix:
        """Nodal Q1 mass matrix, optionally with a (ncells, nq) weight at the quadrature points."""
        N, _, w = self.quadrature
        c = np.ones((self.num_cells, w.size)) if qp_weights is None else qp_weights
        me = np.einsum("cq,q,qa,qb->cab", c, w, N, N)
        return self._scatter_nodes(me)

    @cached_property
    def scalar_mass(self) -> sp.csr_matrix:
        return self.weighted_scalar_mass()

    def embed_phi(self, nodal: sp.spmatrix) -> sp.csr_matrix:
        """Place a nodal (scalar) matrix on the phi block of the dof space."""
        P = self.phi_selector
        return (P.T @ nodal @ P).tocsr()

    @cached_property
    def phi_selector(self) -> sp.csr_matrix:
        """Maps a dof vector to its nodal phi values."""
        nn = self.num_nodes
        return sp.csr_matrix((np.ones(nn), (np.arange(nn), NCOMP * np.arange(nn) + PHI)),
                             shape=(nn, self.num_dofs))

    @cached_property
    def phi_mass(self) -> sp.csr_matrix:
        return self.embed_phi(self.scalar_mass)

    @cached_property
    def full_mass(self) -> sp.csr_matrix:
        """L2 mass of the coupled space (same scalar mass on every component)."""
        return sp.kron(self.scalar_mass, sp.identity(NCOMP), format="csr")

    @cached_property
    def boundary_mass(self) -> sp.csr_matrix:
        return assemble_boundary_mass(self)

    # -- field helpers -----------------------------------------------------
    def split(self, U: np.ndarray):
        """Views ``(u_x, u_y, phi)`` of nodal values."""
        U = np.asarray(U)
        return U[UX::NCOMP], U[UY::NCOMP], U[PHI::NCOMP]

    def join(self, ux, uy, phi) -> np.ndarray:
        U = np.empty(self.num_dofs)
        U[UX::NCOMP], U[UY::NCOMP], U[PHI::NCOMP] = ux, uy, phi
        return U

    def grid(self, nodal: np.ndarray) -> np.ndarray:
        """Reshape nodal values to (n + 1, n + 1) indexed ``[j, i]`` (y, x)."""
        return np.asarray(nodal).reshape(self.n + 1, self.n + 1)

    def x_reflection(self) -> np.ndarray:
        """Node permutation for the mirror x -> 1 - x."""
        g = np.arange(self.num_nodes).reshape(self.n + 1, self.n + 1)
        return g[:, ::-1].ravel()


def build_mesh(n: int) -> Mesh:
    return Mesh(n)


def assemble_boundary_mass(mesh: Mesh) -> sp.csr_matrix:
    """1D Q1 mass matrix on Gamma_N in the control (top-node) numbering."""
    m = mesh.n + 1
    hc = mesh.side
    diag = np.full(m, 2.0 * hc / 3.0)
    diag[[0, -1]] = hc / 3.0
    off = np.full(m - 1, hc / 6.0)
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


def interpolate_slit_field(slit, halfwidth: float, mesh: Mesh, y0: float = 0.5) -> np.ndarray:
    """Nodal field that is 0 on the closed strip ``slit x [y0 - hw, y0 + hw]``, 1 elsewhere.

    ``slit`` is an ``(x_start, x_end)`` pair; ``None`` or an empty interval
    gives the all-ones field.
    """
    out = np.ones(mesh.num_nodes)
    if slit is None:
        return out
    a, b = slit
    if a > b:
        return out
    tol = 1e-12
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    inside = (x >= a - tol) & (x <= b + tol) & (np.abs(y - y0) <= halfwidth + tol)
    out[inside] = 0.0
    return out


def apply_dirichlet(A: sp.spmatrix, b: np.ndarray, mesh: Mesh, values: np.ndarray | None = None):
    """Symmetric elimination of the Gamma_D displacement dofs.

    Constrained rows and columns are replaced by the identity, the right-hand
    side is corrected for the eliminated columns and carries the prescribed
    values (zero by default).
    """
    d = mesh.dirichlet_dofs
    g = np.zeros(d.size) if values is None else np.asarray(values, dtype=float)
    A = sp.csr_matrix(A, copy=True)
    b = np.array(b, dtype=float, copy=True)
    if np.any(g):
        full = np.zeros(A.shape[0])
        full[d] = g
        b -= A @ full
    mask = np.ones(A.shape[0])
    mask[d] = 0.0
    D = sp.diags(mask)
    A = (D @ A @ D + sp.diags(1.0 - mask)).tocsr()
    b[d] = g
    return A, b
