"""Sparse direct solves for the constrained step matrices.

SuperLU is driven with a geometric nested-dissection ordering of the
structured grid (three dofs per node kept together) and diagonal pivots.
If a factorization fails or a solve is inaccurate, it is redone with
SuperLU's own column ordering and partial pivoting.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@lru_cache(maxsize=8)
def nested_dissection(n: int) -> np.ndarray:
    """Node ordering of the ``(n + 1) x (n + 1)`` lattice, separators last."""
    out: list[int] = []

    def rec(i0, i1, j0, j1):
        ni, nj = i1 - i0 + 1, j1 - j0 + 1
        if ni <= 0 or nj <= 0:
            return
        if ni * nj <= 16:
            out.extend(j * (n + 1) + i for j in range(j0, j1 + 1) for i in range(i0, i1 + 1))
            return
        if ni >= nj:
            c = (i0 + i1) // 2
            rec(i0, c - 1, j0, j1)
            rec(c + 1, i1, j0, j1)
            out.extend(j * (n + 1) + c for j in range(j0, j1 + 1))
        else:
            c = (j0 + j1) // 2
            rec(i0, i1, j0, c - 1)
            rec(i0, i1, c + 1, j1)
            out.extend(c * (n + 1) + i for i in range(i0, i1 + 1))

    rec(0, n, 0, n)
    return np.asarray(out)


def dof_ordering(n: int, ncomp: int = 3) -> np.ndarray:
    nodes = nested_dissection(n)
    return (ncomp * nodes[:, None] + np.arange(ncomp)).ravel()


class Factorization:
    """LU factors of a square sparse matrix with a fixed symmetric permutation."""

    def __init__(self, A: sp.spmatrix, n: int | None = None, check: bool = True):
        A = sp.csc_matrix(A)
        self.shape = A.shape
        self._perm = None
        lu = None
        if n is not None and A.shape[0] == 3 * (n + 1) ** 2:
            perm = dof_ordering(n)
            try:
                lu = spla.splu(A[perm][:, perm].tocsc(), permc_spec="NATURAL",
                               diag_pivot_thresh=0.0, options={"SymmetricMode": True})
                self._perm = perm
            except RuntimeError:
                lu = None
        self._lu = lu
        if lu is not None and check:
            rng = np.random.default_rng(0)
            b = rng.standard_normal(A.shape[0])
            x = self.solve(b)
            if not np.all(np.isfinite(x)) or np.linalg.norm(A @ x - b) > 1e-8 * np.linalg.norm(b):
                self._lu = None
        if self._lu is None:
            self._perm = None
            self._lu = spla.splu(A, permc_spec="COLAMD")

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self._perm is None:
            return self._lu.solve(b)
        x = np.empty_like(b)
        x[self._perm] = self._lu.solve(b[self._perm])
        return x


def solve(A: sp.spmatrix, b: np.ndarray, n: int | None = None) -> np.ndarray:
    return Factorization(A, n, check=False).solve(b) if n is None else _checked_solve(A, b, n)


def _checked_solve(A, b, n):
    fac = Factorization(A, n, check=False)
    x = fac.solve(b)
    if not np.all(np.isfinite(x)) or np.linalg.norm(A @ x - b) > 1e-8 * max(np.linalg.norm(b), 1e-300):
        x = spla.splu(sp.csc_matrix(A), permc_spec="COLAMD").solve(np.asarray(b, dtype=float))
    return x
