"""P1 finite-element Laplace-Beltrami operators on embedded simplicial meshes.

Assembly is intrinsic: simplices are genuinely flat in R^{n+2}, so cotangent
weights (n = 2) and inverse edge lengths (n = 1) computed from ambient
chordal geometry realize the weak Laplacian with O(h^2) geometric error.
The stiffness matrix K follows the positive (geometer's) sign convention:
K is PSD with kernel exactly the constants on a connected closed mesh, and
the pair (K, M) represents the operator as M^{-1} K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .meshing import DEGENERATE_REL_TOL, SimplicialMesh, simplex_measures

CONSISTENT = "consistent"
LUMPED = "lumped"


class AssemblyError(ValueError):
    """Degenerate geometry or invalid assembly request."""


class SymmetricSparse:
    """Symmetric sparse matrix storing only the lower triangle.

    The full matrix is reconstructed as L + strict_lower(L)^T, so symmetry
    is exact by construction.  `export_coordinate_text` writes the stored
    triangle as 1-based (row, col, value) lines after an "order nnz" header.
    """

    def __init__(self, lower: sparse.csr_matrix):
        lower = sparse.csr_matrix(lower)
        if lower.shape[0] != lower.shape[1]:
            raise AssemblyError("matrix must be square")
        self._lower = lower
        self._full = None

    @classmethod
    def from_coo(cls, rows, cols, values, order: int) -> "SymmetricSparse":
        """Assemble from scattered symmetric contributions.

        Entries above the diagonal are dropped; duplicates sum.  Callers
        must scatter (i, j) and (j, i) with equal values, as element-matrix
        assembly naturally does.
        """
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        values = np.asarray(values, dtype=np.float64)
        keep = rows >= cols
        lower = sparse.coo_matrix(
            (values[keep], (rows[keep], cols[keep])), shape=(order, order)
        ).tocsr()
        lower.sum_duplicates()
        return cls(lower)

    @property
    def order(self) -> int:
        return self._lower.shape[0]

    @property
    def lower(self) -> sparse.csr_matrix:
        return self._lower

    def full(self) -> sparse.csr_matrix:
        if self._full is None:
            strict = sparse.tril(self._lower, k=-1)
            self._full = (self._lower + strict.T).tocsr()
        return self._full

    def diagonal(self) -> np.ndarray:
        return self._lower.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.full() @ x

    def total(self) -> float:
        strict = sparse.tril(self._lower, k=-1)
        return float(self._lower.sum() + strict.sum())

    def export_coordinate_text(self) -> str:
        coo = self._lower.tocoo()
        lines = [f"{self.order} {coo.nnz}"]
        lines += [
            f"{i + 1} {j + 1} {float(v)!r}"
            for i, j, v in zip(coo.row, coo.col, coo.data)
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class OperatorPair:
    """Assembled stiffness K and mass M over one mesh."""

    K: SymmetricSparse
    M: SymmetricSparse
    mass_mode: str
    mesh: SimplicialMesh

    @property
    def order(self) -> int:
        return self.K.order


def _check_degenerate(mesh: SimplicialMesh, measures: np.ndarray, h_max: float):
    floor = DEGENERATE_REL_TOL * h_max**mesh.dim
    bad = np.nonzero(measures < floor)[0]
    if bad.size:
        raise AssemblyError(
            f"degenerate simplex {int(bad[0])}: measure {measures[bad[0]]:.3e} "
            f"below floor {floor:.3e}"
        )


def assemble_stiffness(mesh: SimplicialMesh) -> SymmetricSparse:
    """Stiffness matrix of the positive Laplacian (Dirichlet energy form)."""
    v = mesh.vertices
    s = mesh.simplices
    measures = simplex_measures(mesh)
    if mesh.dim == 1:
        _check_degenerate(mesh, measures, float(measures.max()))
        w = 1.0 / measures
        i0, i1 = s[:, 0], s[:, 1]
        rows = np.concatenate([i0, i1, i0, i1])
        cols = np.concatenate([i0, i1, i1, i0])
        vals = np.concatenate([w, w, -w, -w])
        return SymmetricSparse.from_coo(rows, cols, vals, mesh.n_vertices)

    edges = np.linalg.norm(v[s[:, 1]] - v[s[:, 0]], axis=1)
    _check_degenerate(mesh, measures, float(edges.max()))
    t0, t1, t2 = s[:, 0], s[:, 1], s[:, 2]
    # cot(angle at vertex k) = (u . w) / (2 * area) for the edge opposite k
    e01 = v[t1] - v[t0]
    e12 = v[t2] - v[t1]
    e20 = v[t0] - v[t2]
    area4 = 4.0 * measures
    cot0 = -(e01 * e20).sum(1) / area4 * 2.0  # angle at t0 between e01 and -e20
    cot1 = -(e12 * e01).sum(1) / area4 * 2.0
    cot2 = -(e20 * e12).sum(1) / area4 * 2.0
    # off-diagonal weight for edge (j,k) is -cot(angle at opposite vertex)/2
    w12, w20, w01 = 0.5 * cot0, 0.5 * cot1, 0.5 * cot2
    rows = np.concatenate([t1, t2, t2, t0, t0, t1, t0, t1, t2])
    cols = np.concatenate([t2, t1, t0, t2, t1, t0, t0, t1, t2])
    vals = np.concatenate(
        [-w12, -w12, -w20, -w20, -w01, -w01, w01 + w20, w12 + w01, w20 + w12]
    )
    return SymmetricSparse.from_coo(rows, cols, vals, mesh.n_vertices)


def assemble_mass(mesh: SimplicialMesh, mode: str = CONSISTENT) -> SymmetricSparse:
    """Mass matrix: consistent element blocks, or their row-sum lumping."""
    if mode not in (CONSISTENT, LUMPED):
        raise AssemblyError(f"unknown mass mode {mode!r}")
    s = mesh.simplices
    measures = simplex_measures(mesh)
    n = mesh.n_vertices
    if mode == LUMPED:
        # row-sum lumping: each simplex spreads its measure evenly
        share = measures / (mesh.dim + 1)
        diag = np.zeros(n)
        for k in range(mesh.dim + 1):
            np.add.at(diag, s[:, k], share)
        idx = np.arange(n)
        return SymmetricSparse.from_coo(idx, idx, diag, n)
    if mesh.dim == 1:
        off = measures / 6.0
        dia = measures / 3.0
        i0, i1 = s[:, 0], s[:, 1]
        rows = np.concatenate([i0, i1, i0, i1])
        cols = np.concatenate([i0, i1, i1, i0])
        vals = np.concatenate([dia, dia, off, off])
        return SymmetricSparse.from_coo(rows, cols, vals, n)
    off = measures / 12.0
    dia = measures / 6.0
    t0, t1, t2 = s[:, 0], s[:, 1], s[:, 2]
    rows = np.concatenate([t0, t1, t2, t0, t1, t1, t2, t2, t0])
    cols = np.concatenate([t0, t1, t2, t1, t0, t2, t1, t0, t2])
    vals = np.concatenate([dia, dia, dia, off, off, off, off, off, off])
    return SymmetricSparse.from_coo(rows, cols, vals, n)


def build_operators(mesh: SimplicialMesh, mass_mode: str = CONSISTENT) -> OperatorPair:
    return OperatorPair(
        K=assemble_stiffness(mesh),
        M=assemble_mass(mesh, mass_mode),
        mass_mode=mass_mode,
        mesh=mesh,
    )


def coordinate_vectors(mesh: SimplicialMesh) -> list[np.ndarray]:
    """The n+2 ambient coordinate functions sampled at the vertices."""
    return [np.ascontiguousarray(mesh.vertices[:, i]) for i in range(mesh.ambient_dim)]
