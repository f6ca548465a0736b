"""FEM assembly: stiffness/mass invariants, exact small cases, consistency."""

import math

import numpy as np
import pytest
from scipy import sparse

from bilap.meshing import (
    _freeze,
    mesh_circle,
    mesh_clifford_torus,
    mesh_great_sphere2,
    mesh_stats,
)
from bilap.operators import (
    AssemblyError,
    SymmetricSparse,
    assemble_mass,
    assemble_stiffness,
    build_operators,
    coordinate_vectors,
)


def test_circle4_stiffness_circulant():
    K = assemble_stiffness(mesh_circle(4)).full().toarray()
    ell = math.sqrt(2.0)
    expected = np.array(
        [
            [2, -1, 0, -1],
            [-1, 2, -1, 0],
            [0, -1, 2, -1],
            [-1, 0, -1, 2],
        ]
    ) / ell
    np.testing.assert_allclose(K, expected, atol=1e-14)


@pytest.mark.parametrize(
    "mesh", [mesh_circle(16), mesh_clifford_torus(8), mesh_great_sphere2(2)],
    ids=["circle", "torus", "icosphere"],
)
def test_stiffness_rowsums_vanish(mesh):
    K = assemble_stiffness(mesh).full()
    ones = np.ones(mesh.n_vertices)
    scale = abs(K).max()
    assert np.abs(K @ ones).max() <= 1e-10 * scale


def test_icosahedron_equal_cotangent_weights():
    # all faces equilateral: every off-diagonal weight equal
    K = assemble_stiffness(mesh_great_sphere2(0)).full().tocoo()
    off = [v for i, j, v in zip(K.row, K.col, K.data) if i != j]
    assert np.ptp(off) < 1e-14
    assert off[0] < 0


def test_stiffness_psd():
    mesh = mesh_clifford_torus(6)
    K = assemble_stiffness(mesh).full().toarray()
    vals = np.linalg.eigvalsh(K)
    assert vals[0] > -1e-12
    assert vals[1] > 1e-8  # kernel is exactly the constants


def test_mass_totals_circle6():
    for mode in ("consistent", "lumped"):
        M = assemble_mass(mesh_circle(6), mode)
        assert M.total() == pytest.approx(6.0, abs=1e-12)


@pytest.mark.parametrize(
    "mesh", [mesh_circle(16), mesh_clifford_torus(8), mesh_great_sphere2(1)],
    ids=["circle", "torus", "icosphere"],
)
def test_mass_total_equals_mesh_measure(mesh):
    area = mesh_stats(mesh)["total_measure"]
    mc = assemble_mass(mesh, "consistent")
    ml = assemble_mass(mesh, "lumped")
    assert mc.total() == pytest.approx(area, rel=1e-10)
    assert ml.total() == pytest.approx(area, rel=1e-10)
    assert np.all(ml.diagonal() > 0)
    # row-sum lumping preserves row sums
    rows = np.asarray(mc.full().sum(axis=1)).ravel()
    np.testing.assert_allclose(rows, ml.diagonal(), rtol=1e-12)


def test_mass_spd():
    M = assemble_mass(mesh_clifford_torus(5), "consistent").full().toarray()
    assert np.linalg.eigvalsh(M)[0] > 0


def test_coordinate_vectors_circle4():
    X = coordinate_vectors(mesh_circle(4))
    np.testing.assert_allclose(X[0], [1, 0, -1, 0], atol=1e-15)
    np.testing.assert_allclose(X[1], [0, 1, 0, -1], atol=1e-15)
    np.testing.assert_allclose(X[2], 0, atol=0)


@pytest.mark.parametrize(
    "mesh", [mesh_circle(8), mesh_clifford_torus(5), mesh_great_sphere2(1)],
    ids=["circle", "torus", "icosphere"],
)
def test_coordinates_partition_unit_norm(mesh):
    X = coordinate_vectors(mesh)
    total = sum(x * x for x in X)
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_great_sphere_padded_coordinate_is_zero():
    X = coordinate_vectors(mesh_great_sphere2(1))
    assert np.all(X[3] == 0.0)


def test_symmetric_sparse_exact_symmetry():
    K = assemble_stiffness(mesh_great_sphere2(1))
    full = K.full()
    diff = (full - full.T).tocoo()
    assert diff.nnz == 0 or np.abs(diff.data).max() == 0.0


def test_symmetric_sparse_rejects_nonsquare():
    with pytest.raises(AssemblyError):
        SymmetricSparse(sparse.csr_matrix(np.ones((2, 3))))


def test_coordinate_export_format():
    K = assemble_stiffness(mesh_circle(4))
    text = K.export_coordinate_text()
    lines = text.strip().splitlines()
    order, nnz = map(int, lines[0].split())
    assert order == 4 and nnz == len(lines) - 1
    i, j, v = lines[1].split()
    assert int(i) >= int(j) >= 1  # 1-based lower triangle
    # round-trip back into a matrix
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        a, b, c = line.split()
        rows.append(int(a) - 1)
        cols.append(int(b) - 1)
        vals.append(float(c))
    lower = sparse.coo_matrix((vals, (rows, cols)), shape=(order, order)).tocsr()
    rebuilt = SymmetricSparse(lower).full().toarray()
    np.testing.assert_array_equal(rebuilt, K.full().toarray())


def test_degenerate_triangle_raises_with_index():
    base = mesh_clifford_torus(4)
    verts = base.vertices.copy()
    tris = base.simplices.copy()
    verts[tris[5][1]] = verts[tris[5][0]]  # collapse an edge of simplex 5
    bad = _freeze(2, verts, tris, base.spec)
    with pytest.raises(AssemblyError, match="degenerate simplex"):
        assemble_stiffness(bad)


def test_torus_translation_invariance():
    # lattice shift by one grid row is a symmetry: P K P^T == K
    g = 6
    mesh = mesh_clifford_torus(g)
    K = assemble_stiffness(mesh).full().toarray()
    perm = np.array([((i // g + 1) % g) * g + (i % g) for i in range(g * g)])
    KP = K[np.ix_(perm, perm)]
    np.testing.assert_allclose(KP, K, atol=1e-12)


def test_dirichlet_energy_converges_at_second_order():
    # sampled eigenfunction cos(theta_1) on the flat torus: x'Kx -> 2 pi^2
    target = 2 * math.pi**2
    errors = []
    for g in (8, 16, 32):
        mesh = mesh_clifford_torus(g)
        K = assemble_stiffness(mesh).full()
        theta1 = 2 * np.pi * (np.arange(g * g) // g) / g
        x = np.cos(theta1)
        errors.append(abs(float(x @ (K @ x)) - target))
    rate1 = math.log2(errors[0] / errors[1])
    rate2 = math.log2(errors[1] / errors[2])
    assert 1.7 < rate1 < 2.3
    assert 1.8 < rate2 < 2.2


def test_build_operators_bundles():
    mesh = mesh_circle(8)
    ops = build_operators(mesh, "lumped")
    assert ops.mass_mode == "lumped"
    assert ops.order == 8
    assert ops.mesh is mesh
