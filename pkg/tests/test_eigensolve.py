"""Eigensolver engines: dense oracle vs iterative path, discrete identities."""

import numpy as np
import pytest
from scipy import sparse

from bilap.eigensolve import (
    MIXED,
    OPERATOR_SQUARE,
    SolverError,
    bilaplace_eigs,
    buckling_eigs,
    cluster_values,
    eigenresult_to_json,
    laplace_eigs,
    operator_square_matrix,
    solve_gen_sym,
    write_vectors,
)
from bilap.meshing import mesh_circle, mesh_clifford_torus, mesh_great_sphere2
from bilap.operators import build_operators


def random_spd_pencil(rng, n):
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    A = a @ a.T + 0.5 * n * np.eye(n)
    B = b @ b.T + 0.5 * n * np.eye(n)
    return sparse.csr_matrix(A), sparse.csr_matrix(B)


def test_diag_pencil():
    A = sparse.diags([1.0, 2.0, 3.0]).tocsr()
    B = sparse.identity(3, format="csr")
    r = solve_gen_sym(A, B, 2, mode="dense")
    np.testing.assert_allclose(r.values, [1.0, 2.0])


def test_count_over_order_rejected():
    A = sparse.identity(4, format="csr")
    with pytest.raises(SolverError):
        solve_gen_sym(A, A, 5)


def test_dense_order_cap():
    A = sparse.identity(3001, format="csr")
    with pytest.raises(SolverError, match="dense cap"):
        solve_gen_sym(A, A, 2, mode="dense")


def test_dense_vs_iterative_random_pencils():
    rng = np.random.default_rng(2024)
    for trial in range(8):
        n = int(rng.integers(30, 120))
        A, B = random_spd_pencil(rng, n)
        k = int(rng.integers(2, 7))
        dense = solve_gen_sym(A, B, k, mode="dense")
        it = solve_gen_sym(A, B, k, mode="iterative", tol=1e-10)
        np.testing.assert_allclose(it.values, dense.values, rtol=1e-8)


def test_iterative_deterministic():
    mesh = mesh_clifford_torus(12)
    ops = build_operators(mesh, "consistent")
    a = laplace_eigs(ops, 6, tol=1e-10, mode="iterative")
    b = laplace_eigs(ops, 6, tol=1e-10, mode="iterative")
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_circle_laplace():
    ops = build_operators(mesh_circle(64), "consistent")
    r = laplace_eigs(ops, 5, tol=1e-10)
    assert r.values[0] <= 1e-9 * r.values[1]
    assert r.values[1] == pytest.approx(1.0, rel=5e-3)  # first circle eigenvalue
    assert r.values[2] == pytest.approx(r.values[1], rel=1e-10)  # cos/sin pair


def test_torus_laplace_cluster():
    ops = build_operators(mesh_clifford_torus(64), "consistent")
    r = laplace_eigs(ops, 8, tol=1e-9)
    assert r.values[1] == pytest.approx(2.0, rel=5e-3)
    clusters = cluster_values(r.values)
    assert clusters[0] == (pytest.approx(0.0, abs=1e-9), 1)
    assert clusters[1][1] == 4  # multiplicity of the first cluster


def test_residual_certificates():
    ops = build_operators(mesh_clifford_torus(24), "lumped")
    for r in (
        laplace_eigs(ops, 6, tol=1e-9),
        bilaplace_eigs(ops, 6, tol=1e-9, sub_method=OPERATOR_SQUARE),
        buckling_eigs(ops, 6, tol=1e-9),
    ):
        assert np.all(r.residuals <= 1e-9)
        assert np.all(np.diff(r.values) >= -1e-12)


def test_vectors_b_orthonormal():
    mesh = mesh_clifford_torus(16)
    ops = build_operators(mesh, "consistent")
    r = laplace_eigs(ops, 6, tol=1e-10)
    B = ops.M.full()
    gram = r.vectors.T @ (B @ r.vectors)
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-8)

    opsl = build_operators(mesh, "lumped")
    rb = buckling_eigs(opsl, 5, tol=1e-10)
    K = opsl.K.full()
    gram = rb.vectors[:, 1:].T @ (K @ rb.vectors[:, 1:])
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)


def test_operator_square_identity():
    # Lam_k == lam_k^2 exactly up to solver tolerance (same lumped pencil)
    for mesh in (mesh_clifford_torus(32), mesh_great_sphere2(3)):
        ops = build_operators(mesh, "lumped")
        lam = laplace_eigs(ops, 8, tol=1e-10).values
        big = bilaplace_eigs(ops, 8, tol=1e-10, sub_method=OPERATOR_SQUARE).values
        assert np.max(np.abs(big - lam**2) / (1.0 + lam**2)) <= 1e-9


def test_buckling_identity_and_bookkeeping():
    for mesh in (mesh_clifford_torus(32), mesh_great_sphere2(3)):
        ops = build_operators(mesh, "lumped")
        lam = laplace_eigs(ops, 8, tol=1e-10).values
        r = buckling_eigs(ops, 8, tol=1e-10)
        assert r.values[0] == 0.0
        const = r.vectors[:, 0]
        assert np.ptp(const) < 1e-12  # bookkeeping pair is the constants
        assert np.max(np.abs(r.values[1:] - lam[1:8]) / lam[1:8]) <= 1e-9


def test_bilaplace_zero_mode():
    ops = build_operators(mesh_clifford_torus(16), "lumped")
    r = bilaplace_eigs(ops, 4, tol=1e-9, sub_method=OPERATOR_SQUARE)
    assert abs(r.values[0]) <= 1e-9 * r.values[1]


def test_mode_errors():
    mesh = mesh_clifford_torus(8)
    ops_c = build_operators(mesh, "consistent")
    ops_l = build_operators(mesh, "lumped")
    with pytest.raises(SolverError, match="lumped"):
        bilaplace_eigs(ops_c, 4, sub_method=OPERATOR_SQUARE)
    with pytest.raises(SolverError, match="consistent"):
        bilaplace_eigs(ops_l, 4, sub_method=MIXED)
    with pytest.raises(SolverError, match="lumped"):
        buckling_eigs(ops_c, 4)
    with pytest.raises(SolverError):
        buckling_eigs(ops_l, 1)  # count must cover the bookkeeping pair
    with pytest.raises(SolverError, match="sub-method"):
        bilaplace_eigs(ops_l, 4, sub_method="nope")


def test_mixed_dense_vs_iterative():
    ops = build_operators(mesh_clifford_torus(16), "consistent")
    d = bilaplace_eigs(ops, 5, tol=1e-10, sub_method=MIXED, mode="dense")
    i = bilaplace_eigs(ops, 5, tol=1e-9, sub_method=MIXED, mode="iterative")
    np.testing.assert_allclose(i.values[1:], d.values[1:], rtol=1e-8)
    assert d.sub_method == MIXED


def test_mixed_and_square_converge_together():
    # two discretizations of the same continuum problem: both approach 4
    target = 4.0
    gap_prev = None
    for g in (16, 24, 32):
        mesh = mesh_clifford_torus(g)
        sq = bilaplace_eigs(build_operators(mesh, "lumped"), 3, tol=1e-10,
                            sub_method=OPERATOR_SQUARE).values[1]
        mx = bilaplace_eigs(build_operators(mesh, "consistent"), 3, tol=1e-10,
                            sub_method=MIXED).values[1]
        err = max(abs(sq - target), abs(mx - target))
        assert abs(sq - mx) <= 2.0 * err + 1e-9
        if gap_prev is not None:
            assert abs(sq - mx) <= gap_prev + 1e-12
        gap_prev = abs(sq - mx)
    assert mx == pytest.approx(target, rel=2e-2)


def test_rayleigh_quotient_variational_bound():
    # coordinate vectors give admissible trial functions: quotient >= first
    # nonzero eigenvalue of each derived problem
    mesh = mesh_clifford_torus(16)
    ops = build_operators(mesh, "lumped")
    A = operator_square_matrix(ops)
    M = ops.M.full()
    K = ops.K.full()
    big1 = bilaplace_eigs(ops, 3, tol=1e-10, sub_method=OPERATOR_SQUARE).values[1]
    gam1 = buckling_eigs(ops, 3, tol=1e-10).values[1]
    for x in mesh.vertices.T:
        if np.linalg.norm(x) == 0:
            continue
        q_b = float(x @ (A @ x)) / float(x @ (M @ x))
        q_g = float(x @ (A @ x)) / float(x @ (K @ x))
        assert q_b >= big1 - 1e-9
        assert q_g >= gam1 - 1e-9


def test_cluster_values():
    vals = np.array([0.0, 2.0, 2.0 + 1e-9, 2.0 + 2e-9, 4.0])
    cl = cluster_values(vals)
    assert [c[1] for c in cl] == [1, 3, 1]


def test_eigenresult_serialization(tmp_path):
    ops = build_operators(mesh_circle(16), "consistent")
    r = laplace_eigs(ops, 4, tol=1e-10)
    obj = eigenresult_to_json(r, vectors_file="vecs.bin")
    assert obj["count"] == 4 and obj["order"] == 16
    assert obj["problem"] == "laplace"
    path = tmp_path / "vecs.bin"
    write_vectors(r, path)
    raw = np.fromfile(path, dtype="<f8").reshape((16, 4), order="F")
    np.testing.assert_array_equal(raw, r.vectors)


def test_nonconvergence_carries_residuals():
    from bilap.eigensolve import NonConvergenceError, _certify

    with pytest.raises(NonConvergenceError) as err:
        _certify(np.array([1e-3]), 1e-9, "iterative")
    assert err.value.residuals[0] == 1e-3
