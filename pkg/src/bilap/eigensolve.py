"""Generalized symmetric eigensolvers for the three discrete problems.

Laplace K v = lam M v, clamped bi-Laplace, and buckling are all solved as
symmetric pencils (A, B).  Two engines share one result contract:

* Dense: reduction to a standard symmetric problem (LAPACK `eigh`), used
  outright for small orders and as the oracle for the iterative path.
* Iterative: shift-invert Lanczos in the B-inner product with full
  reorthogonalization against the basis, converged (locked) vectors and
  the deflation space.  Starts from a fixed deterministic vector, so runs
  are reproducible bit-for-bit.

The bi-Laplacian is discretized from (K, M) only: OperatorSquare solves
(K M^-1 K) v = Lam M v with lumped mass (eigenvectors coincide with the
Laplace ones and Lam = lam^2 algebraically), while Mixed eliminates the
auxiliary variable w = Laplacian(u) through the consistent mass, giving an
independent discretization for cross-validation.  Buckling solves
(K M^-1 K) v = Gam K v with the constants deflated M-orthogonally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh, eigh_tridiagonal, null_space
from scipy.sparse.linalg import splu

from .analytic import BILAPLACE, BUCKLING, LAPLACE
from .operators import CONSISTENT, LUMPED, OperatorPair

DENSE_MAX_ORDER = 3000
ITERATIVE_MAX_ORDER = 300_000
AUTO_DENSE_THRESHOLD = 1200
MAX_RESTARTS = 500
OPERATOR_SQUARE = "operator_square"
MIXED = "mixed"

# Relative floor protecting the residual denominator ||Av|| + mu ||Bv||,
# which is pure roundoff for exact kernel pairs (see notes in README).
RESIDUAL_FLOOR = 1e-3


class SolverError(RuntimeError):
    """Invalid solver request (caps, incompatible modes, bad pencil)."""


class NonConvergenceError(SolverError):
    """Iteration cap hit; carries the best residuals reached."""

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = np.asarray(residuals)


@dataclass
class EigenResult:
    problem: str
    values: np.ndarray
    vectors: np.ndarray  # (order, count), columns B-orthonormal
    residuals: np.ndarray
    method: str  # "dense" | "iterative"
    sub_method: str | None = None

    @property
    def count(self) -> int:
        return self.values.shape[0]


def _as_operator(mat):
    if sparse.issparse(mat):
        csr = mat.tocsr()
        return csr, (lambda x: csr @ x)
    arr = np.asarray(mat, dtype=float)
    return arr, (lambda x: arr @ x)


def _norm_scale(matvec, order):
    # Cheap operator-scale estimate from one generic matvec.
    v = _start_vector(order)
    return float(np.linalg.norm(matvec(v)) / np.linalg.norm(v)) * 4.0 + 1e-300


def _start_vector(order: int) -> np.ndarray:
    # Fixed, symmetry-breaking start: deterministic, seed-free.
    i = np.arange(order, dtype=float)
    return np.cos(0.73 * i + 0.3) + 0.25 * np.sin(0.137 * i + 1.1) + 1.0 / (i + 3.0)


def residual_norms(a_matvec, b_matvec, values, vectors, a_scale=None, b_scale=None):
    """Relative residuals ||Av - mu Bv|| / (||Av|| + mu ||Bv||) per pair.

    A roundoff floor tied to the operator scales keeps the ratio meaningful
    for exact kernel pairs, where numerator and denominator are both noise.
    """
    order = vectors.shape[0]
    if a_scale is None:
        a_scale = _norm_scale(a_matvec, order)
    if b_scale is None:
        b_scale = _norm_scale(b_matvec, order)
    out = np.empty(len(values))
    for k, mu in enumerate(values):
        x = vectors[:, k]
        ax = a_matvec(x)
        bx = b_matvec(x)
        num = np.linalg.norm(ax - mu * bx)
        denom = np.linalg.norm(ax) + abs(mu) * np.linalg.norm(bx)
        floor = RESIDUAL_FLOOR * (a_scale + abs(mu) * b_scale) * np.linalg.norm(x)
        out[k] = num / max(denom, floor)
    return out


def cluster_values(values, rtol: float = 1e-6):
    """Group near-equal eigenvalues: list of (mean value, multiplicity).

    Two consecutive values belong to one cluster when they differ by at
    most rtol * (1 + |value|); used when comparing discrete spectra against
    analytic multiplicities.
    """
    values = np.asarray(values, dtype=float)
    clusters = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > rtol * (1.0 + abs(values[k - 1])):
            group = values[start:k]
            clusters.append((float(group.mean()), int(group.size)))
            start = k
    return clusters


# ---------------------------------------------------------------------------
# dense engine


def _dense_smallest(a_dense, b_dense, count, deflate=None, weight=None):
    order = a_dense.shape[0]
    if deflate is None:
        try:
            vals, vecs = eigh(a_dense, b_dense, subset_by_index=[0, count - 1])
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"dense reduction failed: {exc}") from exc
        return vals, vecs
    d = np.atleast_2d(np.asarray(deflate, dtype=float))
    if d.shape[0] == order:
        d = d.T  # rows of constraints
    w_rows = d @ weight if weight is not None else d
    basis = null_space(w_rows)  # Euclidean-orthonormal basis of the complement
    ar = basis.T @ a_dense @ basis
    br = basis.T @ b_dense @ basis
    vals, vecs = eigh(ar, br, subset_by_index=[0, count - 1])
    return vals, basis @ vecs


# ---------------------------------------------------------------------------
# iterative engine: shift-invert Lanczos, B-inner product, full reorth


def _b_orthonormalize(x, b_matvec, locked, locked_b):
    # Two-pass Gram-Schmidt against locked vectors, then B-normalize.
    for _ in range(2):
        for q, bq in zip(locked, locked_b):
            x = x - q * float(bq @ x)
    bx = b_matvec(x)
    nb = np.sqrt(max(float(x @ bx), 0.0))
    if nb == 0.0:
        return None, None
    return x / nb, bx / nb


def _lanczos_smallest(
    order,
    a_matvec,
    b_matvec,
    shifted_solve,
    sigma,
    count,
    tol,
    project=None,
    n_deflated=0,
    max_basis=None,
):
    """Smallest `count` eigenpairs of (A, B) via OP = (A - sigma B)^-1 B.

    Lanczos runs in the B-inner product with full reorthogonalization; the
    optional `project` keeps every iterate in the deflated subspace.
    Converged Ritz pairs are locked (explicitly deflated); each restart then
    digs out the smallest eigenvalue remaining in the locked-orthogonal
    complement, which recovers degenerate copies a single Krylov space
    cannot see.  The run finishes only when a restart locks a value strictly
    above the current count-th smallest, certifying the window is complete.
    Failure within the restart cap is an error carrying the best residuals.
    """
    effective = order - n_deflated
    if count > effective:
        raise SolverError(f"requested {count} pairs from pencil of rank {effective}")
    if max_basis is None:
        max_basis = min(effective, max(4 * count + 40, 60))
    proj = project if project is not None else (lambda x: x)
    a_scale = _norm_scale(a_matvec, order)
    b_scale = _norm_scale(b_matvec, order)

    locked: list[np.ndarray] = []
    locked_b: list[np.ndarray] = []
    locked_vals: list[float] = []
    best_residuals = np.full(count, np.inf)
    seed_salt = 0

    def fresh_seed():
        nonlocal seed_salt
        seed_salt += 1
        i = np.arange(order, dtype=float)
        return proj(np.cos(0.41 * i + 0.17 * seed_salt) + 0.3 * np.sin(0.091 * i))

    def finish():
        idx = np.argsort(locked_vals)[:count]
        vals = np.array([locked_vals[k] for k in idx])
        vecs = np.column_stack([locked[k] for k in idx])
        res = residual_norms(a_matvec, b_matvec, vals, vecs, a_scale, b_scale)
        return vals, vecs, res

    def window_boundary():
        return sorted(locked_vals)[count - 1]

    v_next = proj(_start_vector(order))

    for _restart in range(MAX_RESTARTS):
        q, bq = _b_orthonormalize(v_next, b_matvec, locked, locked_b)
        attempts = 0
        while q is None and attempts < 4:
            q, bq = _b_orthonormalize(fresh_seed(), b_matvec, locked, locked_b)
            attempts += 1
        if q is None:
            # nothing left outside the locked space
            if len(locked) >= count:
                return finish()
            raise SolverError("pencil rank exhausted before requested count")
        basis = [q]
        basis_b = [bq]
        alphas: list[float] = []
        betas: list[float] = []

        locked_this = []
        next_direction = None
        for j in range(max_basis):
            r = proj(shifted_solve(basis_b[j]))
            alpha = float(basis_b[j] @ r)
            alphas.append(alpha)
            # three-term recurrence then full reorthogonalization (two passes)
            r = r - alpha * basis[j]
            if j > 0:
                r = r - betas[j - 1] * basis[j - 1]
            for _ in range(2):
                for qv, bqv in zip(basis, basis_b):
                    r = r - qv * float(bqv @ r)
                for qv, bqv in zip(locked, locked_b):
                    r = r - qv * float(bqv @ r)
            br = b_matvec(r)
            beta = np.sqrt(max(float(r @ br), 0.0))

            grown = len(basis)
            breakdown = beta <= 1e-13
            if grown % 5 == 0 or grown == max_basis or breakdown:
                theta, y = eigh_tridiagonal(np.array(alphas), np.array(betas))
                with np.errstate(divide="ignore"):
                    lam = sigma + 1.0 / theta
                lam[theta == 0.0] = np.inf
                order_idx = np.argsort(lam)
                q_mat = np.column_stack(basis)
                ritz_vals = lam[order_idx]
                ritz_vecs = q_mat @ y[:, order_idx]
                # the +1 candidate lets a completed window be certified
                need = max(count - len(locked), 0) + 1
                cand_vals = ritz_vals[:need]
                cand_vecs = ritz_vecs[:, :need]
                res = residual_norms(
                    a_matvec, b_matvec, cand_vals, cand_vecs, a_scale, b_scale
                )
                merged = np.sort(np.concatenate([np.zeros(len(locked)), res]))[:count]
                best_residuals = np.minimum(best_residuals, merged)
                n_lock = 0
                while n_lock < len(cand_vals) and res[n_lock] <= tol:
                    n_lock += 1
                for k in range(n_lock):
                    xq, xbq = _b_orthonormalize(
                        cand_vecs[:, k], b_matvec, locked, locked_b
                    )
                    if xq is None:
                        continue
                    locked.append(xq)
                    locked_b.append(xbq)
                    locked_vals.append(float(cand_vals[k]))
                    locked_this.append(float(cand_vals[k]))
                if len(locked) >= count and locked_this:
                    # window complete once this restart's smallest new value
                    # clears the boundary (no hidden copies can remain below)
                    win = window_boundary()
                    if min(locked_this) > win + 1e-6 * (1.0 + abs(win)):
                        return finish()
                if n_lock:
                    if n_lock < ritz_vecs.shape[1]:
                        next_direction = ritz_vecs[:, n_lock]
                    break  # restart against the enlarged lock set

            if breakdown:
                # invariant subspace exhausted; reseed inside this basis
                rq, rbq = _b_orthonormalize(
                    fresh_seed(), b_matvec, locked + basis, locked_b + basis_b
                )
                if rq is None:
                    break
                betas.append(0.0)
                basis.append(rq)
                basis_b.append(rbq)
                continue
            betas.append(beta)
            basis.append(r / beta)
            basis_b.append(br / beta)

        if next_direction is not None:
            v_next = proj(next_direction)
        else:
            v_next = fresh_seed()

    raise NonConvergenceError(
        f"no convergence to tol {tol} within {MAX_RESTARTS} restarts",
        best_residuals,
    )


# ---------------------------------------------------------------------------
# public engine


def _resolve_mode(mode, order):
    if mode == "auto":
        mode = "dense" if order <= AUTO_DENSE_THRESHOLD else "iterative"
    if mode == "dense" and order > DENSE_MAX_ORDER:
        raise SolverError(f"order {order} exceeds dense cap {DENSE_MAX_ORDER}")
    if mode == "iterative" and order > ITERATIVE_MAX_ORDER:
        raise SolverError(f"order {order} exceeds iterative cap {ITERATIVE_MAX_ORDER}")
    if mode not in ("dense", "iterative"):
        raise SolverError(f"unknown mode {mode!r}")
    return mode


def solve_gen_sym(A, B, count, tol=1e-9, mode="auto", sigma=-1.0) -> EigenResult:
    """Smallest `count` eigenpairs of A v = mu B v (A sym PSD, B sym PD).

    This is the generic engine; the singular-B buckling pencil goes through
    `buckling_eigs`, which supplies the deflation space.
    """
    A_mat, a_mv = _as_operator(A)
    B_mat, b_mv = _as_operator(B)
    order = A_mat.shape[0]
    if count < 1 or count > order:
        raise SolverError(f"count {count} out of range for order {order}")
    mode = _resolve_mode(mode, order)
    if mode == "dense":
        a_d = A_mat.toarray() if sparse.issparse(A_mat) else A_mat
        b_d = B_mat.toarray() if sparse.issparse(B_mat) else B_mat
        vals, vecs = _dense_smallest(a_d, b_d, count)
        res = residual_norms(a_mv, b_mv, vals, vecs)
    else:
        shifted = _sparse_shifted_solver(A_mat, B_mat, sigma)
        vals, vecs, res = _lanczos_smallest(
            order, a_mv, b_mv, shifted, sigma, count, tol
        )
    _certify(res, tol, mode)
    return EigenResult(
        problem="generic",
        values=vals,
        vectors=vecs,
        residuals=res,
        method=mode,
    )


def _certify(res, tol, method):
    # dense pairs are LAPACK-exact; certify them at a roundoff-level tol
    bound = max(tol, 1e-11) if method == "dense" else tol
    if np.any(res > bound):
        raise NonConvergenceError(
            f"residuals {res.max():.3e} exceed tolerance {bound:.1e}", res
        )


def _sparse_shifted_solver(A, B, sigma):
    F = (A - sigma * B).tocsc()
    lu = splu(F)
    return lambda x: lu.solve(x)


def laplace_eigs(ops: OperatorPair, count: int, tol: float = 1e-9, mode: str = "auto") -> EigenResult:
    """Smallest eigenpairs of K v = lam M v; first pair is the constants."""
    result = solve_gen_sym(ops.K.full(), ops.M.full(), count, tol=tol, mode=mode)
    result.problem = LAPLACE
    return result


def _lumped_inverse(ops: OperatorPair):
    diag = ops.M.diagonal()
    if np.any(diag <= 0):
        raise SolverError("lumped mass has nonpositive entries")
    return sparse.diags(1.0 / diag)


def operator_square_matrix(ops: OperatorPair) -> sparse.csr_matrix:
    """Explicit sparse K M^-1 K for lumped mass."""
    if ops.mass_mode != LUMPED:
        raise SolverError("operator-square path needs lumped mass (M^-1 dense otherwise)")
    K = ops.K.full()
    return (K @ _lumped_inverse(ops) @ K).tocsr()


def bilaplace_eigs(
    ops: OperatorPair,
    count: int,
    tol: float = 1e-9,
    sub_method: str = OPERATOR_SQUARE,
    mode: str = "auto",
) -> EigenResult:
    """Clamped-problem eigenpairs via operator-square or mixed discretization."""
    if sub_method == OPERATOR_SQUARE:
        A = operator_square_matrix(ops)
        result = solve_gen_sym(A, ops.M.full(), count, tol=tol, mode=mode)
        result.problem = BILAPLACE
        result.sub_method = OPERATOR_SQUARE
        return result
    if sub_method != MIXED:
        raise SolverError(f"unknown bi-Laplace sub-method {sub_method!r}")
    if ops.mass_mode != CONSISTENT:
        raise SolverError("mixed path eliminates w = Lap(u) through consistent mass")
    return _bilaplace_mixed(ops, count, tol, mode)


def _bilaplace_mixed(ops, count, tol, mode):
    K = ops.K.full()
    M = ops.M.full()
    order = K.shape[0]
    if count < 1 or count > order:
        raise SolverError(f"count {count} out of range for order {order}")
    mode = _resolve_mode(mode, order)
    m_lu = splu(M.tocsc())
    a_mv = lambda x: K @ m_lu.solve(K @ x)
    b_mv = lambda x: M @ x

    if mode == "dense":
        m_d = M.toarray()
        k_d = K.toarray()
        a_d = k_d @ np.linalg.solve(m_d, k_d)
        a_d = 0.5 * (a_d + a_d.T)
        vals, vecs = _dense_smallest(a_d, m_d, count)
        res = residual_norms(a_mv, b_mv, vals, vecs)
        _certify(res, tol, mode)
        return EigenResult(BILAPLACE, vals, vecs, res, mode, MIXED)

    # sigma = tau^2 with 0 < tau < lam_1 makes K M^-1 K - sigma M factorable
    # as (K - tau M) M^-1 (K + tau M), all factors sparse.
    probe = solve_gen_sym(K, M, min(2, order), tol=1e-6, mode="auto", sigma=-1.0)
    lam1 = float(probe.values[-1])
    if lam1 <= 0:
        raise SolverError("could not bracket the first Laplace eigenvalue")
    tau = 0.5 * lam1
    lu_minus = splu((K - tau * M).tocsc())
    lu_plus = splu((K + tau * M).tocsc())

    def shifted(x):
        return lu_plus.solve(M @ lu_minus.solve(x))

    vals, vecs, res = _lanczos_smallest(
        order, a_mv, b_mv, shifted, tau * tau, count, tol
    )
    _certify(res, tol, mode)
    return EigenResult(BILAPLACE, vals, vecs, res, mode, MIXED)


def buckling_eigs(ops: OperatorPair, count: int, tol: float = 1e-9, mode: str = "auto") -> EigenResult:
    """Buckling eigenpairs of (K M^-1 K) v = Gam K v, constants deflated.

    The leading returned pair is the bookkeeping (0, constants) entry
    matching the 0 = Gamma_0 indexing; it is M-normalized (its K-norm
    vanishes), the remaining pairs are K-orthonormal.
    """
    if ops.mass_mode != LUMPED:
        raise SolverError("buckling path needs lumped mass")
    if count < 2:
        raise SolverError("count includes the bookkeeping zero pair; need count >= 2")
    A = operator_square_matrix(ops)
    K = ops.K.full()
    order = K.shape[0]
    mode = _resolve_mode(mode, order)
    masses = ops.M.diagonal()
    ones = np.ones(order)
    w = masses  # M @ ones for lumped mass
    w_total = float(w.sum())

    def project(x):
        return x - ones * (float(w @ x) / w_total)

    a_mv = lambda x: A @ x
    b_mv = lambda x: K @ x
    n_nonzero = count - 1

    if mode == "dense":
        vals, vecs = _dense_smallest(
            A.toarray(), K.toarray(), n_nonzero, deflate=ones, weight=ops.M.full().toarray()
        )
        res = residual_norms(a_mv, b_mv, vals, vecs)
    else:
        sigma = -1.0
        F = (A - sigma * K).tocsr()
        # bordered factorization solves the singular shifted pencil on the
        # M-orthogonal complement of the constants
        H = sparse.bmat(
            [[F, w.reshape(-1, 1)], [w.reshape(1, -1), None]], format="csc"
        )
        lu = splu(H)
        rhs = np.empty(order + 1)

        def shifted(x):
            rhs[:order] = x
            rhs[order] = 0.0
            return lu.solve(rhs)[:order]

        vals, vecs, res = _lanczos_smallest(
            order, a_mv, b_mv, shifted, sigma, n_nonzero, tol,
            project=project, n_deflated=1,
        )
    _certify(res, tol, mode)
    const = ones / np.sqrt(w_total)  # M-normalized bookkeeping vector
    values = np.concatenate([[0.0], vals])
    vectors = np.column_stack([const, vecs])
    residuals = np.concatenate([[0.0], res])
    return EigenResult(BUCKLING, values, vectors, residuals, mode)


# ---------------------------------------------------------------------------
# serialization


def eigenresult_to_json(result: EigenResult, vectors_file: str | None = None) -> dict:
    return {
        "problem": result.problem,
        "method": result.method,
        "sub_method": result.sub_method,
        "order": int(result.vectors.shape[0]),
        "count": result.count,
        "values": [float(v) for v in result.values],
        "residuals": [float(r) for r in result.residuals],
        "vectors_file": vectors_file,
    }


def write_vectors(result: EigenResult, path) -> None:
    """Column-major little-endian float64 dump, order x count."""
    data = np.asfortranarray(result.vectors).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(data.tobytes(order="F"))
