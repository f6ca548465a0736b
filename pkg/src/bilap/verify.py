"""Verification harness: evaluates the eigenvalue identities on exact and
numeric spectra, runs refinement studies, and assembles structured reports.

Check naming convention: "first_*_eigenvalue" for the three first-eigenvalue
identities, "eigenvalue_square_bound_k*" / "eigenvalue_order_bound_k*" for
the per-index variational inequalities, "lower_bound_*" for the embedded
lower bounds, "coordinate_identity_residual" for the discrete residual of
the coordinate-function eigenvalue identity.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import analytic
from .analytic import BILAPLACE, BUCKLING, Spectrum, derived_spectrum, laplace_spectrum
from .eigensolve import EigenResult, bilaplace_eigs, buckling_eigs, laplace_eigs
from .geometry import HypersurfaceSpec, describe, is_minimal
from .meshing import SimplicialMesh
from .operators import OperatorPair, build_operators, coordinate_vectors
from .report import Check, ConvergenceRecord, VerificationReport


class VerifyError(ValueError):
    """Mismatched inputs to a check."""


def _indexed_values(obj):
    # Eigenvalues as an index->value list, exact for analytic spectra.
    if isinstance(obj, Spectrum):
        return obj.values_with_multiplicity()
    if isinstance(obj, EigenResult):
        return [float(v) for v in obj.values]
    raise VerifyError(f"cannot read eigenvalues from {type(obj).__name__}")


def check_lemma(laplace, bilap, buck, slack=0) -> list[Check]:
    """Per-index variational bounds between the three spectra.

    Asserts Lam_k >= lam_k^2 - tol_k and Gam_k >= lam_k - tol_k for every
    index present in all inputs, with tol_k = slack * (1 + expected value):
    the unit floor keeps numerically-zero modes (which are pure roundoff)
    from tripping the bound.  Slack is zero on the exact path, where
    equality holds and the comparison is rational.
    """
    if slack < 0:
        raise VerifyError("slack must be nonnegative")
    lam = _indexed_values(laplace)
    big = _indexed_values(bilap)
    gam = _indexed_values(buck)
    k_max = min(len(lam), len(big), len(gam))
    if k_max == 0:
        raise VerifyError("no common indices between the three spectra")
    checks = []
    for k in range(k_max):
        sq = lam[k] * lam[k]
        tol_sq = slack * (1 + sq)
        tol_lin = slack * (1 + lam[k])
        checks.append(
            Check(
                name=f"eigenvalue_square_bound_k{k}",
                claim="Lambda_k >= lambda_k^2",
                measured=big[k],
                expected=sq,
                tolerance=tol_sq,
                passed=bool(big[k] >= sq - tol_sq),
                kind="lower_bound",
            )
        )
        checks.append(
            Check(
                name=f"eigenvalue_order_bound_k{k}",
                claim="Gamma_k >= lambda_k",
                measured=gam[k],
                expected=lam[k],
                tolerance=tol_lin,
                passed=bool(gam[k] >= lam[k] - tol_lin),
                kind="lower_bound",
            )
        )
    return checks


def check_theorem(spec: HypersurfaceSpec, lam1, bil1, buck1, rel_tolerance=0) -> list[Check]:
    """First-eigenvalue identities lam1 = n, Lam1 = n^2, Gam1 = n.

    `rel_tolerance` is relative to each expected value: zero means exact
    rational comparison.  On non-minimal subjects the identities are still
    evaluated and the entries are marked as expected hypothesis violations.
    """
    minimal = is_minimal(spec)
    n = spec.n
    exact = rel_tolerance == 0 and all(
        isinstance(v, (Fraction, int)) for v in (lam1, bil1, buck1)
    )
    rows = [
        ("first_laplace_eigenvalue", "lambda1 == n", lam1, Fraction(n) if exact else float(n)),
        ("first_bilaplace_eigenvalue", "Lambda1 == n^2", bil1, Fraction(n * n) if exact else float(n * n)),
        ("first_buckling_eigenvalue", "Gamma1 == n", buck1, Fraction(n) if exact else float(n)),
    ]
    checks = []
    for name, claim, measured, expected in rows:
        if exact:
            tol = Fraction(0)
            ok = measured == expected
        else:
            tol = rel_tolerance * float(expected)
            ok = abs(float(measured) - float(expected)) <= tol
        checks.append(
            Check(
                name=name,
                claim=claim,
                measured=measured,
                expected=expected,
                tolerance=tol,
                passed=bool(ok),
                expected_failure=not minimal,
            )
        )
    return checks


def check_choi_wang(bil1, buck1, n: int, slack=0.0) -> list[Check]:
    """Embedded-minimal lower bounds Lam1 >= n^2/4 and Gam1 >= n/2."""
    bound_b = n * n / 4.0
    bound_g = n / 2.0
    return [
        Check(
            name="lower_bound_quarter_square",
            claim="Lambda1 >= n^2/4",
            measured=float(bil1),
            expected=bound_b,
            tolerance=slack * bound_b,
            passed=bool(float(bil1) >= bound_b * (1.0 - slack)),
            kind="lower_bound",
        ),
        Check(
            name="lower_bound_half_order",
            claim="Gamma1 >= n/2",
            measured=float(buck1),
            expected=bound_g,
            tolerance=slack * bound_g,
            passed=bool(float(buck1) >= bound_g * (1.0 - slack)),
            kind="lower_bound",
        ),
    ]


def takahashi_residual(ops: OperatorPair, n: int) -> float:
    """Worst relative strong residual of K x_i = n M x_i over coordinates x_i.

    Norms are taken in the inverse of the row-sum-lumped mass.  Pointwise
    consistency of the cotangent Laplacian is only first order on irregular
    triangulations, so this measure decays at O(h) on the icosphere and at
    O(h^2) on the translation-invariant torus meshes; the variational
    counterpart `takahashi_quotient_gap` is second order on both and drives
    the refinement studies.  Identically-zero coordinates (padded ambient
    axes) satisfy the identity trivially and are skipped.
    """
    K = ops.K.full()
    M = ops.M.full()
    lump = np.asarray(M.sum(axis=1)).ravel()
    worst = 0.0
    for x in coordinate_vectors(ops.mesh):
        mx = n * (M @ x)
        den = math.sqrt(float(mx @ (mx / lump)))
        if den == 0.0:
            continue
        r = K @ x - mx
        num = math.sqrt(float(r @ (r / lump)))
        worst = max(worst, num / den)
    return worst


def takahashi_quotient_gap(ops: OperatorPair, n: int) -> float:
    """Worst relative gap |x_i' K x_i / x_i' M x_i - n| / n over coordinates.

    The identity K x = n M x tested variationally against x itself; this is
    the residual measure whose refinement decay matches the O(h^2) FEM
    eigenvalue error on every closed catalog mesh.
    """
    K = ops.K.full()
    M = ops.M.full()
    worst = 0.0
    for x in coordinate_vectors(ops.mesh):
        mass = float(x @ (M @ x))
        if mass == 0.0:
            continue
        quotient = float(x @ (K @ x)) / mass
        worst = max(worst, abs(quotient - n) / n)
    return worst


# ---------------------------------------------------------------------------
# refinement studies

QUANTITIES = (
    "lambda1",
    "bilap1_square",
    "bilap1_mixed",
    "gamma1",
    "takahashi",
    "takahashi_strong",
)


def _study_value(mesh: SimplicialMesh, quantity: str, count: int, tol: float, mode: str) -> float:
    if quantity == "lambda1":
        ops = build_operators(mesh, "consistent")
        return float(laplace_eigs(ops, count, tol=tol, mode=mode).values[1])
    if quantity == "bilap1_square":
        ops = build_operators(mesh, "lumped")
        return float(
            bilaplace_eigs(ops, count, tol=tol, sub_method="operator_square", mode=mode).values[1]
        )
    if quantity == "bilap1_mixed":
        ops = build_operators(mesh, "consistent")
        return float(
            bilaplace_eigs(ops, count, tol=tol, sub_method="mixed", mode=mode).values[1]
        )
    if quantity == "gamma1":
        ops = build_operators(mesh, "lumped")
        return float(buckling_eigs(ops, count, tol=tol, mode=mode).values[1])
    if quantity in ("takahashi", "takahashi_strong"):
        # consistent mass keeps the residual at O(h^2) instead of the exact
        # lumped identity some homogeneous meshes satisfy
        ops = build_operators(mesh, "consistent")
        if quantity == "takahashi":
            return takahashi_quotient_gap(ops, mesh.spec.n)
        return takahashi_residual(ops, mesh.spec.n)
    raise VerifyError(f"unknown study quantity {quantity!r} (choose from {QUANTITIES})")


def convergence_study(
    mesh_factory,
    levels,
    quantity: str,
    count: int = 6,
    tol: float = 1e-9,
    mode: str = "auto",
) -> ConvergenceRecord:
    """Evaluate `quantity` on mesh_factory(level) for >= 3 halving levels.

    Richardson extrapolation assumes order 2 (the conforming-P1 rate); the
    empirical rate is the mean log2-ratio of successive errors against the
    extrapolated value.  A non-decreasing error sequence marks the study
    unreliable instead of failing it.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise VerifyError(f"need at least 3 levels, got {len(levels)}")
    values = [_study_value(mesh_factory(level), quantity, count, tol, mode) for level in levels]

    if quantity.startswith("takahashi"):
        extrapolated = 0.0
    else:
        extrapolated = values[-1] + (values[-1] - values[-2]) / 3.0
    errors = [abs(v - extrapolated) for v in values]
    rates = []
    reliable = True
    for e0, e1 in zip(errors, errors[1:]):
        if e1 <= 0 or e0 <= e1:
            reliable = False
            continue
        rates.append(math.log2(e0 / e1))
    estimated_rate = float(np.mean(rates)) if rates else float("nan")
    return ConvergenceRecord(
        quantity=quantity,
        levels=tuple(int(l) for l in levels),
        values=tuple(values),
        estimated_rate=estimated_rate,
        extrapolated=float(extrapolated),
        reliable=reliable,
    )


# ---------------------------------------------------------------------------
# report assembly for whole subjects


def analytic_report(spec: HypersurfaceSpec, cutoff=None) -> VerificationReport:
    """Exact-path report: theorem identities, per-index bounds, lower bounds."""
    if cutoff is None:
        cutoff = 4 * spec.n
    report = VerificationReport(subject=f"{describe(spec)} analytic")
    report.extend(analytic.verify_theorem(spec))
    lam = laplace_spectrum(spec, cutoff)
    report.extend(
        check_lemma(lam, derived_spectrum(lam, BILAPLACE), derived_spectrum(lam, BUCKLING), slack=0)
    )
    if is_minimal(spec):
        lam1 = lam.first_nonzero()
        report.extend(check_choi_wang(lam1 * lam1, lam1, spec.n))
    return report


def numeric_report(
    spec: HypersurfaceSpec,
    mesh: SimplicialMesh,
    count: int = 8,
    eig_tol: float = 1e-9,
    tolerance: float = 0.01,
    slack: float = 1e-6,
    mode: str = "auto",
) -> VerificationReport:
    """FEM-path report on one mesh of the subject.

    The continuum identities are checked at `tolerance`; the algebraic
    identities between the three discrete problems at `slack`.  The
    residual of the coordinate identity is reported against `tolerance`
    (it exceeds it by an order of magnitude on non-minimal controls).
    """
    n = spec.n
    minimal = is_minimal(spec)
    subject = f"{describe(spec)} mesh[{mesh.n_vertices} vertices]"
    report = VerificationReport(subject=subject)

    ops_c = build_operators(mesh, "consistent")
    ops_l = build_operators(mesh, "lumped")
    lap_c = laplace_eigs(ops_c, count, tol=eig_tol, mode=mode)
    lap_l = laplace_eigs(ops_l, count, tol=eig_tol, mode=mode)
    bil_l = bilaplace_eigs(ops_l, count, tol=eig_tol, sub_method="operator_square", mode=mode)
    buck_l = buckling_eigs(ops_l, count, tol=eig_tol, mode=mode)

    report.extend(
        check_theorem(
            spec,
            float(lap_c.values[1]),
            float(bil_l.values[1]),
            float(buck_l.values[1]),
            rel_tolerance=tolerance,
        )
    )
    report.extend(check_lemma(lap_l, bil_l, buck_l, slack=slack))
    if minimal:
        report.extend(
            check_choi_wang(float(bil_l.values[1]), float(buck_l.values[1]), n)
        )
    gap = takahashi_quotient_gap(ops_c, n)
    report.checks.append(
        Check(
            name="coordinate_identity_residual",
            claim="K x_i ~ n M x_i on minimal subjects",
            measured=gap,
            expected=0.0,
            tolerance=tolerance,
            passed=bool(gap <= tolerance),
            expected_failure=not minimal,
        )
    )
    return report


def minimal_catalog(n_max: int):
    """Every minimal catalog spec with n <= n_max (great spheres + products)."""
    from .geometry import make_clifford, make_great_sphere

    specs = []
    for n in range(1, n_max + 1):
        specs.append(make_great_sphere(n))
        for p in range(1, n):
            specs.append(make_clifford(p, n - p))
    return specs
