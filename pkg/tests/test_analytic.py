"""Exact spectra against independent oracles (lattice enumeration, finite
differences, FEM cross-checks)."""

import json
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from bilap import analytic
from bilap.analytic import (
    BILAPLACE,
    BUCKLING,
    LAPLACE,
    Spectrum,
    SpectrumError,
    derived_spectrum,
    first_laplace_eigenvalue,
    laplace_spectrum,
    sphere_eigenvalue,
    sphere_multiplicity,
    spectrum_from_json,
    spectrum_to_csv,
    spectrum_to_json,
    verify_theorem,
)
from bilap.geometry import make_clifford, make_great_sphere, product_from_radius_squares


def lattice_oracle(r1sq: Fraction, r2sq: Fraction, cutoff: Fraction):
    """Brute-force signed-lattice enumeration for S^1(r1) x S^1(r2).

    Counts (a, b) in Z^2 with a^2/r1^2 + b^2/r2^2 <= cutoff; independent of
    the per-factor harmonic-multiplicity route used by laplace_spectrum.
    """
    bound_a = int((cutoff * r1sq) ** 0.5) + 2
    bound_b = int((cutoff * r2sq) ** 0.5) + 2
    acc = Counter()
    for a in range(-bound_a, bound_a + 1):
        va = Fraction(a * a) / r1sq
        if va > cutoff:
            continue
        for b in range(-bound_b, bound_b + 1):
            v = va + Fraction(b * b) / r2sq
            if v <= cutoff:
                acc[v] += 1
    return sorted(acc.items())


def circle_fd_eigenvalues(n_points: int) -> np.ndarray:
    """1-D periodic finite differences on S^1(1): independent circle oracle."""
    h = 2 * np.pi / n_points
    main = np.full(n_points, 2.0)
    mat = np.diag(main)
    for i in range(n_points):
        mat[i, (i + 1) % n_points] = -1.0
        mat[i, (i - 1) % n_points] = -1.0
    return np.sort(np.linalg.eigvalsh(mat / h**2))


def test_sphere_eigenvalue_constants():
    assert sphere_eigenvalue(2, 1.0, 0) == 0.0


def test_sphere_eigenvalue_circle_vs_finite_differences():
    # k = 3 on the unit circle: FD oracle converges to k^2 = 9
    fd = circle_fd_eigenvalues(2048)
    target = sphere_eigenvalue(1, 1.0, 3)
    assert target == 9.0
    near = fd[np.argmin(np.abs(fd - 9.0))]
    assert abs(near - 9.0) < 1e-3 * 9.0


def test_sphere_eigenvalue_s2_vs_fem():
    # k = 1 on S^2: FEM on the icosphere (module operators) is the oracle
    from bilap.eigensolve import cluster_values, laplace_eigs
    from bilap.meshing import mesh_great_sphere2
    from bilap.operators import build_operators

    ops = build_operators(mesh_great_sphere2(3), "consistent")
    res = laplace_eigs(ops, 5, tol=1e-10)
    assert sphere_eigenvalue(2, 1.0, 1) == 2.0
    assert res.values[1] == pytest.approx(2.0, rel=1e-2)
    clusters = cluster_values(res.values[1:4])
    assert clusters[0][1] == 3  # multiplicity of the linear harmonics


def test_sphere_multiplicity_table():
    assert [sphere_multiplicity(m, 0) for m in (1, 2, 5)] == [1, 1, 1]
    assert sphere_multiplicity(2, 1) == 3
    assert sphere_multiplicity(1, 5) == 2
    assert sphere_multiplicity(2, 2) == 5
    assert sphere_multiplicity(3, 2) == 9


def test_circle_multiplicity_vs_fd_oracle():
    fd = circle_fd_eigenvalues(4096)
    # count FD eigenvalues converging to 25 (k = 5 pair)
    close = np.sum(np.abs(fd - 25.0) < 0.1)
    assert close == sphere_multiplicity(1, 5) == 2


def test_clifford11_spectrum_frozen_from_lattice_oracle():
    # oracle-confirmed table: no eigenvalue 6, multiplicity 4 at 8
    s = laplace_spectrum(make_clifford(1, 1), 10)
    expected = [
        (Fraction(0), 1),
        (Fraction(2), 4),
        (Fraction(4), 4),
        (Fraction(8), 4),
        (Fraction(10), 8),
    ]
    assert list(s.entries) == expected
    assert lattice_oracle(Fraction(1, 2), Fraction(1, 2), Fraction(10)) == expected


@pytest.mark.parametrize(
    "r1sq_num,r1sq_den,cutoff",
    [(3, 10, 25), (1, 2, 40), (1, 4, 30), (2, 7, 18)],
)
def test_torus_spectrum_matches_lattice_oracle(r1sq_num, r1sq_den, cutoff):
    r1sq = Fraction(r1sq_num, r1sq_den)
    spec = product_from_radius_squares(1, 1, r1sq, 1 - r1sq)
    s = laplace_spectrum(spec, cutoff)
    assert list(s.entries) == lattice_oracle(r1sq, 1 - r1sq, Fraction(cutoff))


def test_clifford_first_nonzero_is_n():
    for n in range(2, 13):
        for p in range(1, n):
            s = laplace_spectrum(make_clifford(p, n - p), n + 1)
            assert s.first_nonzero() == n


def test_great_sphere2_spectrum():
    s = laplace_spectrum(make_great_sphere(2), 6)
    assert list(s.entries) == [(Fraction(0), 1), (Fraction(2), 3), (Fraction(6), 5)]


def test_cutoff_must_be_positive():
    with pytest.raises(SpectrumError):
        laplace_spectrum(make_great_sphere(2), 0)


def test_derived_bilaplace_and_buckling():
    base = Spectrum(LAPLACE, ((Fraction(0), 1), (Fraction(2), 4)), Fraction(3))
    bil = derived_spectrum(base, BILAPLACE)
    assert list(bil.entries) == [(Fraction(0), 1), (Fraction(4), 4)]
    assert bil.cutoff == 9
    buck = derived_spectrum(base, BUCKLING)
    assert list(buck.entries) == [(Fraction(0), 1), (Fraction(2), 4)]


def test_derived_constants_only():
    base = Spectrum(LAPLACE, ((Fraction(0), 1),), Fraction(1))
    bil = derived_spectrum(base, BILAPLACE)
    assert list(bil.entries) == [(Fraction(0), 1)]


def test_derived_rejects_non_laplace_input():
    base = Spectrum(LAPLACE, ((Fraction(0), 1),), Fraction(1))
    bil = derived_spectrum(base, BILAPLACE)
    with pytest.raises(SpectrumError):
        derived_spectrum(bil, BUCKLING)


def test_verify_theorem_minimal():
    checks = verify_theorem(make_clifford(1, 1))
    assert [(c.name, c.passed) for c in checks] == [
        ("first_laplace_eigenvalue", True),
        ("first_bilaplace_eigenvalue", True),
        ("first_buckling_eigenvalue", True),
    ]
    assert [c.measured for c in checks] == [2, 4, 2]

    checks = verify_theorem(make_great_sphere(3))
    assert [c.measured for c in checks] == [3, 9, 3]
    assert all(c.passed for c in checks)


def test_verify_theorem_nonminimal_control():
    spec = product_from_radius_squares(1, 1, Fraction(3, 10), Fraction(7, 10))
    checks = verify_theorem(spec)
    assert first_laplace_eigenvalue(spec) == Fraction(10, 7)
    assert all(c.expected_failure for c in checks)
    assert not checks[0].passed  # 10/7 != 2
    assert checks[0].measured == Fraction(10, 7)


def test_squaring_monotonicity_exact():
    s = laplace_spectrum(make_clifford(2, 3), 20)
    bil = derived_spectrum(s, BILAPLACE)
    vals = [v for v, _ in bil.entries]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    for (lv, lm), (bv, bm) in zip(s.entries, bil.entries):
        assert bv == lv * lv and bm == lm


def test_factor_swap_symmetry():
    for p, q in [(1, 2), (2, 3), (1, 4)]:
        a = laplace_spectrum(make_clifford(p, q), 30)
        b = laplace_spectrum(make_clifford(q, p), 30)
        assert a.entries == b.entries


def test_weyl_prefix_stability():
    # raising the cutoff never changes already-emitted entries
    rng = np.random.default_rng(11)
    specs = [make_clifford(1, 1), make_clifford(2, 1), make_great_sphere(3),
             product_from_radius_squares(1, 1, Fraction(2, 7), Fraction(5, 7))]
    for spec in specs:
        cuts = sorted(rng.integers(5, 60, size=4))
        spectra = [laplace_spectrum(spec, int(c)) for c in cuts]
        for small, large in zip(spectra, spectra[1:]):
            assert large.entries[: len(small.entries)] == small.entries
            assert len(large.entries) >= len(small.entries)


def test_spectrum_json_round_trip():
    s = laplace_spectrum(make_clifford(2, 3), 15)
    back = spectrum_from_json(json.dumps(spectrum_to_json(s)))
    assert back == s


def test_spectrum_csv_shape():
    s = laplace_spectrum(make_great_sphere(2), 6)
    lines = spectrum_to_csv(s).strip().splitlines()
    assert lines[0] == "value,multiplicity"
    assert len(lines) == 1 + len(s.entries)
