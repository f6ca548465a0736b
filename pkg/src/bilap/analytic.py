"""Closed-form spectra of catalog hypersurfaces, in exact rational arithmetic.

Three eigenvalue problems share one spectrum type: the Laplacian (positive
sign convention, spectrum >= 0), its square (clamped problem), and the
buckling problem.  On a closed manifold every Laplace eigenpair (lam, u)
gives bi-Laplace value lam^2 and, for lam > 0, buckling value lam, so the
derived spectra are exact rearrangements of the Laplace one.

Squared radii of catalog factors are rationals, hence every eigenvalue
below is a `Fraction` and all multiplicity merging is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import GREAT_SPHERE, HypersurfaceSpec, is_minimal
from .report import Check

LAPLACE = "laplace"
BILAPLACE = "bilaplace"
BUCKLING = "buckling"

_PROBLEMS = (LAPLACE, BILAPLACE, BUCKLING)


class SpectrumError(ValueError):
    """Invalid spectrum request."""


@dataclass(frozen=True)
class Spectrum:
    """Sorted (eigenvalue, multiplicity) list, complete up to `cutoff`."""

    problem: str
    entries: tuple[tuple[Fraction, int], ...]
    cutoff: Fraction

    def __post_init__(self):
        if self.problem not in _PROBLEMS:
            raise SpectrumError(f"unknown problem {self.problem!r}")
        vals = [v for v, _ in self.entries]
        if any(v < 0 for v in vals):
            raise SpectrumError("eigenvalues must be nonnegative")
        if any(vals[i] >= vals[i + 1] for i in range(len(vals) - 1)):
            raise SpectrumError("entries must be strictly increasing")
        if any(m < 1 for _, m in self.entries):
            raise SpectrumError("multiplicities must be positive")

    def values_with_multiplicity(self) -> list[Fraction]:
        """Eigenvalues repeated per multiplicity (index k -> k-th eigenvalue)."""
        out = []
        for v, m in self.entries:
            out.extend([v] * m)
        return out

    def first_nonzero(self) -> Fraction:
        for v, _ in self.entries:
            if v > 0:
                return v
        raise SpectrumError("no nonzero eigenvalue below cutoff")


def sphere_eigenvalue(m: int, r: float, k: int) -> float:
    """k-th distinct Laplace eigenvalue of the round sphere S^m(r): k(k+m-1)/r^2."""
    if m < 1 or k < 0 or r <= 0:
        raise SpectrumError(f"invalid sphere parameters (m={m}, r={r}, k={k})")
    return k * (k + m - 1) / (r * r)


def sphere_multiplicity(m: int, k: int) -> int:
    """Dimension of the degree-k eigenspace on S^m.

    k = 0 gives the constants; on the circle every k >= 1 has the cos/sin
    pair; for m >= 2 the binomial difference counts degree-k harmonics.
    """
    if m < 1 or k < 0:
        raise SpectrumError(f"invalid sphere parameters (m={m}, k={k})")
    if k == 0:
        return 1
    if m == 1:
        return 2
    lower = math.comb(m + k - 2, k - 2) if k >= 2 else 0
    return math.comb(m + k, k) - lower


def _factor_levels(dim: int, radius_sq: Fraction, cutoff: Fraction):
    # (eigenvalue, multiplicity) of one factor sphere, complete up to cutoff.
    levels = []
    k = 0
    while True:
        value = Fraction(k * (k + dim - 1)) / radius_sq
        if value > cutoff:
            break
        levels.append((value, sphere_multiplicity(dim, k)))
        k += 1
    return levels


def laplace_spectrum(spec: HypersurfaceSpec, cutoff) -> Spectrum:
    """All Laplace eigenvalues of the catalog hypersurface up to `cutoff`.

    Great sphere: k(k+n-1) with spherical-harmonic multiplicities.  Product:
    every sum of factor eigenvalues with multiplicity products; coinciding
    sums merge exactly (rational equality), so completeness below the cutoff
    is guaranteed by the per-factor enumeration bound.
    """
    cutoff = Fraction(cutoff)
    if cutoff <= 0:
        raise SpectrumError(f"cutoff must be positive, got {cutoff}")
    acc: dict[Fraction, int] = {}
    if spec.kind == GREAT_SPHERE:
        for value, mult in _factor_levels(spec.n, Fraction(1), cutoff):
            acc[value] = acc.get(value, 0) + mult
    else:
        f1, f2 = spec.factors
        lev1 = _factor_levels(f1.dim, f1.radius_sq, cutoff)
        lev2 = _factor_levels(f2.dim, f2.radius_sq, cutoff)
        for v1, m1 in lev1:
            for v2, m2 in lev2:
                v = v1 + v2
                if v > cutoff:
                    break  # lev2 is increasing
                acc[v] = acc.get(v, 0) + m1 * m2
    entries = tuple(sorted(acc.items()))
    return Spectrum(problem=LAPLACE, entries=entries, cutoff=cutoff)


def derived_spectrum(s: Spectrum, problem: str) -> Spectrum:
    """Bi-Laplace or buckling spectrum derived from a Laplace spectrum.

    Bi-Laplace: (lam, m) -> (lam^2, m); squaring preserves order since
    lam >= 0, and the cutoff becomes cutoff^2.  Buckling: nonzero entries
    carry over unchanged and a bookkeeping (0, 1) entry for the constants
    is prepended (the 0 = Gamma_0 indexing convention).
    """
    if s.problem != LAPLACE:
        raise SpectrumError("derived spectra start from a Laplace spectrum")
    if problem == BILAPLACE:
        entries = tuple((v * v, m) for v, m in s.entries)
        return Spectrum(problem=BILAPLACE, entries=entries, cutoff=s.cutoff * s.cutoff)
    if problem == BUCKLING:
        nonzero = tuple((v, m) for v, m in s.entries if v > 0)
        entries = ((Fraction(0), 1),) + nonzero
        return Spectrum(problem=BUCKLING, entries=entries, cutoff=s.cutoff)
    raise SpectrumError(f"cannot derive problem {problem!r}")


def first_laplace_eigenvalue(spec: HypersurfaceSpec) -> Fraction:
    """Smallest nonzero Laplace eigenvalue, exactly.

    The smallest nonzero sum is always a single first-level factor
    excitation, so no cutoff search is needed.
    """
    if spec.kind == GREAT_SPHERE:
        return Fraction(spec.n)
    return min(Fraction(f.dim) / f.radius_sq for f in spec.factors)


def verify_theorem(spec: HypersurfaceSpec) -> list[Check]:
    """Exact check of the first-eigenvalue identities on one catalog spec.

    For minimal hypersurfaces asserts lam_1 = n, Lam_1 = n^2, Gamma_1 = n
    in rational arithmetic (tolerance 0).  A non-minimal spec is still
    evaluated; its entries are marked as expected hypothesis violations.
    """
    minimal = is_minimal(spec)
    lam1 = first_laplace_eigenvalue(spec)
    base = laplace_spectrum(spec, cutoff=lam1)
    bil1 = derived_spectrum(base, BILAPLACE).first_nonzero()
    buck1 = derived_spectrum(base, BUCKLING).first_nonzero()
    n = Fraction(spec.n)
    zero = Fraction(0)
    rows = [
        ("first_laplace_eigenvalue", "lambda1 == n", lam1, n),
        ("first_bilaplace_eigenvalue", "Lambda1 == n^2", bil1, n * n),
        ("first_buckling_eigenvalue", "Gamma1 == n", buck1, n),
    ]
    return [
        Check(
            name=name,
            claim=claim,
            measured=measured,
            expected=expected,
            tolerance=zero,
            passed=(measured == expected),
            expected_failure=not minimal,
        )
        for name, claim, measured, expected in rows
    ]


def spectrum_to_json(s: Spectrum) -> dict:
    return {
        "problem": s.problem,
        "cutoff": {"num": s.cutoff.numerator, "den": s.cutoff.denominator},
        "entries": [
            {"value_num": v.numerator, "value_den": v.denominator, "mult": m}
            for v, m in s.entries
        ],
    }


def spectrum_from_json(obj) -> Spectrum:
    if isinstance(obj, str):
        obj = json.loads(obj)
    entries = tuple(
        (Fraction(e["value_num"], e["value_den"]), e["mult"]) for e in obj["entries"]
    )
    return Spectrum(
        problem=obj["problem"],
        entries=entries,
        cutoff=Fraction(obj["cutoff"]["num"], obj["cutoff"]["den"]),
    )


def spectrum_to_csv(s: Spectrum) -> str:
    lines = ["value,multiplicity"]
    lines += [f"{float(v)!r},{m}" for v, m in s.entries]
    return "\n".join(lines) + "\n"
