"""Catalog of explicit hypersurfaces of the unit sphere S^{n+1}(1).

Two families are supported, the only ones with closed-form spectra and
desk-scale meshes:

* great spheres S^n (totally geodesic, hence minimal), and
* products of two round spheres S^p(r1) x S^q(r2) with r1^2 + r2^2 = 1,
  which are minimal exactly when r_i^2 = dim_i / n.

Squared radii are kept as exact `fractions.Fraction` values so that the
analytic spectra downstream are computed in rational arithmetic.  Ambient
coordinates always live in R^{n+2}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

GREAT_SPHERE = "great_sphere"
PRODUCT_OF_SPHERES = "product_of_spheres"

# |radius^2 * n - dim| tolerance for user-supplied (float) radii; catalog
# constructors are exact rationals and hit zero.
MINIMALITY_TOL = 1e-12
UNIT_RADIUS_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid hypersurface parameters."""


@dataclass(frozen=True)
class Factor:
    """One round-sphere factor S^dim(radius), radius stored as exact radius^2."""

    dim: int
    radius_sq: Fraction

    @property
    def radius(self) -> float:
        return math.sqrt(float(self.radius_sq))


@dataclass(frozen=True)
class HypersurfaceSpec:
    """Symbolic description of a catalog hypersurface M^n in S^{n+1}(1)."""

    kind: str
    n: int
    factors: tuple[Factor, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise GeometryError(f"intrinsic dimension must be >= 1, got {self.n}")
        if self.kind == GREAT_SPHERE:
            if self.factors:
                raise GeometryError("great sphere takes no factors")
        elif self.kind == PRODUCT_OF_SPHERES:
            if len(self.factors) != 2:
                raise GeometryError("product hypersurface needs exactly 2 factors")
            if any(f.dim < 1 for f in self.factors):
                raise GeometryError("factor dimensions must be positive")
            if any(f.radius_sq <= 0 for f in self.factors):
                raise GeometryError("factor radii must be strictly positive")
            if sum(f.dim for f in self.factors) != self.n:
                raise GeometryError("factor dimensions must sum to n")
            total = sum((f.radius_sq for f in self.factors), Fraction(0))
            if abs(float(total) - 1.0) > UNIT_RADIUS_TOL:
                raise GeometryError(
                    f"squared radii must sum to 1 (got {float(total)!r}): "
                    "the product must embed in the unit sphere"
                )
        else:
            raise GeometryError(f"unknown hypersurface kind {self.kind!r}")

    @property
    def ambient_dim(self) -> int:
        return self.n + 2


def make_great_sphere(n: int) -> HypersurfaceSpec:
    """Totally geodesic S^n inside S^{n+1}(1); minimal by construction."""
    if n < 1:
        raise GeometryError(f"great sphere dimension must be >= 1, got {n}")
    return HypersurfaceSpec(kind=GREAT_SPHERE, n=n)


def make_clifford(p: int, q: int) -> HypersurfaceSpec:
    """Minimal product S^p(sqrt(p/n)) x S^q(sqrt(q/n)), n = p + q.

    The radii are the unique choice with vanishing mean curvature; squared
    radii are exact rationals p/n and q/n.
    """
    if p < 1 or q < 1:
        raise GeometryError(f"factor dimensions must be positive, got ({p}, {q})")
    n = p + q
    return HypersurfaceSpec(
        kind=PRODUCT_OF_SPHERES,
        n=n,
        factors=(Factor(p, Fraction(p, n)), Factor(q, Fraction(q, n))),
    )


def make_product(p: int, q: int, r1, r2) -> HypersurfaceSpec:
    """General product S^p(r1) x S^q(r2); minimality NOT assumed.

    r1, r2 may be floats or exact Fractions; r1^2 + r2^2 must equal 1
    within 1e-12.  Used for non-minimal negative controls.
    """
    if p < 1 or q < 1:
        raise GeometryError(f"factor dimensions must be positive, got ({p}, {q})")
    r1 = Fraction(r1)
    r2 = Fraction(r2)
    if r1 <= 0 or r2 <= 0:
        raise GeometryError("radii must be strictly positive")
    return HypersurfaceSpec(
        kind=PRODUCT_OF_SPHERES,
        n=p + q,
        factors=(Factor(p, r1 * r1), Factor(q, r2 * r2)),
    )


def product_from_radius_squares(p: int, q: int, r1_sq, r2_sq) -> HypersurfaceSpec:
    """Product spec from exact squared radii (used by JSON loading and the CLI)."""
    if p < 1 or q < 1:
        raise GeometryError(f"factor dimensions must be positive, got ({p}, {q})")
    r1_sq = Fraction(r1_sq)
    r2_sq = Fraction(r2_sq)
    if r1_sq <= 0 or r2_sq <= 0:
        raise GeometryError("squared radii must be strictly positive")
    return HypersurfaceSpec(
        kind=PRODUCT_OF_SPHERES,
        n=p + q,
        factors=(Factor(p, r1_sq), Factor(q, r2_sq)),
    )


def is_minimal(spec: HypersurfaceSpec) -> bool:
    """True iff the mean curvature vanishes.

    Great spheres are totally geodesic.  For products the coordinate
    functions satisfy the eigenfunction identity with eigenvalue n exactly
    when radius^2 = dim / n for every factor.
    """
    if spec.kind == GREAT_SPHERE:
        return True
    return all(
        abs(float(f.radius_sq * spec.n - f.dim)) <= MINIMALITY_TOL
        for f in spec.factors
    )


def _sphere_angles_to_unit(angles) -> np.ndarray:
    # Standard angular chart of S^m: m angles -> unit vector in R^{m+1}.
    angles = np.asarray(angles, dtype=float)
    m = angles.shape[0]
    out = np.empty(m + 1)
    s = 1.0
    for i in range(m):
        out[i] = s * math.cos(angles[i])
        s *= math.sin(angles[i])
    out[m] = s
    return out


def embed_point(spec: HypersurfaceSpec, chart_coords) -> np.ndarray:
    """Evaluate the isometric embedding at chart coordinates.

    `chart_coords` is a list of angle vectors, one per factor (a single
    vector of n angles for a great sphere).  Returns a unit-norm point of
    R^{n+2}; for products the point is (r1*u, r2*v) with u, v unit vectors
    on the factor spheres.
    """
    charts = [np.atleast_1d(np.asarray(c, dtype=float)) for c in chart_coords]
    if spec.kind == GREAT_SPHERE:
        if len(charts) != 1 or charts[0].shape[0] != spec.n:
            raise GeometryError(
                f"great sphere S^{spec.n} takes one chart of {spec.n} angles"
            )
        return np.concatenate([_sphere_angles_to_unit(charts[0]), [0.0]])
    if len(charts) != len(spec.factors) or any(
        c.shape[0] != f.dim for c, f in zip(charts, spec.factors)
    ):
        arity = tuple(f.dim for f in spec.factors)
        raise GeometryError(f"product spec takes charts of arities {arity}")
    blocks = [
        f.radius * _sphere_angles_to_unit(c) for f, c in zip(spec.factors, charts)
    ]
    return np.concatenate(blocks)


def spec_to_json(spec: HypersurfaceSpec) -> dict:
    """JSON form; squared radii stored as exact rationals to avoid drift."""
    return {
        "kind": spec.kind,
        "n": spec.n,
        "factors": [
            {
                "dim": f.dim,
                "radius_sq_num": f.radius_sq.numerator,
                "radius_sq_den": f.radius_sq.denominator,
            }
            for f in spec.factors
        ],
    }


def spec_from_json(obj) -> HypersurfaceSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    factors = tuple(
        Factor(f["dim"], Fraction(f["radius_sq_num"], f["radius_sq_den"]))
        for f in obj["factors"]
    )
    return HypersurfaceSpec(kind=obj["kind"], n=obj["n"], factors=factors)


def describe(spec: HypersurfaceSpec) -> str:
    """Short human-readable label, e.g. 'S^2' or 'S^1(0.707) x S^1(0.707)'."""
    if spec.kind == GREAT_SPHERE:
        return f"S^{spec.n}"
    return " x ".join(f"S^{f.dim}({f.radius:.3f})" for f in spec.factors)
