"""Spectral toolkit for minimal hypersurfaces of round spheres.

Exact (rational) and finite-element spectra of the Laplacian, its square
(clamped problem) and the buckling problem on great spheres and products
of spheres in S^{n+1}(1), plus a verification harness for the first
eigenvalue identities lambda_1 = n, Lambda_1 = n^2, Gamma_1 = n on the
minimal members of the catalog.
"""

from .analytic import (
    BILAPLACE,
    BUCKLING,
    LAPLACE,
    Spectrum,
    derived_spectrum,
    laplace_spectrum,
    sphere_eigenvalue,
    sphere_multiplicity,
    verify_theorem,
)
from .eigensolve import (
    EigenResult,
    NonConvergenceError,
    SolverError,
    bilaplace_eigs,
    buckling_eigs,
    cluster_values,
    laplace_eigs,
    solve_gen_sym,
)
from .geometry import (
    HypersurfaceSpec,
    embed_point,
    is_minimal,
    make_clifford,
    make_great_sphere,
    make_product,
    product_from_radius_squares,
)
from .meshing import (
    SimplicialMesh,
    mesh_circle,
    mesh_clifford_torus,
    mesh_great_sphere2,
    mesh_product_torus,
    mesh_stats,
    refine,
)
from .operators import OperatorPair, assemble_mass, assemble_stiffness, build_operators
from .report import Check, ConvergenceRecord, VerificationReport
from .verify import (
    analytic_report,
    check_choi_wang,
    check_lemma,
    check_theorem,
    convergence_study,
    minimal_catalog,
    numeric_report,
    takahashi_quotient_gap,
    takahashi_residual,
)

__version__ = "0.1.0"
