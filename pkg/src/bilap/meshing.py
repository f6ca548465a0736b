"""Simplicial meshes of catalog hypersurfaces, embedded in R^{n+2}.

Only n = 1 (polygons on a great circle) and n = 2 (triangulated Clifford
tori and icospheres) are meshed; every generator produces a closed,
connected, consistently oriented mesh whose vertices lie exactly on the
hypersurface, so downstream residuals measure discretization error only.
Meshes are immutable after construction (vertex/simplex arrays are
write-protected).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    GREAT_SPHERE,
    PRODUCT_OF_SPHERES,
    HypersurfaceSpec,
    make_clifford,
    make_great_sphere,
    spec_from_json,
    spec_to_json,
)

VERTEX_NORM_TOL = 1e-12
DEGENERATE_REL_TOL = 1e-14
MAX_ICOSPHERE_LEVELS = 7
MAX_TORUS_GRID = 512


class MeshError(ValueError):
    """Invalid mesh request or violated mesh invariant."""


@dataclass(frozen=True)
class SimplicialMesh:
    dim: int
    ambient_dim: int
    vertices: np.ndarray  # (n_vertices, ambient_dim) float64, read-only
    simplices: np.ndarray  # (n_simplices, dim+1) int64, read-only
    spec: HypersurfaceSpec

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_simplices(self) -> int:
        return self.simplices.shape[0]


def _freeze(dim, vertices, simplices, spec) -> SimplicialMesh:
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    simplices = np.ascontiguousarray(simplices, dtype=np.int64)
    vertices.setflags(write=False)
    simplices.setflags(write=False)
    return SimplicialMesh(
        dim=dim,
        ambient_dim=vertices.shape[1],
        vertices=vertices,
        simplices=simplices,
        spec=spec,
    )


def project_to_surface(spec: HypersurfaceSpec, points: np.ndarray) -> np.ndarray:
    """Radially reproject ambient points onto the hypersurface.

    Great spheres rescale the whole vector to unit norm; products rescale
    each factor block to its radius.
    """
    pts = np.array(points, dtype=np.float64)
    if spec.kind == GREAT_SPHERE:
        return pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    start = 0
    for f in spec.factors:
        stop = start + f.dim + 1
        block = pts[..., start:stop]
        norms = np.linalg.norm(block, axis=-1, keepdims=True)
        pts[..., start:stop] = block * (f.radius / norms)
        start = stop
    return pts


def mesh_circle(segments: int) -> SimplicialMesh:
    """Regular polygon on the equator of S^2, i.e. the great circle S^1(1)."""
    if segments < 3:
        raise MeshError(f"need at least 3 segments, got {segments}")
    theta = 2.0 * np.pi * np.arange(segments) / segments
    vertices = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(segments)])
    idx = np.arange(segments)
    simplices = np.column_stack([idx, (idx + 1) % segments])
    return _freeze(1, vertices, simplices, make_great_sphere(1))


def mesh_product_torus(spec: HypersurfaceSpec, grid: int) -> SimplicialMesh:
    """grid x grid triangulated torus S^1(r1) x S^1(r2) in S^3.

    Each periodic quad is split along a fixed diagonal direction so the
    mesh is homogeneous and discrete multiplicities stay clean.
    """
    if spec.kind != PRODUCT_OF_SPHERES or any(f.dim != 1 for f in spec.factors):
        raise MeshError("torus meshing needs an S^1 x S^1 product spec")
    if grid < 3:
        raise MeshError(f"need grid >= 3, got {grid}")
    if grid > MAX_TORUS_GRID:
        raise MeshError(f"grid {grid} exceeds the resource guard {MAX_TORUS_GRID}")
    r1, r2 = (f.radius for f in spec.factors)
    ang = 2.0 * np.pi * np.arange(grid) / grid
    t1, t2 = np.meshgrid(ang, ang, indexing="ij")
    t1, t2 = t1.ravel(), t2.ravel()
    vertices = np.column_stack(
        [r1 * np.cos(t1), r1 * np.sin(t1), r2 * np.cos(t2), r2 * np.sin(t2)]
    )

    i, j = np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij")
    i, j = i.ravel(), j.ravel()
    ip, jp = (i + 1) % grid, (j + 1) % grid
    v00 = i * grid + j
    v10 = ip * grid + j
    v11 = ip * grid + jp
    v01 = i * grid + jp
    tris = np.concatenate(
        [np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])]
    )
    return _freeze(2, vertices, tris, spec)


def mesh_clifford_torus(grid: int) -> SimplicialMesh:
    """Minimal Clifford torus S^1(sqrt(1/2)) x S^1(sqrt(1/2)) in S^3."""
    return mesh_product_torus(make_clifford(1, 1), grid)


# Icosahedron with vertices (0, +-1, +-phi) cyclic, standard face table;
# all 20 faces consistently oriented (validated by the directed-edge check).
_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
        (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
        (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
    ],
    dtype=np.float64,
)
_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


def mesh_great_sphere2(levels: int) -> SimplicialMesh:
    """Icosahedral triangulation of the great S^2 in S^3, subdivided `levels` times."""
    if levels < 0:
        raise MeshError(f"levels must be >= 0, got {levels}")
    if levels > MAX_ICOSPHERE_LEVELS:
        raise MeshError(
            f"levels {levels} exceeds the resource guard {MAX_ICOSPHERE_LEVELS}"
        )
    base = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    vertices = np.column_stack([base, np.zeros(len(base))])
    mesh = _freeze(2, vertices, _ICO_FACES, make_great_sphere(2))
    for _ in range(levels):
        mesh = refine(mesh)
    return mesh


def refine(mesh: SimplicialMesh) -> SimplicialMesh:
    """Uniform midpoint subdivision with reprojection onto the hypersurface.

    Every edge midpoint becomes a new vertex (reprojected so the Takahashi
    residual sees discretization error only); each triangle splits into 4,
    each segment into 2.  The originating spec is preserved.
    """
    if mesh.dim not in (1, 2):
        raise MeshError(f"unsupported mesh dimension {mesh.dim}")
    verts = list(mesh.vertices)
    midpoint_of: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = midpoint_of.get(key)
        if idx is None:
            idx = len(verts)
            verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
            midpoint_of[key] = idx
        return idx

    new_simplices = []
    if mesh.dim == 1:
        for a, b in mesh.simplices:
            m = midpoint(a, b)
            new_simplices += [(a, m), (m, b)]
    else:
        for a, b, c in mesh.simplices:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_simplices += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]

    new_verts = np.array(verts)
    n_old = mesh.n_vertices
    new_verts[n_old:] = project_to_surface(mesh.spec, new_verts[n_old:])
    return _freeze(mesh.dim, new_verts, np.array(new_simplices), mesh.spec)


def _edges_of(mesh: SimplicialMesh) -> np.ndarray:
    # Unique undirected edges as (n_edges, 2) sorted index pairs.
    s = mesh.simplices
    if mesh.dim == 1:
        pairs = s
    else:
        pairs = np.concatenate([s[:, [0, 1]], s[:, [1, 2]], s[:, [2, 0]]])
    return np.unique(np.sort(pairs, axis=1), axis=0)


def simplex_measures(mesh: SimplicialMesh) -> np.ndarray:
    """Length of every segment / flat area of every triangle (in R^{n+2})."""
    v = mesh.vertices
    s = mesh.simplices
    if mesh.dim == 1:
        return np.linalg.norm(v[s[:, 1]] - v[s[:, 0]], axis=1)
    u = v[s[:, 1]] - v[s[:, 0]]
    w = v[s[:, 2]] - v[s[:, 0]]
    # Gram form of the cross-product norm works in any ambient dimension.
    gram = (u * u).sum(1) * (w * w).sum(1) - ((u * w).sum(1)) ** 2
    return 0.5 * np.sqrt(np.maximum(gram, 0.0))


def mesh_stats(mesh: SimplicialMesh) -> dict:
    """Edge-length range, total measure and worst simplex quality."""
    v = mesh.vertices
    edges = _edges_of(mesh)
    lengths = np.linalg.norm(v[edges[:, 1]] - v[edges[:, 0]], axis=1)
    measures = simplex_measures(mesh)
    if mesh.dim == 1:
        quality_min = 1.0
    else:
        s = mesh.simplices
        a = np.linalg.norm(v[s[:, 1]] - v[s[:, 0]], axis=1)
        b = np.linalg.norm(v[s[:, 2]] - v[s[:, 1]], axis=1)
        c = np.linalg.norm(v[s[:, 0]] - v[s[:, 2]], axis=1)
        # inradius/circumradius = 8 A^2 / ((a+b+c) abc); 1/2 for equilateral.
        quality_min = float(np.min(8.0 * measures**2 / ((a + b + c) * a * b * c)))
    return {
        "h_max": float(lengths.max()),
        "h_min": float(lengths.min()),
        "total_measure": float(measures.sum()),
        "quality_min": quality_min,
    }


def euler_characteristic(mesh: SimplicialMesh) -> int:
    v = mesh.n_vertices
    e = _edges_of(mesh).shape[0]
    if mesh.dim == 1:
        return v - e
    return v - e + mesh.n_simplices


def validate_mesh(mesh: SimplicialMesh) -> None:
    """Raise MeshError on any violated invariant.

    Checks: vertices on the unit sphere, index ranges, nondegenerate
    simplices, closedness (edge/vertex incidence), consistent orientation
    and connectivity.
    """
    v, s = mesh.vertices, mesh.simplices
    norms = np.linalg.norm(v, axis=1)
    worst = float(np.abs(norms - 1.0).max())
    if worst > VERTEX_NORM_TOL:
        raise MeshError(f"vertex off the unit sphere by {worst:.3e}")
    if s.min() < 0 or s.max() >= mesh.n_vertices:
        raise MeshError("simplex vertex index out of range")

    edges = _edges_of(mesh)
    h_max = float(np.linalg.norm(v[edges[:, 1]] - v[edges[:, 0]], axis=1).max())
    measures = simplex_measures(mesh)
    floor = DEGENERATE_REL_TOL * h_max**mesh.dim
    bad = np.nonzero(measures < floor)[0]
    if bad.size:
        raise MeshError(f"degenerate simplex {int(bad[0])} (measure {measures[bad[0]]:.3e})")

    if mesh.dim == 1:
        counts = np.bincount(s.ravel(), minlength=mesh.n_vertices)
        if not np.all(counts == 2):
            raise MeshError("circle mesh is not closed: vertex incidence != 2")
    else:
        directed = np.concatenate([s[:, [0, 1]], s[:, [1, 2]], s[:, [2, 0]]])
        seen = set()
        for a, b in map(tuple, directed):
            if (a, b) in seen:
                raise MeshError(f"directed edge ({a},{b}) repeated: inconsistent orientation")
            seen.add((a, b))
        for a, b in seen:
            if (b, a) not in seen:
                raise MeshError(f"boundary edge ({a},{b}): mesh is not closed")

    # connectivity via BFS over the edge graph
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    seen_v = {0}
    stack = [0]
    while stack:
        cur = stack.pop()
        for nb in adj.get(cur, ()):
            if nb not in seen_v:
                seen_v.add(nb)
                stack.append(nb)
    if len(seen_v) != mesh.n_vertices:
        raise MeshError("mesh is not connected")


def mesh_to_off_text(mesh: SimplicialMesh) -> str:
    """OFF-like export: 'AMBIENT k' header, counts line, vertices, simplices."""
    lines = [f"AMBIENT {mesh.ambient_dim}", f"{mesh.n_vertices} {mesh.n_simplices}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    lines += [
        " ".join([str(mesh.dim + 1)] + [str(int(i)) for i in row])
        for row in mesh.simplices
    ]
    return "\n".join(lines) + "\n"


def mesh_to_json(mesh: SimplicialMesh) -> dict:
    return {
        "dim": mesh.dim,
        "ambient_dim": mesh.ambient_dim,
        "spec": spec_to_json(mesh.spec),
        "vertices": [[float(x) for x in row] for row in mesh.vertices],
        "simplices": [[int(i) for i in row] for row in mesh.simplices],
    }


def mesh_from_json(obj) -> SimplicialMesh:
    import json as _json

    if isinstance(obj, str):
        obj = _json.loads(obj)
    return _freeze(
        obj["dim"],
        np.array(obj["vertices"], dtype=np.float64),
        np.array(obj["simplices"], dtype=np.int64),
        spec_from_json(obj["spec"]),
    )
