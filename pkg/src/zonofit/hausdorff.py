"""Hausdorff distance between a polytope and a zonotope, with structure.

The distance is exact: both directed sup-distances are achieved at
vertices, so two vertex sweeps with exact projections suffice. Each
near-maximal pair is returned with the data the optimization layer needs:
the cube lift of the zonotope-side point and the minimal face the
projection lands on.

Also here: the coarse (vertex-set) distance, Hausdorff stability of a
point relative to a body, the locality check that gates the subgradient
calculus, and the decomposition of the distance into smooth terms that is
valid in a neighborhood of a locality-satisfying zonotope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .errors import LocalityViolation
from .geom import (
    AffineHull,
    FaceDescriptor,
    LiftPoint,
    Polytope,
    Zonotope,
    enumerate_vertices,
    is_general_position,
    lift_values_to_lift,
    minimal_face,
    zonotope_as_polytope,
    zonotope_face_from_lift,
)

__all__ = [
    "AchievingPair",
    "LocalityReport",
    "SmoothTerm",
    "hausdorff_distance",
    "coarse_hausdorff_distance",
    "is_hausdorff_stable",
    "check_locality",
    "dist_point_to_affine",
    "local_terms",
]

ACTIVE_PAIR_TOL = 1e-7
STRICT_TOL = 1e-8


@dataclass(frozen=True)
class AchievingPair:
    """One (p, q) pair realizing (or nearly realizing) the distance.

    ``side`` records which sweep produced it: "p_vertex" means p is a
    vertex of the polytope and q its projection onto the zonotope,
    "z_vertex" means q is a zonotope vertex and p its projection onto the
    polytope. ``lift`` is always the cube lift of q; ``face`` is the
    minimal face the non-vertex endpoint lies in (a zonotope face for
    p_vertex pairs, a polytope face for z_vertex pairs).
    """

    p: np.ndarray
    q: np.ndarray
    side: str
    vertex_index: int
    lift: LiftPoint
    face: FaceDescriptor
    distance: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def q_is_zonotope_vertex(self) -> bool:
        return len(self.lift.free_indices) == 0


@dataclass(frozen=True)
class LocalityReport:
    """Outcome of the locality check.

    ``degenerate_subsets`` lists generator index tuples whose minors
    vanish (general-position violations); the unstable lists hold vertex
    indices failing Hausdorff stability against the other body. All empty
    iff the locality conditions hold.
    """

    general_position: bool
    degenerate_subsets: tuple
    unstable_p_vertices: tuple
    unstable_z_vertices: tuple

    @property
    def ok(self) -> bool:
        return (
            self.general_position
            and not self.unstable_p_vertices
            and not self.unstable_z_vertices
        )


def dist_point_to_affine(u, hull: AffineHull) -> float:
    """Distance from u to the affine subspace cut out by the hull's planes.

    With orthonormal normals this is |sum_k (<eta_k, u> - c_k) eta_k|,
    i.e. the norm of the offset-residual vector.
    """
    s = hull.normals @ np.asarray(u, dtype=float) - hull.offsets
    return float(np.linalg.norm(s))


def _pair_band(dists, value, tol_active):
    return [i for i, dist in enumerate(dists) if dist >= value * (1.0 - tol_active)]


def hausdorff_distance(
    poly: Polytope,
    z: Zonotope,
    tol_active: float = ACTIVE_PAIR_TOL,
    config: solvers.SolverConfig = solvers.DEFAULT_CONFIG,
):
    """Exact Hausdorff distance and its achieving pairs.

    Sweeps the polytope vertices against the zonotope (box-constrained
    least squares) and the zonotope vertices against the polytope
    (min-norm point). Returns (value, pairs); a pair is reported when its
    distance is within ``tol_active * value`` of the maximum, deduplicated
    by construction (one candidate per vertex, lowest index first).
    """
    p_proj = [
        solvers.box_least_squares(z.generators, z.translation, v, config)
        for v in poly.vertices
    ]
    zverts = enumerate_vertices(z)
    z_proj = [solvers.project_to_hull(poly.vertices, pt, config) for _, pt in zverts]

    dists = [bp.distance for bp in p_proj] + [hp.distance for hp in z_proj]
    value = max(dists)
    k = len(p_proj)
    pairs = []
    for i in _pair_band(dists, value, tol_active):
        if i < k:
            bp = p_proj[i]
            lift = lift_values_to_lift(bp.coefficients)
            pairs.append(
                AchievingPair(
                    p=poly.vertices[i],
                    q=bp.point,
                    side="p_vertex",
                    vertex_index=i,
                    lift=lift,
                    face=zonotope_face_from_lift(z, lift),
                    distance=bp.distance,
                )
            )
        else:
            j = i - k
            bits, pt = zverts[j]
            hp = z_proj[j]
            pairs.append(
                AchievingPair(
                    p=hp.point,
                    q=pt,
                    side="z_vertex",
                    vertex_index=j,
                    lift=LiftPoint(values=bits, free_indices=()),
                    face=minimal_face(poly, hp.point),
                    distance=hp.distance,
                )
            )
    return value, pairs


def coarse_hausdorff_distance(
    poly: Polytope,
    z: Zonotope,
    tol_active: float = ACTIVE_PAIR_TOL,
    config: solvers.SolverConfig = solvers.DEFAULT_CONFIG,
):
    """Hausdorff distance between the vertex sets only.

    An upper bound for the exact distance. Every pair endpoint is a
    vertex, so every pair carries an exact 0/1 lift; nearest neighbours
    break ties by lowest index.
    """
    zverts = enumerate_vertices(z)
    zpts = np.array([pt for _, pt in zverts])
    V = poly.vertices
    diff = V[:, None, :] - zpts[None, :, :]
    dmat = np.linalg.norm(diff, axis=2)

    p_near = dmat.argmin(axis=1)
    p_dist = dmat.min(axis=1)
    z_near = dmat.argmin(axis=0)
    z_dist = dmat.min(axis=0)
    dists = list(p_dist) + list(z_dist)
    value = float(max(dists))
    k = V.shape[0]
    pairs = []
    for i in _pair_band(dists, value, tol_active):
        if i < k:
            j = int(p_near[i])
            bits, pt = zverts[j]
            pairs.append(
                AchievingPair(
                    p=V[i],
                    q=pt,
                    side="p_vertex",
                    vertex_index=i,
                    lift=LiftPoint(values=bits, free_indices=()),
                    face=zonotope_face_from_lift(z, LiftPoint(values=bits, free_indices=())),
                    distance=float(p_dist[i]),
                )
            )
        else:
            j = i - k
            bits, pt = zverts[j]
            pi = int(z_near[j])
            pairs.append(
                AchievingPair(
                    p=V[pi],
                    q=pt,
                    side="z_vertex",
                    vertex_index=j,
                    lift=LiftPoint(values=bits, free_indices=()),
                    face=minimal_face(poly, V[pi]),
                    distance=float(z_dist[j]),
                )
            )
    return value, pairs


# Laxer feasibility for the small equality-constrained stability LPs;
# their right-hand sides carry projection roundoff.
_STABILITY_LP_CONFIG = solvers.SolverConfig(feasibility_tol=1e-7)


def _max_min_coefficient(columns: np.ndarray, target: np.ndarray, affine: bool) -> float | None:
    """max t s.t. columns @ w = target (+ sum w = 1 if affine), w >= t.

    Returns None when no exact representation exists. When the columns
    are independent the representation is unique and solved directly;
    otherwise the max-min LP decides.
    """
    m = columns.shape[1]
    d = columns.shape[0]
    A = np.vstack([columns, np.ones((1, m))]) if affine else columns
    b = np.append(target, 1.0) if affine else np.asarray(target, dtype=float)
    if m <= A.shape[0] and np.linalg.matrix_rank(A, tol=1e-10) == m:
        coef, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.norm(A @ coef - b) > 1e-7 * (1.0 + np.linalg.norm(b)):
            return None
        return float(coef.min())
    rows = [np.hstack([columns, np.zeros((d, 1))])]
    rhs = list(np.asarray(target, dtype=float))
    senses = ["="] * d
    if affine:
        rows.append(np.hstack([np.ones((1, m)), np.zeros((1, 1))]))
        rhs.append(1.0)
        senses.append("=")
    ineq = np.hstack([np.eye(m), -np.ones((m, 1))])
    rows.append(ineq)
    rhs.extend([0.0] * m)
    senses.extend([">="] * m)
    obj = np.zeros(m + 1)
    obj[-1] = 1.0
    lp = solvers.LinearProgram(
        objective=obj,
        lhs=np.vstack(rows),
        senses=senses,
        rhs=np.array(rhs),
        maximize=True,
    )
    res = solvers.solve_lp(lp, _STABILITY_LP_CONFIG)
    if res.status != "optimal":
        return None
    return float(res.x[-1])


def is_hausdorff_stable(x, poly: Polytope, tol_strict: float = STRICT_TOL,
                        config: solvers.SolverConfig = solvers.DEFAULT_CONFIG) -> bool:
    """Whether projecting x onto the body is locally face-stable.

    Interior points are stable; boundary points are not. An exterior point
    is stable iff its projection sits strictly inside its minimal face
    (all convex coefficients positive) and the offset direction is a
    strictly positive combination of the active facet normals, i.e. lies
    in the relative interior of the normal cone at the projection.
    """
    x = np.asarray(x, dtype=float)
    scale = poly.scale()
    margin = poly.interior_margin(x)
    if margin > tol_strict * scale:
        return True
    if margin > -tol_strict * scale:
        return False  # essentially on the boundary

    proj = solvers.project_to_hull(poly.vertices, x, config)
    q = proj.point
    u = x - q
    nu = np.linalg.norm(u)
    if nu <= tol_strict * scale:
        return False
    face = minimal_face(poly, q)
    if face.codim == 0:
        return False  # projection claims interior: inconsistent, not stable

    vidx = list(face.vertex_indices)
    t_face = _max_min_coefficient(poly.vertices[vidx].T, q, affine=True)
    if t_face is None or t_face <= tol_strict:
        return False

    fmargins = np.abs(poly.facet_normals @ q - poly.facet_offsets)
    active = np.flatnonzero(fmargins <= 1e-7 * scale)
    if active.size == 0:
        return False
    t_cone = _max_min_coefficient(poly.facet_normals[active].T, u / nu, affine=False)
    return t_cone is not None and t_cone > tol_strict


def check_locality(poly: Polytope, z: Zonotope,
                   tol_strict: float = STRICT_TOL,
                   config: solvers.SolverConfig = solvers.DEFAULT_CONFIG) -> LocalityReport:
    """Check the two locality conditions for the pair (poly, z).

    1) the zonotope is in general position; 2) every polytope vertex is
    Hausdorff stable relative to the zonotope and vice versa. Stability is
    only evaluated when 1) holds (the zonotope's face structure is not
    trustworthy otherwise).
    """
    import itertools

    G = z.generators
    n, d = G.shape
    norms = np.linalg.norm(G, axis=1)
    degenerate = []
    for rows in itertools.combinations(range(n), d):
        bound = 1e-10 * float(np.prod(norms[list(rows)]))
        if abs(np.linalg.det(G[list(rows)])) <= bound:
            degenerate.append(rows)
    if degenerate:
        return LocalityReport(
            general_position=False,
            degenerate_subsets=tuple(degenerate),
            unstable_p_vertices=(),
            unstable_z_vertices=(),
        )

    zpoly = zonotope_as_polytope(z)
    bad_p = tuple(
        i for i, v in enumerate(poly.vertices)
        if not is_hausdorff_stable(v, zpoly, tol_strict, config)
    )
    bad_z = tuple(
        j for j, (_, pt) in enumerate(enumerate_vertices(z))
        if not is_hausdorff_stable(pt, poly, tol_strict, config)
    )
    return LocalityReport(
        general_position=True,
        degenerate_subsets=(),
        unstable_p_vertices=bad_p,
        unstable_z_vertices=bad_z,
    )


@dataclass(frozen=True)
class SmoothTerm:
    """One smooth term of the local max-decomposition of the distance.

    A z_vertex term tracks a zonotope vertex (cube lift ``bits``) against
    the fixed affine hull of its minimal face in the polytope. A p_vertex
    term tracks a fixed polytope vertex against the moving affine hull of
    a zonotope face (anchor bits + free generator indices). Both evaluate
    at any zonotope with the same rank; generator order must be preserved.
    """

    side: str
    vertex_index: int
    bits: np.ndarray | None = None
    hull: AffineHull | None = None
    point: np.ndarray | None = None
    anchor_bits: np.ndarray | None = None
    free_indices: tuple | None = None
    orientation: float = 0.0

    def __post_init__(self):
        for name in ("bits", "point", "anchor_bits"):
            v = getattr(self, name)
            if v is not None:
                arr = np.asarray(v, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def codim(self) -> int:
        if self.side == "z_vertex":
            return 0 if self.hull is None else self.hull.codim
        return self.point.size - len(self.free_indices)

    def value(self, z: Zonotope) -> float:
        if self.side == "z_vertex":
            if self.hull is None:
                return 0.0
            u = z.map_point(self.bits)
            return dist_point_to_affine(u, self.hull)
        base = z.map_point(self.anchor_bits)
        r = self.point - base
        free = list(self.free_indices)
        if not free:
            return float(np.linalg.norm(r))
        D = z.generators[free].T
        coef, *_ = np.linalg.lstsq(D, r, rcond=None)
        return float(np.linalg.norm(r - D @ coef))


def local_terms(poly: Polytope, z0: Zonotope,
                config: solvers.SolverConfig = solvers.DEFAULT_CONFIG,
                require_locality: bool = True):
    """Smooth terms whose pointwise max equals the distance near ``z0``.

    One term per polytope vertex (its distance to the affine hull of the
    tracked zonotope face) and one per zonotope vertex (the pushed-forward
    vertex's distance to the affine hull of its face in the polytope).
    Requires the locality conditions; raises LocalityViolation otherwise
    (``require_locality=False`` skips the check for diagnostics on
    degenerate configurations, where the decomposition may only hold at
    the base point itself).
    """
    from .subgrad import facet_normal_minor_vector

    if require_locality and not check_locality(poly, z0, config=config).ok:
        raise LocalityViolation("locality conditions fail at the base zonotope")

    terms = []
    d = z0.dim
    for i, v in enumerate(poly.vertices):
        bp = solvers.box_least_squares(z0.generators, z0.translation, v, config)
        lift = lift_values_to_lift(bp.coefficients)
        anchor = lift.anchor_bits()
        free = lift.free_indices
        orientation = 0.0
        if len(free) == d - 1:
            m = facet_normal_minor_vector(z0.generators, free)
            base = z0.map_point(anchor)
            orientation = 1.0 if float(m @ (v - base)) >= 0.0 else -1.0
        terms.append(
            SmoothTerm(
                side="p_vertex",
                vertex_index=i,
                point=v,
                anchor_bits=anchor,
                free_indices=free,
                orientation=orientation,
            )
        )
    for j, (bits, pt) in enumerate(enumerate_vertices(z0)):
        hp = solvers.project_to_hull(poly.vertices, pt, config)
        face = minimal_face(poly, hp.point)
        terms.append(
            SmoothTerm(
                side="z_vertex",
                vertex_index=j,
                bits=bits,
                hull=face.affine_hull,
            )
        )
    return terms
