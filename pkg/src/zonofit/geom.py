"""Polytope and zonotope representations and their face machinery.

Conventions fixed here and used everywhere else:

* A zonotope with n generators in R^d stores its generators as the n rows
  of an (n, d) matrix G; the body is the image of the unit cube under
  x -> x @ G + translation. Cubical vertices are the images of the 2^n
  cube corners.
* A polytope is a vertex list (every listed vertex extreme) plus a derived
  irredundant facet description with unit outward normals.

Vertex enumeration of a zonotope is brute force over bit-vectors with a
separating-hyperplane feasibility LP deciding true vertexhood; faces of
either body are handed around as ``FaceDescriptor`` values carrying an
orthonormal affine-hull description.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .errors import (
    CodimZeroFace,
    DegenerateInput,
    DimensionMismatch,
    LPNumericalFailure,
    IterationLimit,
    NonUniqueLift,
    NotOnBoundary,
    PointOutsidePolytope,
    RankCapExceeded,
)

__all__ = [
    "Zonotope",
    "Polytope",
    "LiftPoint",
    "AffineHull",
    "FaceDescriptor",
    "canonicalize",
    "is_general_position",
    "is_zonotope_vertex",
    "enumerate_vertices",
    "zonotope_facets",
    "zonotope_as_polytope",
    "lift_boundary_point",
    "pushforward",
    "is_pushforward_proper",
    "minimal_face",
    "face_affine_hull",
    "zonotope_face_from_lift",
    "polytope_from_json",
    "polytope_to_json",
    "zonotope_from_json",
    "zonotope_to_json",
]

GENERAL_POSITION_TOL = 1e-10
BOUNDARY_TOL = 1e-7
FACE_ACTIVE_TOL = 1e-7
LIFT_FREE_TOL = 1e-7
VERTEX_ENUM_CAP = 20


def _readonly(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Zonotope:
    """A zonotope: row i of ``generators`` is generator g_i.

    The represented set is {x @ generators + translation : x in [0,1]^n}.
    Instances are immutable; the derived vertex list and facet description
    are cached on first use.
    """

    generators: np.ndarray
    translation: np.ndarray
    _vertices: list | None = field(default=None, init=False, repr=False, compare=False)
    _facets: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.generators, dtype=float))
        mu = np.asarray(self.translation, dtype=float).reshape(-1)
        if G.shape[1] != mu.size:
            raise DimensionMismatch("generator width must match translation length")
        if G.shape[0] < G.shape[1] or G.shape[1] < 1:
            raise DegenerateInput("need n >= d >= 1 generators")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(mu))):
            raise DegenerateInput("zonotope data must be finite")
        object.__setattr__(self, "generators", _readonly(G))
        object.__setattr__(self, "translation", _readonly(mu))

    @property
    def rank(self) -> int:
        return self.generators.shape[0]

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def center(self) -> np.ndarray:
        return self.translation + 0.5 * self.generators.sum(axis=0)

    def scale(self) -> float:
        """Characteristic length: the largest generator norm."""
        return float(np.linalg.norm(self.generators, axis=1).max())

    def map_point(self, x) -> np.ndarray:
        """Image of cube point(s) x under the zonotope's affine map."""
        return np.asarray(x, dtype=float) @ self.generators + self.translation

    def cubical_vertex(self, bits) -> np.ndarray:
        return self.map_point(np.asarray(bits, dtype=float))


def canonicalize(z: Zonotope) -> Zonotope:
    """Sort generator rows lexicographically ascending.

    The represented set is unchanged; this picks the canonical
    representative of the generator-permutation orbit.
    """
    G = z.generators
    order = np.lexsort(tuple(G[:, j] for j in range(G.shape[1] - 1, -1, -1)))
    return Zonotope(G[order], z.translation)


def is_general_position(z: Zonotope, tol: float = GENERAL_POSITION_TOL) -> bool:
    """True iff every d of the n generators are linearly independent.

    Relative test: each d x d minor must exceed tol times the product of
    the participating row norms.
    """
    G = z.generators
    n, d = G.shape
    norms = np.linalg.norm(G, axis=1)
    for rows in itertools.combinations(range(n), d):
        bound = tol * float(np.prod(norms[list(rows)]))
        if abs(np.linalg.det(G[list(rows)])) <= bound:
            return False
    return True


def is_zonotope_vertex(z: Zonotope, bits, config=solvers.DEFAULT_CONFIG) -> bool:
    """Decide whether the cubical vertex at ``bits`` is a true vertex.

    It is one iff some hyperplane through the origin strictly separates the
    selected generators from the rest; strictness is encoded as margins
    +-1, which is scale-free because the separating system is homogeneous.
    """
    e = np.asarray(bits, dtype=float).reshape(-1)
    G = z.generators
    n, d = G.shape
    if e.size != n:
        raise DimensionMismatch("bit-vector length must equal the rank")
    signs = np.where(e > 0.5, 1.0, -1.0)
    lhs = signs[:, None] * G
    lp = solvers.LinearProgram(
        objective=np.zeros(d),
        lhs=lhs,
        senses=[">="] * n,
        rhs=np.ones(n),
        maximize=False,
    )
    try:
        res = solvers.solve_lp(lp, config)
    except IterationLimit as exc:
        raise LPNumericalFailure(str(exc)) from exc
    return res.status == "optimal"


def _enumerate_vertices_2d(z: Zonotope):
    """Planar fast path: a bit-vector is a vertex iff the signed
    generators fit in an open halfplane, i.e. their directions leave a
    circular gap wider than pi. Equivalent to the separation LP, fully
    vectorized over all 2^n sign patterns."""
    G = z.generators
    n = G.shape[0]
    theta = np.arctan2(G[:, 1], G[:, 0])
    patterns = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    ang = np.where(patterns > 0.5, theta, theta + np.pi)
    ang = np.mod(ang, 2.0 * np.pi)
    ang.sort(axis=1)
    gaps = np.diff(ang, axis=1)
    wrap = ang[:, 0] + 2.0 * np.pi - ang[:, -1]
    max_gap = np.maximum(gaps.max(axis=1), wrap) if n > 1 else wrap
    keep = max_gap > np.pi + 1e-12
    out = []
    for bits in patterns[keep]:
        pt = z.cubical_vertex(bits)
        bits.setflags(write=False)
        pt.setflags(write=False)
        out.append((bits, pt))
    return out


def enumerate_vertices(z: Zonotope, cap: int = VERTEX_ENUM_CAP, config=solvers.DEFAULT_CONFIG):
    """All vertices of a general-position zonotope with their lifts.

    Brute force over the 2^n bit-vectors in lexicographic order, keeping
    the ones whose separating hyperplane exists: decided by the
    feasibility LP in general, and by the equivalent (vectorized) open
    halfplane criterion in the plane. Returns [(bits, point), ...];
    cached on the instance.
    """
    if z._vertices is not None:
        return z._vertices
    n = z.rank
    if n > cap:
        raise RankCapExceeded(f"rank {n} exceeds the enumeration cap {cap}")
    if z.dim == 2:
        out = _enumerate_vertices_2d(z)
    else:
        out = []
        for comb in itertools.product((0, 1), repeat=n):
            bits = np.array(comb, dtype=float)
            if is_zonotope_vertex(z, bits, config):
                pt = z.cubical_vertex(bits)
                bits.setflags(write=False)
                pt.setflags(write=False)
                out.append((bits, pt))
    object.__setattr__(z, "_vertices", out)
    return out


def zonotope_facets(z: Zonotope):
    """Irredundant H-description of a general-position zonotope.

    Each (d-1)-subset of generators spans a facet direction; its unit
    normal comes from the subset's nullspace and the two offsets from the
    support function. Returns (normals, offsets) with unit outward normals;
    cached on the instance.
    """
    if z._facets is not None:
        return z._facets
    G = z.generators
    n, d = G.shape
    normals, offsets = [], []
    mu = z.translation
    for rows in itertools.combinations(range(n), d - 1):
        sub = G[list(rows)]
        # Unit normal spanning the nullspace of the (d-1) x d submatrix.
        _, s, vt = np.linalg.svd(sub) if sub.size else (None, np.zeros(0), np.eye(d))
        eta = vt[-1]
        if sub.size and s.size == d - 1 and s[-1] <= 1e-12 * max(1.0, s[0]):
            continue  # degenerate subset; not a facet direction
        for sign in (1.0, -1.0):
            nrm = sign * eta
            off = float(nrm @ mu + np.maximum(G @ nrm, 0.0).sum())
            normals.append(nrm)
            offsets.append(off)
    pair = (_readonly(np.array(normals)), _readonly(np.array(offsets)))
    object.__setattr__(z, "_facets", pair)
    return pair


@dataclass(frozen=True)
class Polytope:
    """Convex polytope given by extreme vertices and derived facets.

    ``facet_normals`` rows are unit outward normals; every vertex v
    satisfies normals @ v <= offsets + tol. Construct with
    ``Polytope.from_vertices`` (validates) or ``Polytope.from_points``
    (filters non-extreme points first). Faces discovered by
    ``minimal_face`` are memoized in ``face_index`` keyed by their active
    facet set (the polytope is immutable, so entries stay valid).
    """

    vertices: np.ndarray
    facet_normals: np.ndarray
    facet_offsets: np.ndarray
    face_index: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _readonly(np.atleast_2d(self.vertices)))
        object.__setattr__(self, "facet_normals", _readonly(np.atleast_2d(self.facet_normals)))
        object.__setattr__(self, "facet_offsets", _readonly(self.facet_offsets))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def scale(self) -> float:
        return 1.0 + float(np.abs(self.vertices).max(initial=0.0))

    def contains(self, x, tol: float = BOUNDARY_TOL) -> bool:
        margins = self.facet_normals @ np.asarray(x, dtype=float) - self.facet_offsets
        return bool(margins.max(initial=-np.inf) <= tol * self.scale())

    def interior_margin(self, x) -> float:
        """Smallest slack over facets; positive strictly inside."""
        margins = self.facet_offsets - self.facet_normals @ np.asarray(x, dtype=float)
        return float(margins.min(initial=np.inf))

    @staticmethod
    def from_vertices(vertices, facets=None, tol: float = 1e-9) -> "Polytope":
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        k, d = V.shape
        if k < d + 1 or np.linalg.matrix_rank(V - V[0], tol=1e-10) < d:
            raise DegenerateInput("polytope must be full-dimensional")
        scale = 1.0 + float(np.abs(V).max())
        # Every listed vertex must be extreme.
        for i in range(k):
            others = np.delete(V, i, axis=0)
            proj = solvers.project_to_hull(others, V[i])
            if proj.distance <= tol * scale:
                raise DegenerateInput(f"vertex {i} is not extreme")
        if facets is not None:
            normals = np.atleast_2d(np.asarray([f[:-1] for f in facets], dtype=float))
            offsets = np.asarray([f[-1] for f in facets], dtype=float)
            norms = np.linalg.norm(normals, axis=1)
            normals = normals / norms[:, None]
            offsets = offsets / norms
        else:
            normals, offsets = _facets_brute_force(V, tol)
        margins = normals @ V.T - offsets[:, None]
        if margins.max() > tol * scale * 10.0:
            raise DegenerateInput("facet description does not contain all vertices")
        return Polytope(V, normals, offsets)

    @staticmethod
    def from_points(points, tol: float = 1e-9) -> "Polytope":
        P = np.atleast_2d(np.asarray(points, dtype=float))
        scale = 1.0 + float(np.abs(P).max())
        keep = []
        for i in range(P.shape[0]):
            others = np.delete(P, i, axis=0)
            proj = solvers.project_to_hull(others, P[i])
            if proj.distance > tol * scale:
                keep.append(i)
        return Polytope.from_vertices(P[keep])


def _facets_brute_force(V: np.ndarray, tol: float):
    """Facets by brute force over d-subsets with supporting-plane checks."""
    k, d = V.shape
    scale = 1.0 + float(np.abs(V).max())
    normals, offsets = [], []
    for rows in itertools.combinations(range(k), d):
        pts = V[list(rows)]
        diffs = pts[1:] - pts[0]
        if d == 1:
            eta = np.array([1.0])
        else:
            _, s, vt = np.linalg.svd(diffs)
            if s.size < d - 1 or s[-1] <= 1e-10 * max(1.0, s[0]):
                continue  # affinely dependent subset
            eta = vt[-1]
        c = float(eta @ pts[0])
        margins = V @ eta - c
        hi, lo = margins.max(), margins.min()
        if hi <= tol * scale:
            pass  # eta already outward
        elif lo >= -tol * scale:
            eta, c = -eta, -c
        else:
            continue  # not a supporting hyperplane
        duplicate = any(
            np.linalg.norm(en - eta) < 1e-8 and abs(ec - c) < 1e-8 * scale
            for en, ec in zip(normals, offsets)
        )
        if not duplicate:
            normals.append(eta)
            offsets.append(c)
    if not normals:
        raise DegenerateInput("no facets found; input is degenerate")
    return np.array(normals), np.array(offsets)


@dataclass(frozen=True)
class LiftPoint:
    """A point of the unit cube lifting a zonotope boundary point.

    ``free_indices`` are the coordinates strictly inside (0, 1); the
    minimal face of the zonotope containing the image is spanned by the
    generators at those indices.
    """

    values: np.ndarray
    free_indices: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    @property
    def rank(self) -> int:
        return self.values.size

    def anchor_bits(self) -> np.ndarray:
        """Bit-vector with free coordinates dropped to 0 (a face anchor)."""
        bits = np.round(self.values).astype(float)
        bits[list(self.free_indices)] = 0.0
        return bits


def lift_values_to_lift(values, tol: float = LIFT_FREE_TOL) -> LiftPoint:
    x = np.asarray(values, dtype=float)
    free = tuple(int(i) for i in np.flatnonzero((x > tol) & (x < 1.0 - tol)))
    return LiftPoint(values=x, free_indices=free)


@dataclass(frozen=True)
class AffineHull:
    """Affine subspace as intersection of hyperplanes <eta_k, y> = c_k.

    Normals are mutually orthonormal, so the distance from u is
    |sum_k (<eta_k, u> - c_k) eta_k|. ``base`` is a point of the subspace.
    """

    base: np.ndarray
    normals: np.ndarray  # (m, d), orthonormal rows
    offsets: np.ndarray  # (m,)

    def __post_init__(self):
        object.__setattr__(self, "base", _readonly(self.base))
        object.__setattr__(self, "normals", _readonly(np.atleast_2d(self.normals)))
        object.__setattr__(self, "offsets", _readonly(np.atleast_1d(self.offsets)))

    @property
    def codim(self) -> int:
        return self.normals.shape[0]


@dataclass(frozen=True)
class FaceDescriptor:
    """A face of either body.

    Zonotope faces carry an anchor bit-vector plus the free generator
    indices; polytope faces carry the vertex subset. ``affine_hull`` is
    None exactly when the face is the whole body (codim 0).
    """

    side: str  # "zonotope" | "polytope"
    affine_hull: AffineHull | None
    anchor_bits: np.ndarray | None = None
    free_indices: tuple | None = None
    vertex_indices: tuple | None = None

    def __post_init__(self):
        if self.anchor_bits is not None:
            object.__setattr__(self, "anchor_bits", _readonly(self.anchor_bits))

    @property
    def codim(self) -> int:
        return 0 if self.affine_hull is None else self.affine_hull.codim


def face_affine_hull(face: FaceDescriptor) -> AffineHull:
    """The stored affine hull; raises for the codim-0 face.

    By convention the distance to a codim-0 face is 0, so it has no
    hyperplane description to return.
    """
    if face.affine_hull is None:
        raise CodimZeroFace("face is the whole body")
    return face.affine_hull


def _orthonormal_complement(directions: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal basis (rows) of the orthogonal complement of the span."""
    if directions.size == 0:
        return np.eye(d)
    _, s, vt = np.linalg.svd(directions)
    r = int((s > 1e-10 * max(1.0, s[0])).sum())
    return vt[r:]


def zonotope_face_from_lift(z: Zonotope, lift: LiftPoint) -> FaceDescriptor:
    """Face of ``z`` whose relative interior contains the lift's image."""
    free = lift.free_indices
    d = z.dim
    bits = np.round(lift.values).astype(float)
    for i in free:
        bits[i] = 0.0
    if len(free) >= d:
        return FaceDescriptor(side="zonotope", affine_hull=None,
                              anchor_bits=bits, free_indices=free)
    base = z.map_point(bits)
    normals = _orthonormal_complement(z.generators[list(free)], d)
    hull = AffineHull(base=base, normals=normals, offsets=normals @ base)
    return FaceDescriptor(side="zonotope", affine_hull=hull,
                          anchor_bits=bits, free_indices=free)


def lift_boundary_point(z: Zonotope, q, tol: float = BOUNDARY_TOL,
                        config=solvers.DEFAULT_CONFIG) -> LiftPoint:
    """Unique cube preimage of a boundary point of a stable zonotope.

    Box-constrained least squares recovers the preimage; uniqueness holds
    iff the generators free in the solution are linearly independent.
    Raises NotOnBoundary when q is off the boundary (outside or strictly
    interior) and NonUniqueLift when the stability check fails.
    """
    q = np.asarray(q, dtype=float)
    scale = 1.0 + z.scale() + float(np.linalg.norm(z.translation))
    normals, offsets = zonotope_facets(z)
    margins = normals @ q - offsets
    if margins.max() > tol * scale:
        raise NotOnBoundary("point is outside the zonotope")
    if margins.max() < -tol * scale:
        raise NotOnBoundary("point is strictly interior")
    proj = solvers.box_least_squares(z.generators, z.translation, q, config)
    if proj.distance > tol * scale:
        raise NotOnBoundary("no cube preimage within tolerance")
    lift = lift_values_to_lift(proj.coefficients)
    free = list(lift.free_indices)
    if free:
        sub = z.generators[free]
        if np.linalg.matrix_rank(sub, tol=1e-10 * scale) < len(free):
            raise NonUniqueLift("free generators are dependent; lift not unique")
    # Probe the preimage set along null directions of the zonotope map: a
    # feasible segment through the solution means the lift is not unique.
    x = proj.coefficients
    _, s, vt = np.linalg.svd(z.generators.T)
    null_basis = vt[int((s > 1e-10 * max(1.0, s[0] if s.size else 1.0)).sum()):]
    for nu in null_basis:
        room = 0.0
        for sign in (1.0, -1.0):
            v = sign * nu
            steps = []
            for i in range(x.size):
                if v[i] > 1e-12:
                    steps.append((1.0 - x[i]) / v[i])
                elif v[i] < -1e-12:
                    steps.append(-x[i] / v[i])
            room += min(steps) if steps else np.inf
        if room > tol:
            raise NonUniqueLift("preimage contains a segment; lift not unique")
    return lift


def pushforward(source: Zonotope, target: Zonotope, lift) -> np.ndarray:
    """Image of a source-boundary lift under the target's affine map."""
    x = lift.values if isinstance(lift, LiftPoint) else np.asarray(lift, dtype=float)
    if target.rank != source.rank or x.size != target.rank:
        raise DimensionMismatch("source and target must share the rank")
    return target.map_point(x)


def is_pushforward_proper(source: Zonotope, target: Zonotope,
                          tol: float = BOUNDARY_TOL, samples_per_facet: int = 3) -> bool:
    """True iff pushing the source boundary forward stays on the target's.

    Checks every vertex lift plus interior samples of every facet's cube
    face against the target's H-description: proper means each image point
    activates some facet while violating none.
    """
    if target.rank != source.rank:
        raise DimensionMismatch("source and target must share the rank")
    normals, offsets = zonotope_facets(target)
    scale = 1.0 + target.scale() + float(np.linalg.norm(target.translation))

    def on_boundary(y):
        margins = normals @ y - offsets
        return margins.max() <= tol * scale and margins.max() >= -tol * scale

    for bits, _ in enumerate_vertices(source):
        if not on_boundary(target.map_point(bits)):
            return False
    G = source.generators
    n, d = G.shape
    ticks = np.linspace(0.0, 1.0, samples_per_facet + 2)[1:-1]
    for rows in itertools.combinations(range(n), d - 1):
        sub = G[list(rows)]
        _, s, vt = np.linalg.svd(sub) if sub.size else (None, np.zeros(0), np.eye(d))
        eta = vt[-1]
        for sign in (1.0, -1.0):
            nrm = sign * eta
            anchor = (G @ nrm > 0.0).astype(float)
            for i in rows:
                anchor[i] = 0.0
            for combo in itertools.product(ticks, repeat=len(rows)):
                x = anchor.copy()
                for i, t in zip(rows, combo):
                    x[i] = t
                if not on_boundary(target.map_point(x)):
                    return False
    return True


def minimal_face(poly: Polytope, x, tol: float = FACE_ACTIVE_TOL) -> FaceDescriptor:
    """Smallest face of the polytope whose affine hull contains ``x``.

    Determined by the set of facets active at x, which also serves as the
    face's id in the polytope's face index. With no active facet the whole
    polytope is returned (codim 0).
    """
    x = np.asarray(x, dtype=float)
    scale = poly.scale()
    margins = poly.facet_normals @ x - poly.facet_offsets
    if margins.max(initial=-np.inf) > tol * scale:
        raise PointOutsidePolytope("point violates a facet inequality")
    active = np.flatnonzero(np.abs(margins) <= tol * scale)
    face_id = tuple(int(i) for i in active)
    cached = poly.face_index.get(face_id)
    if cached is not None:
        return cached
    if active.size == 0:
        face = FaceDescriptor(side="polytope", affine_hull=None,
                              vertex_indices=tuple(range(poly.vertices.shape[0])))
        poly.face_index[face_id] = face
        return face
    vmargins = poly.facet_normals[active] @ poly.vertices.T - poly.facet_offsets[active, None]
    on_face = np.flatnonzero(np.all(np.abs(vmargins) <= tol * scale * 10.0, axis=0))
    raw = poly.facet_normals[active]
    q, r = np.linalg.qr(raw.T)
    rank = int((np.abs(np.diag(r)) > 1e-10).sum())
    normals = q[:, :rank].T
    base = poly.vertices[on_face].mean(axis=0) if on_face.size else x
    hull = AffineHull(base=base, normals=normals, offsets=normals @ base)
    face = FaceDescriptor(side="polytope", affine_hull=hull,
                          vertex_indices=tuple(int(i) for i in on_face))
    if on_face.size:  # a query-point base would not be reusable
        poly.face_index[face_id] = face
    return face


def zonotope_as_polytope(z: Zonotope) -> Polytope:
    """V- and H-description of a general-position zonotope as a Polytope."""
    verts = np.array([pt for _, pt in enumerate_vertices(z)])
    normals, offsets = zonotope_facets(z)
    return Polytope(vertices=verts, facet_normals=normals, facet_offsets=offsets)


# --- JSON wire formats -----------------------------------------------------

def polytope_from_json(data: dict) -> Polytope:
    """Schema: {"vertices": [[...], ...], "facets": [[n..., c], ...]?}."""
    verts = data["vertices"]
    facets = data.get("facets")
    return Polytope.from_vertices(verts, facets=facets)


def polytope_to_json(poly: Polytope) -> dict:
    return {
        "vertices": poly.vertices.tolist(),
        "facets": [list(n) + [float(c)] for n, c in zip(poly.facet_normals, poly.facet_offsets)],
    }


def zonotope_from_json(data: dict) -> Zonotope:
    """Schema: {"generators": [[...], ...], "translation": [...]}."""
    return Zonotope(np.asarray(data["generators"], dtype=float),
                    np.asarray(data["translation"], dtype=float))


def zonotope_to_json(z: Zonotope) -> dict:
    return {"generators": z.generators.tolist(), "translation": z.translation.tolist()}
