"""Initial zonotope construction.

In the plane: reflect the polytope's vertices through a point, take the
convex hull, and read the resulting centrally symmetric polygon off as a
zonotope (one generator per opposite-edge pair). The reflection point is
grid-searched to shrink the envelope's area. The envelope contains the
polytope, and equals it when the polytope is already centrally symmetric.

In higher dimension: a principal-axes box fit (not enclosing), padded
with short random generators up to the requested rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetryTooLarge, DegenerateInput, DimensionNot2
from .geom import Polytope, Zonotope, canonicalize, is_general_position

__all__ = [
    "SymmetricPolygon",
    "convex_hull_2d",
    "polygon_area",
    "envelope_2d",
    "choose_center_2d",
    "symmetric_polygon_to_zonotope",
    "fit_rank_2d",
    "warmstart_generic",
    "warmstart_zonotope",
]


@dataclass(frozen=True)
class SymmetricPolygon:
    """Convex polygon, counterclockwise vertex cycle, point-symmetric
    about ``center``."""

    vertices: np.ndarray  # (2m, 2)
    center: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        c = np.asarray(self.center, dtype=float)
        v.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "center", c)


def convex_hull_2d(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Hull vertex cycle (ccw) by monotone chain; collinear points dropped.

    Near-duplicate inputs (e.g. a reflected vertex landing on an original
    one up to roundoff) are merged within ``tol`` times the data scale.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    merge = tol * (1.0 + float(np.abs(pts).max(initial=0.0)))
    kept = []
    for p in pts:
        if any(np.linalg.norm(p - q) <= merge for q in kept):
            continue
        kept.append(p)
    pts = np.array(kept)
    if pts.shape[0] < 3:
        return pts
    # np.unique sorts lexicographically already.
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(cycle: np.ndarray) -> float:
    v = np.asarray(cycle, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def envelope_2d(poly: Polytope, center) -> SymmetricPolygon:
    """Hull of the vertices and their reflections through ``center``.

    A centrally symmetric polygon containing the polytope.
    """
    if poly.dim != 2:
        raise DimensionNot2("envelope construction needs a planar polytope")
    O = np.asarray(center, dtype=float)
    pts = np.vstack([poly.vertices, 2.0 * O - poly.vertices])
    return SymmetricPolygon(vertices=convex_hull_2d(pts), center=O)


def choose_center_2d(poly: Polytope, grid_depth: int = 3) -> np.ndarray:
    """Reflection point minimizing the envelope area over a refined grid.

    Starts from the vertex barycenter (always a candidate, so the result
    is never worse) and refines a 9x9 grid ``grid_depth`` times.
    """
    if poly.dim != 2:
        raise DimensionNot2("center search needs a planar polytope")
    V = poly.vertices
    best = V.mean(axis=0)
    best_area = polygon_area(envelope_2d(poly, best).vertices)
    width = 0.5 * float(np.ptp(V, axis=0).max())
    for _ in range(grid_depth):
        ticks = np.linspace(-width, width, 9)
        for dx in ticks:
            for dy in ticks:
                cand = best + np.array([dx, dy])
                area = polygon_area(envelope_2d(poly, cand).vertices)
                if area < best_area - 1e-15:
                    best, best_area = cand, area
        width /= 3.0
    return best


def symmetric_polygon_to_zonotope(sp: SymmetricPolygon, tol: float = 1e-7) -> Zonotope:
    """Read a centrally symmetric 2m-gon off as a rank-m zonotope.

    Opposite edges come in +-pairs; one representative of each pair is a
    generator, and the translation places the zonotope's center on the
    polygon's. The vertex sets then agree exactly.
    """
    V = sp.vertices
    k = V.shape[0]
    if k % 2 != 0 or k < 4:
        raise AsymmetryTooLarge("vertex cycle must have even length >= 4")
    m = k // 2
    scale = 1.0 + float(np.abs(V).max())
    reflected = 2.0 * sp.center - V
    for i in range(m):
        if np.linalg.norm(reflected[i] - V[i + m]) > tol * scale:
            raise AsymmetryTooLarge("opposite vertices are not reflections")
    edges = np.roll(V, -1, axis=0) - V
    # Symmetrize each generator against its opposite edge.
    gens = 0.5 * (edges[:m] - edges[m:])
    mu = sp.center - 0.5 * gens.sum(axis=0)
    return Zonotope(gens, mu)


def fit_rank_2d(z: Zonotope, n: int, center, rng) -> Zonotope:
    """Adapt a planar zonotope to rank n.

    Too many generators: keep the n longest and recenter. Too few: pad
    with short random generators, retrying until general position holds.
    """
    m = z.rank
    if m == n:
        return z
    O = np.asarray(center, dtype=float)
    if m > n:
        order = np.argsort(-np.linalg.norm(z.generators, axis=1), kind="stable")
        G = z.generators[np.sort(order[:n])]
        return Zonotope(G, O - 0.5 * G.sum(axis=0))
    spread = max(z.scale(), 1e-12)
    for _ in range(50):
        angles = rng.uniform(0.0, np.pi, size=n - m)
        pad = 0.05 * spread * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        G = np.vstack([z.generators, pad])
        cand = Zonotope(G, O - 0.5 * G.sum(axis=0))
        if is_general_position(cand):
            return cand
    raise DegenerateInput("could not pad to a general-position zonotope")


def warmstart_generic(poly: Polytope, n: int, rng) -> Zonotope:
    """Principal-axes box fit for any dimension (not enclosing).

    Generators are the vertex-covariance eigenvectors scaled to the
    vertex spread along them, padded with short random directions up to
    rank n; the translation centers the box on the vertex barycenter.
    """
    V = poly.vertices
    d = poly.dim
    if n < d:
        raise DegenerateInput("rank must be at least the dimension")
    bary = V.mean(axis=0)
    centered = V - bary
    cov = centered.T @ centered / max(V.shape[0], 1)
    _, axes = np.linalg.eigh(cov)
    gens = []
    for k in range(d - 1, -1, -1):
        u = axes[:, k]
        proj = centered @ u
        extent = float(proj.max() - proj.min())
        if extent <= 1e-12:
            raise DegenerateInput("polytope has no spread along a principal axis")
        gens.append(u * extent)
    spread = max(np.linalg.norm(g) for g in gens)
    for _ in range(50):
        G = np.array(gens)
        if n > d:
            extra = rng.normal(size=(n - d, d))
            extra /= np.linalg.norm(extra, axis=1)[:, None]
            G = np.vstack([G, 0.05 * spread * extra])
        cand = Zonotope(G, bary - 0.5 * G.sum(axis=0))
        if is_general_position(cand):
            return cand
        # retry with fresh padding, or jitter the axes when n == d
        if n == d:
            gens = [g + rng.normal(scale=1e-9 * spread, size=d) for g in gens]
    raise DegenerateInput("could not build a general-position warmstart")


def warmstart_zonotope(poly: Polytope, n: int, rng=None, grid_depth: int = 3) -> Zonotope:
    """Initial guess: symmetric envelope in the plane, box fit otherwise."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if poly.dim == 2:
        center = choose_center_2d(poly, grid_depth)
        z = symmetric_polygon_to_zonotope(envelope_2d(poly, center))
        z = fit_rank_2d(z, n, center, rng)
        return canonicalize(z)
    return canonicalize(warmstart_generic(poly, n, rng))
