"""Feasibility cone of parameter perturbations and the descent direction.

Each achieving pair (p_i, q_i) with cube lift e_i contributes one linear
functional on perturbation space: moving the zonotope parameters by
(dQ, dmu) moves q_i by dQ^T e_i + dmu, and the pair's distance shrinks to
first order iff that motion has positive inner product with p_i - q_i.
The cone of perturbations improving (weakly) every pair is polyhedral; a
point in its interior strictly decreases the distance for small steps,
and an empty interior certifies a local minimum when every q_i is a
vertex (always true for the coarse objective).

The chosen descent direction is the Chebyshev center of the negated
active-gradient hull restricted to the cone: active-term gradients are
ascent directions, so the hull is negated before intersecting. The
Chebyshev LP runs inside the hull's affine span, where the hull is
full-dimensional and the inscribed radius is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solvers
from .errors import EmptyTaus, InfeasibleRegion, NonImprovingRow, UnboundedRegion
from .geom import Polytope, Zonotope
from .subgrad import SubdifferentialSet

__all__ = [
    "FeasibilityCone",
    "DirectionResult",
    "build_cone",
    "descent_direction",
    "tau_limits",
]

# Relative margin used to encode the open cone interior in the H-rep of
# the feasible set, and to post-verify strictness of a direction.
DIRECTION_MARGIN = 1e-8


@dataclass(frozen=True)
class FeasibilityCone:
    """Matrix of improvement functionals, one row per achieving pair.

    Row i applied to a flat parameter perturbation x equals
    <dQ^T e_i + dmu, p_i - q_i> for the (dQ, dmu) encoded by x.
    """

    matrix: np.ndarray
    pairs: tuple

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def build_cone(pairs) -> FeasibilityCone:
    """Assemble the cone matrix from achieving pairs (lift order fixed)."""
    rows = []
    for pair in pairs:
        e = pair.lift.values
        r = pair.p - pair.q
        rows.append(np.concatenate([np.outer(e, r).ravel(), r]))
    return FeasibilityCone(matrix=np.array(rows), pairs=tuple(pairs))


@dataclass(frozen=True)
class DirectionResult:
    """Outcome of the direction search.

    status: "descent" (direction + per-pair step limits), "feasible_empty"
    (no gradient-hull point improves every pair; treated as a local
    minimum), or "cone_empty_interior" (no perturbation improves every
    pair at first order). ``certificate`` qualifies the latter:
    "certified_local_min" when every achieving q_i is a zonotope vertex,
    "certified_local_min_coarse" for the coarse objective, else
    "heuristic".
    """

    status: str
    direction: np.ndarray | None = None
    taus: tuple | None = None
    certificate: str | None = None
    interior_margin: float = 0.0


def tau_limits(pairs, direction: np.ndarray):
    """Per-pair step-size limits along ``direction``.

    tau_i = 2 <delta_i, p_i - q_i> / |delta_i|^2 with
    delta_i = dQ^T e_i + dmu; any step below tau_i strictly shrinks pair
    i's distance, and tau_i/2 is the minimizer along the ray. Requires the
    direction to improve every pair (NonImprovingRow otherwise).
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyTaus("no achieving pairs")
    d = pairs[0].p.size
    n = pairs[0].lift.values.size
    direction = np.asarray(direction, dtype=float)
    dQ = direction[: n * d].reshape(n, d)
    dmu = direction[n * d :]
    taus = []
    for pair in pairs:
        delta = pair.lift.values @ dQ + dmu
        num = float(delta @ (pair.p - pair.q))
        if num <= 0.0:
            raise NonImprovingRow("direction does not improve every pair")
        taus.append(2.0 * num / float(delta @ delta))
    return tuple(taus)


def _hull_facets_in_span(zpts: np.ndarray, tol: float = 1e-9):
    """Outward facet inequalities of conv(zpts) inside its own span."""
    import itertools

    k, r = zpts.shape
    scale = 1.0 + float(np.abs(zpts).max(initial=0.0))
    normals, offsets = [], []
    if r == 1:
        return (np.array([[1.0], [-1.0]]),
                np.array([float(zpts.max()), float(-zpts.min())]))
    for rows in itertools.combinations(range(k), r):
        pts = zpts[list(rows)]
        diffs = pts[1:] - pts[0]
        _, s, vt = np.linalg.svd(diffs)
        if s.size < r - 1 or s[-1] <= 1e-10 * max(1.0, s[0]):
            continue
        eta = vt[-1]
        c = float(eta @ pts[0])
        margins = zpts @ eta - c
        if margins.max() <= tol * scale:
            pass
        elif margins.min() >= -tol * scale:
            eta, c = -eta, -c
        else:
            continue
        if not any(np.linalg.norm(en - eta) < 1e-8 and abs(ec - c) < 1e-8 * scale
                   for en, ec in zip(normals, offsets)):
            normals.append(eta)
            offsets.append(c)
    return np.array(normals), np.array(offsets)


def _chebyshev_direction(neg_gradients, A, margin, config):
    """Chebyshev center of conv(neg_gradients) cut by {A x >= margins}.

    Works inside the hull's affine span. Returns None when the cut is
    empty.
    """
    pts = np.array(neg_gradients)
    u0 = pts[0]
    row_norms = np.linalg.norm(A, axis=1)
    req = margin * row_norms * (1.0 + np.linalg.norm(u0))
    M = pts - u0
    _, s, vt = np.linalg.svd(M) if pts.shape[0] > 1 else (None, np.zeros(1), None)
    rank = int((s > 1e-10 * max(1.0, s.max(initial=0.0))).sum()) if pts.shape[0] > 1 else 0
    if rank == 0:
        # Single candidate: it must sit strictly inside the cone.
        if np.all(A @ u0 >= req - 1e-15):
            return u0
        return None
    B = vt[:rank].T  # span basis, columns orthonormal
    zpts = M @ B
    hull_n, hull_c = _hull_facets_in_span(zpts)
    AB = A @ B
    c0 = A @ u0
    # Ball constraints: hull facets keep the ball in the hull; cone rows
    # (written as <=) keep it strictly feasible.
    normals = np.vstack([hull_n, -AB])
    offsets = np.concatenate([hull_c, c0 - req])
    try:
        center, radius = solvers.chebyshev_center(normals, offsets, config)
    except (InfeasibleRegion, UnboundedRegion):
        return None
    return u0 + B @ center


def descent_direction(
    poly: Polytope,
    z: Zonotope,
    subdiff: SubdifferentialSet | None,
    cone: FeasibilityCone,
    objective: str = "exact",
    margin: float = DIRECTION_MARGIN,
    cone_fallback: bool = False,
    config: solvers.SolverConfig = solvers.DEFAULT_CONFIG,
) -> DirectionResult:
    """Search for a strictly improving perturbation direction.

    First tests the cone interior; an empty interior short-circuits to a
    certificate (no gradients needed). Otherwise intersects the negated
    active-gradient hull with the cone and returns the Chebyshev center,
    verified to strictly improve every pair. ``cone_fallback`` enables the
    optional rescue direction (Chebyshev of the margin-tightened cone on
    the unit box) when the hull intersection is empty; default off: an
    empty feasible set is read as a local minimum.
    """
    interior = solvers.cone_interior_point(cone.matrix, config)
    if not interior.interior:
        if objective == "coarse":
            cert = "certified_local_min_coarse"
        elif all(pair.q_is_zonotope_vertex for pair in cone.pairs):
            cert = "certified_local_min"
        else:
            cert = "heuristic"
        return DirectionResult(status="cone_empty_interior", certificate=cert,
                               interior_margin=interior.margin)

    if subdiff is None:
        raise ValueError("gradients are required once the cone has interior")
    direction = _chebyshev_direction([-np.asarray(g) for g in subdiff.gradients],
                                     cone.matrix, margin, config)
    if direction is None and cone_fallback:
        m, D = cone.matrix.shape
        row_norms = np.linalg.norm(cone.matrix, axis=1)
        normals = np.vstack([-cone.matrix, np.eye(D), -np.eye(D)])
        offsets = np.concatenate([-margin * row_norms, np.ones(2 * D)])
        try:
            direction, _ = solvers.chebyshev_center(normals, offsets, config)
        except (InfeasibleRegion, UnboundedRegion):
            direction = None
    if direction is None:
        return DirectionResult(status="feasible_empty",
                               interior_margin=interior.margin)

    values = cone.matrix @ direction
    row_norms = np.linalg.norm(cone.matrix, axis=1)
    if np.any(values <= 0.5 * margin * row_norms * (1.0 + np.linalg.norm(direction))):
        return DirectionResult(status="feasible_empty",
                               interior_margin=interior.margin)
    taus = tau_limits(cone.pairs, direction)
    return DirectionResult(status="descent", direction=direction, taus=taus,
                           certificate=None, interior_margin=interior.margin)
