"""Geometry-layer tests: zonotope/polytope types, vertices, lifts, faces."""

import itertools

import numpy as np
import pytest

from conftest import hull_vertices_oracle, random_zonotope
from zonofit.errors import (
    CodimZeroFace,
    DegenerateInput,
    DimensionMismatch,
    NotOnBoundary,
    PointOutsidePolytope,
    RankCapExceeded,
)
from zonofit.geom import (
    Polytope,
    Zonotope,
    canonicalize,
    enumerate_vertices,
    face_affine_hull,
    is_general_position,
    is_pushforward_proper,
    is_zonotope_vertex,
    lift_boundary_point,
    minimal_face,
    polytope_from_json,
    polytope_to_json,
    pushforward,
    zonotope_as_polytope,
    zonotope_face_from_lift,
    zonotope_from_json,
    zonotope_to_json,
)

# Worked hexagon example: generators as rows, translation 0.
HEX_GENERATORS = np.array([[1.0, 2.0], [1.0, 1.0], [2.0, 0.0]])
HEX_VERTICES = {(0.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 3.0), (2.0, 3.0), (1.0, 2.0)}


def unit_square_zonotope():
    return Zonotope(np.eye(2), np.zeros(2))


def unit_square_polytope():
    return Polytope.from_vertices([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


class TestZonotopeType:
    def test_rejects_inconsistent_shapes(self):
        with pytest.raises(DimensionMismatch):
            Zonotope(np.eye(2), np.zeros(3))

    def test_rejects_rank_below_dim(self):
        with pytest.raises(DegenerateInput):
            Zonotope(np.array([[1.0, 0.0]]), np.zeros(2))

    def test_arrays_are_readonly(self):
        z = unit_square_zonotope()
        with pytest.raises(ValueError):
            z.generators[0, 0] = 5.0


class TestCanonicalize:
    def test_already_sorted_identity(self):
        z = Zonotope([[0.0, 1.0], [1.0, 0.0]], [0.0, 0.0])
        assert np.array_equal(canonicalize(z).generators, z.generators)

    def test_swap(self):
        z = Zonotope([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
        out = canonicalize(z)
        assert np.array_equal(out.generators, [[0.0, 1.0], [1.0, 0.0]])

    def test_random_rows_sorted_and_multiset_preserved(self, rng):
        G = rng.normal(size=(5, 3))
        z = Zonotope(G, np.zeros(3))
        out = canonicalize(z)
        rows = [tuple(r) for r in out.generators]
        assert rows == sorted(rows)
        assert sorted(map(tuple, G)) == rows

    def test_idempotent(self, rng):
        z = random_zonotope(rng, 5, 2)
        once = canonicalize(z)
        twice = canonicalize(once)
        assert np.array_equal(once.generators, twice.generators)

    def test_membership_preserved(self, rng):
        from zonofit.solvers import box_least_squares

        z = random_zonotope(rng, 4, 2)
        zc = canonicalize(z)
        for _ in range(100):
            p = rng.uniform(-2.0, 2.0, size=2)
            d1 = box_least_squares(z.generators, z.translation, p).distance
            d2 = box_least_squares(zc.generators, zc.translation, p).distance
            assert abs(d1 - d2) <= 1e-9


class TestGeneralPosition:
    def test_true_case(self):
        z = Zonotope([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], np.zeros(2))
        assert is_general_position(z)

    def test_parallel_pair(self):
        z = Zonotope([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]], np.zeros(2))
        assert not is_general_position(z)

    def test_hexagon_generators(self):
        z = Zonotope(HEX_GENERATORS, np.zeros(2))
        assert is_general_position(z)


class TestVertexhood:
    def test_square_corner(self):
        z = unit_square_zonotope()
        assert is_zonotope_vertex(z, [1, 1])

    def test_hexagon_interior_cubical_vertex(self):
        z = Zonotope(HEX_GENERATORS, np.zeros(2))
        assert not is_zonotope_vertex(z, [1, 0, 1])  # g1 + g3 = (3,2), interior

    def test_hexagon_far_corner(self):
        z = Zonotope(HEX_GENERATORS, np.zeros(2))
        assert is_zonotope_vertex(z, [1, 1, 1])  # (4,3)


class TestEnumerateVertices:
    def test_unit_square(self):
        verts = enumerate_vertices(unit_square_zonotope())
        assert len(verts) == 4

    def test_hexagon_coordinates(self):
        z = Zonotope(HEX_GENERATORS, np.zeros(2))
        verts = enumerate_vertices(z)
        got = {tuple(np.round(pt, 9)) for _, pt in verts}
        assert got == HEX_VERTICES

    def test_count_formula_and_hull_oracle(self, rng):
        from math import comb

        for n, d in [(3, 2), (4, 2), (4, 3), (5, 3)]:
            z = random_zonotope(rng, n, d)
            verts = enumerate_vertices(z)
            expected = 2 * sum(comb(n - 1, k) for k in range(d))
            assert len(verts) == expected
            cubical = np.array(
                [z.cubical_vertex(e) for e in itertools.product((0, 1), repeat=n)]
            )
            oracle_idx = hull_vertices_oracle(cubical)
            oracle_pts = {tuple(np.round(cubical[i], 8)) for i in oracle_idx}
            mine = {tuple(np.round(pt, 8)) for _, pt in verts}
            assert mine == oracle_pts

    def test_rank_cap(self, rng):
        z = random_zonotope(rng, 4, 2)
        with pytest.raises(RankCapExceeded):
            enumerate_vertices(z, cap=3)

    def test_every_enumerated_passes_vertexhood(self, rng):
        z = random_zonotope(rng, 4, 2)
        for bits, _ in enumerate_vertices(z):
            assert is_zonotope_vertex(z, bits)

    def test_planar_fast_path_agrees_with_lp(self, rng):
        # The vectorized halfplane criterion must match the separation LP
        # on every bit pattern.
        for _ in range(10):
            n = int(rng.integers(3, 6))
            z = random_zonotope(rng, n, 2)
            kept = {tuple(int(round(b)) for b in bits)
                    for bits, _ in enumerate_vertices(z)}
            for comb in itertools.product((0, 1), repeat=n):
                assert (comb in kept) == is_zonotope_vertex(z, np.array(comb, float))

    def test_non_vertices_strictly_inside_hull(self, rng):
        z = random_zonotope(rng, 4, 2)
        poly = zonotope_as_polytope(z)
        kept = {tuple(int(round(b)) for b in bits) for bits, _ in enumerate_vertices(z)}
        for comb in itertools.product((0, 1), repeat=4):
            if comb in kept:
                continue
            pt = z.cubical_vertex(np.array(comb, float))
            assert poly.interior_margin(pt) > 1e-9


class TestLiftBoundaryPoint:
    def test_edge_midpoint(self):
        z = unit_square_zonotope()
        lift = lift_boundary_point(z, [0.0, 0.5])
        assert np.allclose(lift.values, [0.0, 0.5], atol=1e-9)
        assert lift.free_indices == (1,)

    def test_corner(self):
        z = unit_square_zonotope()
        lift = lift_boundary_point(z, [1.0, 1.0])
        assert np.allclose(lift.values, [1.0, 1.0], atol=1e-9)
        assert lift.free_indices == ()

    def test_hexagon_far_corner(self):
        z = Zonotope(HEX_GENERATORS, np.zeros(2))
        lift = lift_boundary_point(z, [4.0, 3.0])
        assert np.allclose(lift.values, [1.0, 1.0, 1.0], atol=1e-9)

    def test_interior_point_rejected(self):
        z = unit_square_zonotope()
        with pytest.raises(NotOnBoundary):
            lift_boundary_point(z, [0.5, 0.5])

    def test_outside_point_rejected(self):
        z = unit_square_zonotope()
        with pytest.raises(NotOnBoundary):
            lift_boundary_point(z, [2.0, 0.5])

    def test_non_unique_lift_flags_stability_violation(self):
        from zonofit.errors import NonUniqueLift

        # Parallel generators collapse the square to a segment: interior
        # segment points have a one-parameter family of preimages.
        z = Zonotope([[1.0, 0.0], [1.0, 0.0]], np.zeros(2))
        with pytest.raises(NonUniqueLift):
            lift_boundary_point(z, [1.0, 0.0])


class TestPushforward:
    def test_identity_target(self, rng):
        z = random_zonotope(rng, 4, 2)
        for bits, pt in enumerate_vertices(z):
            lift = lift_boundary_point(z, pt)
            assert np.allclose(pushforward(z, z, lift), pt, atol=1e-9)

    def test_worked_family_corner(self):
        src = Zonotope(HEX_GENERATORS, np.zeros(2))
        eps = 0.2
        tgt = Zonotope(HEX_GENERATORS + np.array([[0.0, 0.0], [-eps, 0.0], [0.0, 0.0]]),
                       np.zeros(2))
        out = pushforward(src, tgt, lift_boundary_point(src, [4.0, 3.0]))
        assert np.allclose(out, [3.8, 3.0], atol=1e-12)

    def test_translation_only(self, rng):
        z = random_zonotope(rng, 4, 2)
        dmu = np.array([0.3, -0.2])
        tgt = Zonotope(z.generators, z.translation + dmu)
        for bits, pt in enumerate_vertices(z)[:3]:
            lift = lift_boundary_point(z, pt)
            assert np.allclose(pushforward(z, tgt, lift), pt + dmu, atol=1e-9)

    def test_rank_mismatch(self, rng):
        a = random_zonotope(rng, 4, 2)
        b = random_zonotope(rng, 5, 2)
        with pytest.raises(DimensionMismatch):
            pushforward(a, b, np.zeros(4))


class TestPushforwardProper:
    @pytest.mark.parametrize("eps,expected", [(0.2, True), (0.4, True),
                                              (0.6, False), (0.8, False), (1.0, False)])
    def test_worked_family_thresholds(self, eps, expected):
        src = Zonotope(HEX_GENERATORS, np.zeros(2))
        tgt = Zonotope(HEX_GENERATORS + np.array([[0.0, 0.0], [-eps, 0.0], [0.0, 0.0]]),
                       np.zeros(2))
        assert is_pushforward_proper(src, tgt) is expected

    def test_identity_is_proper(self, rng):
        z = random_zonotope(rng, 4, 2)
        assert is_pushforward_proper(z, z)


class TestPolytope:
    def test_square_facets(self):
        sq = unit_square_polytope()
        assert sq.facet_normals.shape == (4, 2)
        assert np.allclose(np.linalg.norm(sq.facet_normals, axis=1), 1.0)
        margins = sq.facet_normals @ sq.vertices.T - sq.facet_offsets[:, None]
        assert margins.max() <= 1e-9

    def test_rejects_non_extreme_vertex(self):
        with pytest.raises(DegenerateInput):
            Polytope.from_vertices([[0, 0], [1, 0], [0, 1], [0.25, 0.25]])

    def test_from_points_filters(self):
        poly = Polytope.from_points([[0, 0], [1, 0], [0, 1], [0.25, 0.25]])
        assert poly.vertices.shape[0] == 3

    def test_rejects_degenerate(self):
        with pytest.raises(DegenerateInput):
            Polytope.from_vertices([[0.0, 0.0], [1.0, 0.0]])

    def test_3d_simplex(self):
        poly = Polytope.from_vertices([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert poly.facet_normals.shape[0] == 4

    def test_contains(self):
        sq = unit_square_polytope()
        assert sq.contains([0.5, 0.5])
        assert not sq.contains([1.5, 0.5])


class TestMinimalFace:
    def test_bottom_edge(self):
        sq = unit_square_polytope()
        face = minimal_face(sq, [0.5, 0.0])
        assert face.codim == 1
        hull = face_affine_hull(face)
        eta = hull.normals[0]
        assert np.allclose(np.abs(eta), [0.0, 1.0], atol=1e-9)

    def test_corner(self):
        sq = unit_square_polytope()
        face = minimal_face(sq, [0.0, 0.0])
        assert face.codim == 2
        hull = face_affine_hull(face)
        assert hull.normals.shape == (2, 2)
        assert np.allclose(hull.normals @ hull.normals.T, np.eye(2), atol=1e-9)

    def test_interior_gives_codim_zero(self):
        sq = unit_square_polytope()
        face = minimal_face(sq, [0.5, 0.5])
        assert face.codim == 0
        with pytest.raises(CodimZeroFace):
            face_affine_hull(face)

    def test_outside_raises(self):
        sq = unit_square_polytope()
        with pytest.raises(PointOutsidePolytope):
            minimal_face(sq, [2.0, 0.0])


class TestZonotopeFaceFromLift:
    def test_facet_normal_matches_minor_direction(self, rng):
        # For a facet with free generators, the hull normal must be
        # orthogonal to every free generator.
        z = random_zonotope(rng, 4, 3)
        verts = enumerate_vertices(z)
        bits, pt = verts[0]
        lift = lift_boundary_point(z, pt)
        face = zonotope_face_from_lift(z, lift)
        assert face.codim == 3  # a vertex of a 3-D zonotope

    def test_edge_face_of_square(self):
        z = unit_square_zonotope()
        lift = lift_boundary_point(z, [0.0, 0.5])
        face = zonotope_face_from_lift(z, lift)
        assert face.codim == 1
        hull = face_affine_hull(face)
        assert abs(hull.normals[0] @ z.generators[1]) <= 1e-10


class TestZonotopeAsPolytope:
    def test_hexagon(self):
        z = Zonotope(HEX_GENERATORS, np.zeros(2))
        poly = zonotope_as_polytope(z)
        assert poly.vertices.shape[0] == 6
        assert poly.facet_normals.shape[0] == 6
        for _, pt in enumerate_vertices(z):
            assert poly.contains(pt)

    def test_membership_agrees_with_projection(self, rng):
        from zonofit.solvers import box_least_squares

        z = random_zonotope(rng, 4, 2)
        poly = zonotope_as_polytope(z)
        for _ in range(50):
            p = rng.uniform(-2.0, 2.0, size=2)
            dist = box_least_squares(z.generators, z.translation, p).distance
            assert poly.contains(p, tol=1e-7) == (dist <= 1e-7 * poly.scale())


class TestJsonRoundTrip:
    def test_zonotope(self, rng):
        z = random_zonotope(rng, 4, 2)
        data = zonotope_to_json(z)
        back = zonotope_from_json(data)
        assert np.array_equal(back.generators, z.generators)
        assert np.array_equal(back.translation, z.translation)

    def test_polytope(self):
        sq = unit_square_polytope()
        back = polytope_from_json(polytope_to_json(sq))
        assert np.allclose(back.vertices, sq.vertices)
