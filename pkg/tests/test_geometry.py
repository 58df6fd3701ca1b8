import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchsearch.geometry import (
    ConvexPolygon,
    DegenerateInput,
    contains,
    contains_many,
    convex_hull,
    deflection_angle,
    load_points,
    reduce_hull,
)
from sketchsearch.pipeline import stroke_asset_path

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def winding_contains(verts: np.ndarray, p, tol=1e-9) -> bool:
    """Independent point-in-polygon oracle: winding number with boundary check."""
    n = len(verts)
    px, py = p
    wn = 0
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        # boundary: on segment counts as inside
        if abs(cross) < tol and min(ax, bx) - tol <= px <= max(ax, bx) + tol \
                and min(ay, by) - tol <= py <= max(ay, by) + tol:
            return True
        if ay <= py:
            if by > py and cross > 0:
                wn += 1
        else:
            if by <= py and cross < 0:
                wn -= 1
    return wn != 0


def regular_polygon(n, r=1.0, cx=0.0, cy=0.0, phase=0.0):
    ang = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)])


class TestConvexHull:
    def test_unit_square_is_its_own_hull(self):
        hull = convex_hull(UNIT_SQUARE)
        assert len(hull) == 4
        assert {tuple(v) for v in hull.vertices} == {tuple(v) for v in UNIT_SQUARE}

    def test_disc_points_all_contained(self):
        rng = np.random.default_rng(7)
        r = np.sqrt(rng.uniform(0, 1, 500))
        th = rng.uniform(0, 2 * np.pi, 500)
        pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
        hull = convex_hull(pts)
        for p in pts:  # brute-force containment oracle over every input
            assert winding_contains(hull.vertices, p, tol=1e-7)

    def test_vertices_subset_of_input(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-10, 10, (200, 2))
        hull = convex_hull(pts)
        inputs = {tuple(p) for p in pts}
        assert all(tuple(v) in inputs for v in hull.vertices)

    def test_ccw_orientation(self):
        rng = np.random.default_rng(11)
        hull = convex_hull(rng.normal(0, 5, (50, 2)))
        assert hull.signed_area() > 0

    def test_collinear_raises(self):
        pts = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
        with pytest.raises(DegenerateInput):
            convex_hull(pts)

    def test_too_few_distinct_raises(self):
        with pytest.raises(DegenerateInput):
            convex_hull(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]))

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(0, 3, (80, 2))
        h1 = convex_hull(pts)
        h2 = convex_hull(h1.vertices)
        assert np.allclose(h1.vertices, h2.vertices)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                    min_size=4, max_size=60))
    def test_hull_contains_all_inputs_property(self, pts):
        pts = np.asarray(pts)
        try:
            hull = convex_hull(pts)
        except DegenerateInput:
            return
        assert contains_many(hull, pts, tol=1e-6).all()


class TestDeflectionAngle:
    def test_collinear_zero(self):
        assert deflection_angle((0, 0), (1, 0), (2, 0)) == pytest.approx(0.0)

    def test_right_angle(self):
        assert deflection_angle((0, 0), (1, 0), (1, 1)) == pytest.approx(math.pi / 2)

    def test_hexagon_exterior_angle(self):
        # consecutive edges of a regular hexagon turn by 2*pi/6
        nxt = (1 + math.cos(2 * math.pi / 6), math.sin(2 * math.pi / 6))
        assert deflection_angle((0, 0), (1, 0), nxt) == pytest.approx(math.pi / 3)

    def test_zero_length_raises(self):
        with pytest.raises(DegenerateInput):
            deflection_angle((0, 0), (0, 0), (1, 1))

    @settings(max_examples=60, deadline=None)
    @given(st.tuples(*[st.floats(-50, 50) for _ in range(6)]))
    def test_range_property(self, xs):
        a, b, c = (xs[0], xs[1]), (xs[2], xs[3]), (xs[4], xs[5])
        if a == b or b == c:
            return
        assert 0.0 <= deflection_angle(a, b, c) <= math.pi


class TestReduceHull:
    def test_already_at_target_unchanged(self):
        poly = ConvexPolygon(UNIT_SQUARE)
        out = reduce_hull(poly, 4)
        assert np.allclose(out.vertices, poly.vertices)

    def test_below_target_unchanged(self):
        poly = ConvexPolygon(UNIT_SQUARE)
        out = reduce_hull(poly, 10)
        assert np.allclose(out.vertices, poly.vertices)

    def test_hexagon_tiebreak_removes_lowest_index(self):
        hexagon = ConvexPolygon(regular_polygon(6, phase=0.1))
        out = reduce_hull(hexagon, 5)
        assert len(out) == 5
        # all deflection angles are equal by symmetry, so vertex 0 must go
        expected = hexagon.vertices[1:]
        assert np.allclose(out.vertices, expected)
        # exhaustive oracle: every single-vertex removal is a valid convex 5-gon,
        # so the tie-break alone decides
        for i in range(6):
            candidate = np.delete(hexagon.vertices, i, axis=0)
            assert ConvexPolygon(candidate).signed_area() > 0

    def test_output_subset_and_exact_count(self):
        rng = np.random.default_rng(19)
        hull = convex_hull(rng.normal(0, 10, (300, 2)))
        for n in (len(hull) - 1, 8, 5, 3):
            if n < 3 or n > len(hull):
                continue
            out = reduce_hull(hull, n)
            assert len(out) == n
            inputs = {tuple(v) for v in hull.vertices}
            assert all(tuple(v) in inputs for v in out.vertices)

    def test_idempotent_at_target(self):
        rng = np.random.default_rng(23)
        hull = convex_hull(rng.normal(0, 10, (120, 2)))
        once = reduce_hull(hull, 4)
        twice = reduce_hull(once, 4)
        assert np.allclose(once.vertices, twice.vertices)

    def test_rejects_target_below_three(self):
        with pytest.raises(ValueError):
            reduce_hull(ConvexPolygon(UNIT_SQUARE), 2)


class TestContains:
    def test_square_inside(self):
        poly = ConvexPolygon(UNIT_SQUARE)
        assert contains(poly, (0.5, 0.5))

    def test_square_outside(self):
        poly = ConvexPolygon(UNIT_SQUARE)
        assert not contains(poly, (2.0, 0.0))

    def test_boundary_counts_inside(self):
        poly = ConvexPolygon(UNIT_SQUARE)
        assert contains(poly, (0.0, 0.5))
        assert contains(poly, (1.0, 1.0))

    def test_agrees_with_winding_oracle(self):
        rng = np.random.default_rng(29)
        poly = convex_hull(rng.normal(0, 4, (40, 2)))
        pts = rng.uniform(-8, 8, (10_000, 2))
        fast = contains_many(poly, pts)
        for p, got in zip(pts, fast):
            assert got == winding_contains(poly.vertices, p), p


class TestStrokeAsset:
    def test_bundled_stroke_pipeline_counts(self):
        pts = load_points(stroke_asset_path())
        assert len(pts) == 661
        hull = convex_hull(pts)
        assert len(hull) == 21
        reduced = reduce_hull(hull, 4)
        assert len(reduced) == 4
        # every raw point is inside the full hull
        assert contains_many(hull, pts, tol=1e-6).all()
