import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subdiffrange.geometry import (
    BallUnion,
    ConvexBody,
    GeometryError,
    PointCloud,
    body_from_dict,
    body_to_dict,
    convex_hull,
    disk,
    hausdorff_distance,
    hausdorff_sq_exact,
    intersect_body_ball,
    minkowski_interpolate,
    regular_polygon,
    set_from_dict,
    set_to_dict,
    support_value,
    support_values,
)

coord = st.floats(-1, 1, allow_nan=False, width=32)
point = st.tuples(coord, coord)
points = st.lists(point, min_size=3, max_size=9)


def body(pts):
    return ConvexBody.from_points(pts)


# support function ----------------------------------------------------------

def test_support_value_square():
    K = body([(1, 1), (-1, 1), (-1, -1), (1, -1)])
    assert support_value(K, (1, 0)) == 1


def test_support_value_origin_singleton():
    assert support_value(body([(0, 0)]), (3.0, -2.0)) == 0


def test_support_value_triangle_exact():
    K = ConvexBody.from_points([(0, 0), (2, 0), (0, 2)], exact=True)
    assert support_value(K, (Fraction(1), Fraction(1))) == 2


def test_support_value_empty_rejected():
    with pytest.raises(GeometryError):
        ConvexBody.from_points([])


@given(points, point, point, st.floats(0, 10))
def test_support_homogeneous_subadditive(pts, u, v, lam):
    K = body(pts)
    u, v = np.array(u, float), np.array(v, float)
    assert support_value(K, lam * u) == pytest.approx(lam * support_value(K, u), abs=1e-9)
    assert support_value(K, u + v) <= support_value(K, u) + support_value(K, v) + 1e-12


# Hausdorff distance --------------------------------------------------------

@given(points)
def test_hausdorff_identity(pts):
    K = body(pts)
    assert hausdorff_distance(K, K) == 0.0


def test_hausdorff_point_to_disk():
    d = hausdorff_distance(body([(0, 0)]), regular_polygon((0, 0), 1.0, 64))
    assert abs(d - 1) <= 2e-3


def test_hausdorff_segment_square():
    seg = body([(0, 0), (1, 0)])
    sq = body([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert hausdorff_distance(seg, sq) == pytest.approx(1.0, abs=1e-15)


def test_hausdorff_dimension_mismatch():
    with pytest.raises(GeometryError):
        hausdorff_distance(body([(0, 0)]), ConvexBody.from_points([(0,)]))


@given(points, points, points)
def test_hausdorff_metric_axioms(a, b, c):
    A, B, C = body(a), body(b), body(c)
    ab = hausdorff_distance(A, B)
    assert ab == hausdorff_distance(B, A)
    assert hausdorff_distance(A, C) <= ab + hausdorff_distance(B, C) + 1e-9
    assert (ab == 0) == (A == B) or ab < 1e-12


def test_hausdorff_ball_union_tolerance():
    U = BallUnion(2, ((0.0, 0.0),), (1.0,))
    d = hausdorff_distance(U, body([(0, 0)]), tol=1e-3)
    assert abs(d - 1.0) <= 1e-3


def test_hausdorff_cloud():
    P = PointCloud(2, [[0, 0], [1, 0]])
    assert hausdorff_distance(P, body([(0, 0), (1, 0)]), tol=1e-3) == pytest.approx(0.5, abs=1e-3)


# Minkowski geodesic ---------------------------------------------------------

def test_minkowski_midpoint_example():
    K0 = ConvexBody.from_points([(0, 0)], exact=True)
    K1 = ConvexBody.from_points([(0, 0), (1, 0), (1, 1), (0, 1)], exact=True)
    half = minkowski_interpolate(K0, K1, Fraction(1, 2))
    h = Fraction(1, 2)
    assert half == ConvexBody.from_points([(0, 0), (h, 0), (h, h), (0, h)], exact=True)
    assert hausdorff_sq_exact(K0, half) == Fraction(1, 2)
    assert hausdorff_sq_exact(K0, half) * 4 == hausdorff_sq_exact(K0, K1)
    assert math.sqrt(hausdorff_sq_exact(K0, half)) == pytest.approx(math.sqrt(2) / 2)


def test_minkowski_endpoints():
    K0, K1 = regular_polygon((0, 0), 1, 5), regular_polygon((0.1, 0), 0.5, 3)
    assert minkowski_interpolate(K0, K1, 0) is K0
    assert minkowski_interpolate(K0, K1, 1) is K1


def test_minkowski_lambda_range():
    K = body([(0, 0)])
    with pytest.raises(GeometryError):
        minkowski_interpolate(K, K, 1.5)


@given(points, points, st.floats(0, 1))
def test_geodesic_identity(a, b, lam):
    K0, K1 = body(a), body(b)
    lhs = hausdorff_distance(K0, minkowski_interpolate(K0, K1, lam))
    assert abs(lhs - lam * hausdorff_distance(K0, K1)) <= 1e-9


@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=7),
       st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=7),
       st.integers(0, 16))
def test_geodesic_identity_exact(a, b, k):
    K0 = ConvexBody.from_points([(Fraction(x, 8), Fraction(y, 8)) for x, y in a], exact=True)
    K1 = ConvexBody.from_points([(Fraction(x, 8), Fraction(y, 8)) for x, y in b], exact=True)
    lam = Fraction(k, 16)
    lhs = hausdorff_sq_exact(K0, minkowski_interpolate(K0, K1, lam))
    assert lhs == lam * lam * hausdorff_sq_exact(K0, K1)


# convex hull ----------------------------------------------------------------

def test_hull_drops_interior_point():
    K = convex_hull(PointCloud(2, [[0, 0], [1, 0], [0.5, 0.25], [0, 1]]))
    assert len(K.vertices) == 3
    assert (0.5, 0.25) not in K.vertices


def test_hull_keeps_exterior_point():
    K = convex_hull(PointCloud(2, [[0, 0], [1, 0], [0.5, -0.25], [0, 1]]))
    assert len(K.vertices) == 4


def test_hull_singleton_and_segment():
    assert len(convex_hull(PointCloud(2, [[0.3, 0.2]])).vertices) == 1
    seg = convex_hull(PointCloud(2, [[0, 0], [0.5, 0.5], [1, 1], [0.25, 0.25]]))
    assert seg.array.tolist() == [[0, 0], [1, 1]]


def test_hull_empty_rejected():
    with pytest.raises(GeometryError):
        convex_hull(PointCloud(2, np.zeros((0, 2))))


@given(points)
def test_hull_idempotent_and_covering(pts):
    K = convex_hull(PointCloud(2, pts))
    assert convex_hull(PointCloud(2, K.array)) == K
    assert all(K.contains(p, tol=1e-12) for p in np.asarray(pts, float))


# ball intersections and unions -----------------------------------------------

def test_intersect_inside_unchanged():
    K = regular_polygon((0, 0), 0.5, 6)
    assert intersect_body_ball(K, (0, 0), 1.0, 1e-3) == K


def test_intersect_big_square_gives_disk():
    K = body([(-2, -2), (2, -2), (2, 2), (-2, 2)])
    R = intersect_body_ball(K, (0, 0), 1.0, 1e-3)
    assert hausdorff_distance(R, BallUnion(2, ((0, 0),), (1.0,)), tol=1e-3) <= 2e-3


def test_intersect_disjoint_empty():
    assert intersect_body_ball(regular_polygon((3, 0), 0.5, 5), (0, 0), 1.0, 1e-3) is None


def test_intersect_tol_rejected():
    with pytest.raises(GeometryError):
        intersect_body_ball(body([(0, 0)]), (0, 0), 1.0, 0.0)


def test_ball_union_connectivity():
    assert BallUnion(2, ((0, 0), (1, 0)), (0.6, 0.6)).connected
    assert not BallUnion(2, ((0, 0), (2, 0)), (0.6, 0.6)).connected
    with pytest.raises(GeometryError):
        BallUnion(2, ((0, 0),), (0.0,))


# serialization ----------------------------------------------------------------

def test_body_json_roundtrip_exact():
    K = ConvexBody.from_points([(Fraction(1, 3), 0), (0, 1), (0, 0)], exact=True)
    d = body_to_dict(K)
    assert d["dim"] == 2 and all(isinstance(c, str) for v in d["vertices"] for c in v)
    assert body_from_dict(d) == K


def test_ball_union_json_roundtrip():
    U = BallUnion(2, ((0.1, 0.2), (0.3, 0.1)), (0.2, 0.25))
    assert set_from_dict(set_to_dict(U)) == U


def test_disk_polygon_within_tol():
    D = disk((0, 0), 1.0, 1e-3)
    r = np.linalg.norm(D.array, axis=1)
    assert np.all(r <= 1 + 1e-3) and np.all(r >= 1 - 1e-3)


def test_support_values_vectorised():
    K = regular_polygon((0, 0), 1.0, 8)
    U = np.eye(2)
    assert np.allclose(support_values(K, U), [support_value(K, u) for u in U])
