import math

import pytest
from hypothesis import given, strategies as st

from socnav.geometry import (
    Pose2D,
    closest_point_on_polygon,
    normalize_angle,
    point_in_polygon,
    point_segment_distance,
    polygon_area,
    polygon_distance,
    polygon_is_simple,
    polygon_signed_distance,
    ray_circle,
    ray_segment,
    rect_inside_margin,
)

SQUARE = ((0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0))
BOWTIE = ((0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0))


@given(st.floats(min_value=-1e6, max_value=1e6))
def test_normalize_angle_range(theta):
    r = normalize_angle(theta)
    assert -math.pi < r <= math.pi


def test_normalize_angle_keeps_pi():
    assert normalize_angle(math.pi) == math.pi
    assert normalize_angle(-math.pi) == math.pi
    assert normalize_angle(3.0 * math.pi) == pytest.approx(math.pi)
    assert normalize_angle(0.0) == 0.0


def test_pose_normalizes_theta_and_rejects_non_finite():
    assert Pose2D(0.0, 0.0, 3.0 * math.pi).theta == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        Pose2D(math.nan, 0.0, 0.0)
    with pytest.raises(ValueError):
        Pose2D(0.0, math.inf, 0.0)


def test_point_segment_distance():
    assert point_segment_distance((1.0, 1.0), (0.0, 0.0), (2.0, 0.0)) == pytest.approx(1.0)
    assert point_segment_distance((-1.0, 0.0), (0.0, 0.0), (2.0, 0.0)) == pytest.approx(1.0)
    assert point_segment_distance((3.0, 4.0), (0.0, 0.0), (0.0, 0.0)) == pytest.approx(5.0)


def test_point_in_polygon():
    assert point_in_polygon((1.0, 1.0), SQUARE)
    assert not point_in_polygon((3.0, 1.0), SQUARE)
    assert not point_in_polygon((-0.1, 1.0), SQUARE)


def test_polygon_distance_inside_and_out():
    assert polygon_distance((1.0, 1.0), SQUARE) == 0.0
    assert polygon_distance((2.0, 1.0), SQUARE) == 0.0  # boundary
    assert polygon_distance((3.0, 1.0), SQUARE) == pytest.approx(1.0)
    assert polygon_signed_distance((1.0, 1.0), SQUARE) == pytest.approx(-1.0)
    assert polygon_signed_distance((3.0, 1.0), SQUARE) == pytest.approx(1.0)


def test_closest_point_on_polygon():
    assert closest_point_on_polygon((3.0, 1.0), SQUARE) == pytest.approx((2.0, 1.0))
    assert closest_point_on_polygon((1.0, -2.0), SQUARE) == pytest.approx((1.0, 0.0))


def test_polygon_area_sign():
    assert polygon_area(SQUARE) == pytest.approx(4.0)
    assert polygon_area(tuple(reversed(SQUARE))) == pytest.approx(-4.0)


def test_polygon_simplicity():
    assert polygon_is_simple(SQUARE)
    assert not polygon_is_simple(BOWTIE)
    assert not polygon_is_simple(((0.0, 0.0), (1.0, 0.0)))


def test_ray_segment_hits_and_misses():
    # wall x=2 from y=-1..3, ray along +x
    assert ray_segment((0.0, 0.0), (1.0, 0.0), (2.0, -1.0), (2.0, 3.0)) == pytest.approx(2.0)
    assert ray_segment((0.0, 0.0), (-1.0, 0.0), (2.0, -1.0), (2.0, 3.0)) is None
    assert ray_segment((0.0, 0.0), (0.0, 1.0), (2.0, -1.0), (2.0, 3.0)) is None


def test_ray_circle_cases():
    assert ray_circle((0.0, 0.0), (1.0, 0.0), (3.0, 0.0), 0.5) == pytest.approx(2.5)
    assert ray_circle((0.0, 0.0), (1.0, 0.0), (3.0, 2.0), 0.5) is None
    # origin inside the circle: exit distance
    assert ray_circle((3.0, 0.0), (1.0, 0.0), (3.0, 0.0), 0.5) == pytest.approx(0.5)
    assert ray_circle((0.0, 0.0), (-1.0, 0.0), (3.0, 0.0), 0.5) is None


def test_rect_inside_margin():
    bounds = (0.0, 0.0, 10.0, 6.0)
    assert rect_inside_margin(bounds, (5.0, 3.0)) == pytest.approx(3.0)
    assert rect_inside_margin(bounds, (1.0, 3.0)) == pytest.approx(1.0)
    assert rect_inside_margin(bounds, (-1.0, 3.0)) == pytest.approx(-1.0)
