import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crackmd.geometry import (
    OPEN,
    PERIODIC,
    Box,
    CylinderY,
    Empty,
    GeometryError,
    HalfSpace,
    SimBox,
    displacement,
    region_contains,
    vec3,
    wrap_positions,
)

coord = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coord, coord, coord)


def test_displacement_open_axes_is_subtraction():
    box = SimBox((0, 0, 0), (10, 10, 10))
    np.testing.assert_array_equal(displacement(vec3(0, 0, 0), vec3(1, 2, 3), box), [1, 2, 3])


def test_displacement_minimum_image():
    box = SimBox((0, 0, 0), (10, 10, 10), (PERIODIC, OPEN, OPEN))
    np.testing.assert_allclose(displacement(vec3(0.5, 0, 0), vec3(9.5, 0, 0), box), [-1, 0, 0])


def test_displacement_identity():
    box = SimBox((0, 0, 0), (10, 10, 10), (PERIODIC,) * 3)
    p = vec3(3.3, 4.4, 5.5)
    np.testing.assert_array_equal(displacement(p, p, box), [0, 0, 0])


@given(point, point)
def test_displacement_antisymmetric(a, b):
    box = SimBox((0, 0, 0), (7, 9, 11), (PERIODIC, OPEN, PERIODIC))
    d_ab = displacement(np.array(a), np.array(b), box)
    d_ba = displacement(np.array(b), np.array(a), box)
    # minimum image is ambiguous exactly at L/2; away from it the map is odd
    half = np.abs(np.abs(d_ab) - box.lengths / 2) > 1e-9
    np.testing.assert_allclose(d_ab[half], -d_ba[half], atol=1e-9)


@given(point, point)
def test_periodic_displacement_bounded_by_half_length(a, b):
    box = SimBox((0, 0, 0), (7, 9, 11), (PERIODIC,) * 3)
    d = displacement(np.array(a), np.array(b), box)
    assert np.all(np.abs(d) <= box.lengths / 2 + 1e-9)


def test_vec3_rejects_non_finite():
    with pytest.raises(GeometryError):
        vec3(0, np.nan, 0)


def test_box_must_have_positive_extent():
    with pytest.raises(GeometryError):
        SimBox((0, 0, 0), (1, 0, 1))
    with pytest.raises(GeometryError):
        SimBox((0, 0, 0), (1, 1, 1), ("open", "closed", "open"))


def test_wrap_positions_reconstructs():
    box = SimBox((0, 0, 0), (5, 5, 5), (PERIODIC, OPEN, PERIODIC))
    pos = np.array([[-1.0, -1.0, 12.0], [4.0, 7.0, 2.0]])
    wrapped, image = wrap_positions(pos, box)
    np.testing.assert_allclose(wrapped + image * box.lengths, pos)
    assert np.all(wrapped[:, [0, 2]] >= 0) and np.all(wrapped[:, [0, 2]] < 5)
    np.testing.assert_array_equal(wrapped[:, 1], pos[:, 1])


def test_cylinder_boundary_inclusive():
    cyl = CylinderY(0, 0, 5)
    assert region_contains(cyl, (3, 7, 4))
    assert not region_contains(cyl, (3, 0, 4.01))


def test_cylinder_radius_positive():
    with pytest.raises(GeometryError):
        CylinderY(0, 0, 0)


def test_complement_of_box_at_interior_point():
    box = Box((0, 0, 0), (1, 1, 1))
    assert region_contains(box, (0.5, 0.5, 0.5))
    assert not region_contains(~box, (0.5, 0.5, 0.5))


def test_halfspace_and_combinators():
    below = HalfSpace(2, 1.0, "below")
    above = HalfSpace(2, 3.0, "above")
    slab = ~(below | above)
    assert region_contains(slab, (0, 0, 2))
    assert not region_contains(slab, (0, 0, 0.5))
    assert region_contains(below & Box((-1, -1, -1), (1, 1, 1)), (0, 0, 0))
    assert not Empty().contains((0, 0, 0))
    with pytest.raises(GeometryError):
        HalfSpace(3, 0.0)


@settings(max_examples=50)
@given(st.lists(point, min_size=1, max_size=30))
def test_complement_partitions_space(points):
    pts = np.array(points)
    region = CylinderY(1.0, -2.0, 7.5) | Box((-5, -5, -5), (5, 5, 5))
    inside = region.contains_many(pts)
    np.testing.assert_array_equal((~region).contains_many(pts), ~inside)
