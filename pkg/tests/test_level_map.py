import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from medaugment.errors import UnknownOperation, ValidationError
from medaugment.level_map import LEVELS, magnitude_bound, odd_ceiling, op_probability
from medaugment.ops import ALL_OPS, NO_MAGNITUDE, PIXEL_SPACE, SPATIAL_SPACE


@pytest.mark.parametrize("x, expected", [(7.0, 7), (3.8, 5), (4.6, 5), (0.2, 1), (2.0, 3), (6.2, 7)])
def test_odd_ceiling_examples(x, expected):
    assert odd_ceiling(x) == expected


@given(st.floats(min_value=1e-9, max_value=100.0))
def test_odd_ceiling_property(x):
    out = odd_ceiling(x)
    assert out % 2 == 1
    assert math.ceil(x) <= out <= math.ceil(x) + 1


def test_odd_ceiling_domain():
    with pytest.raises(ValidationError):
        odd_ceiling(0.0)


def test_space_sizes():
    assert len(PIXEL_SPACE) == 6 and len(SPATIAL_SPACE) == 8
    assert len(set(ALL_OPS)) == 14


def test_bound_examples():
    assert magnitude_bound("posterize", 5).upper == 4
    blur = magnitude_bound("gaussian_blur", 5)
    assert (blur.lower, blur.upper) == (3, 7)
    noise = magnitude_bound("gaussian_noise", 5)
    assert (noise.lower, noise.upper) == (10, 50)
    rot = magnitude_bound("rotate", 3)
    assert rot.upper == 12 and rot.is_signed


def test_posterize_bits_table():
    assert [magnitude_bound("posterize", l).lower for l in LEVELS] == [7, 6, 5, 4, 4]


def test_flips_have_no_magnitude():
    for kind in NO_MAGNITUDE:
        b = magnitude_bound(kind, 3)
        assert not b.has_magnitude and b.contains(None)


@pytest.mark.parametrize("kind", [k for k in ALL_OPS if k not in NO_MAGNITUDE])
def test_width_monotone_in_level(kind):
    widths = [magnitude_bound(kind, l).width for l in LEVELS]
    assert all(a <= b for a, b in zip(widths, widths[1:]))
    for l in LEVELS:
        b = magnitude_bound(kind, l)
        assert b.lower <= b.upper


@pytest.mark.parametrize("level, p", [(1, 0.2), (3, 0.6), (5, 1.0)])
def test_probability(level, p):
    assert op_probability(level) == p


def test_probability_range():
    assert all(0 < op_probability(l) <= 1 for l in LEVELS)


@pytest.mark.parametrize("bad", [0, 6, -1, 2.5, "3", True, None])
def test_invalid_level(bad):
    with pytest.raises(ValidationError):
        magnitude_bound("rotate", bad)
    with pytest.raises(ValidationError):
        op_probability(bad)


def test_unknown_operation():
    with pytest.raises(UnknownOperation):
        magnitude_bound("solarize", 5)


def test_contains_respects_sign_and_parity():
    rot = magnitude_bound("rotate", 2)
    assert rot.contains(-8.0) and rot.contains(8.0) and not rot.contains(8.5)
    blur = magnitude_bound("gaussian_blur", 5)
    assert blur.contains(5) and not blur.contains(4) and not blur.contains(9)
    assert not magnitude_bound("scale", 1).contains(None)
