import math

import numpy as np
import pytest
from conftest import random_image, random_mask
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from medaugment.errors import DimensionMismatch, MagnitudeOutOfBound, MissingMagnitude, UnknownOperation
from medaugment.image_core import Image, Mask
from medaugment.ops import (
    PIXEL_SPACE,
    SPATIAL_SPACE,
    OpSpec,
    apply_op,
    apply_pixel,
    apply_spatial,
    gaussian_kernel1d,
    gaussian_sigma,
)
from medaugment.reference import reference_oracle

EXACT_KINDS = ("hflip", "vflip", "posterize", "brightness", "contrast", "translate_x", "translate_y")
CLOSE_KINDS = ("gaussian_blur", "sharpness", "rotate", "scale", "shear_x", "shear_y")


def gray(values, h, w) -> Image:
    return Image(np.array(values, dtype=np.uint8).reshape(h, w))


def random_spec(kind, rng) -> OpSpec:
    """Magnitudes spanning and exceeding the level-5 ranges."""
    if kind in ("hflip", "vflip"):
        return OpSpec(kind)
    if kind == "posterize":
        m = int(rng.integers(1, 9))
    elif kind == "gaussian_blur":
        m = int(rng.choice([1, 3, 5, 7, 9]))
    else:
        lo, hi = {
            "brightness": (-0.5, 0.5),
            "contrast": (-0.5, 0.5),
            "sharpness": (0.0, 1.0),
            "gaussian_noise": (0.0, 60.0),
            "rotate": (-45.0, 45.0),
            "scale": (0.6, 1.4),
            "translate_x": (-30.0, 30.0),
            "translate_y": (-30.0, 30.0),
            "shear_x": (-20.0, 20.0),
            "shear_y": (-20.0, 20.0),
        }[kind]
        m = float(rng.uniform(lo, hi))
    return OpSpec(kind, m, noise_seed=int(rng.integers(0, 2**32)))


class TestPixelExamples:
    def test_posterize_four_bits(self):
        out = apply_pixel(OpSpec("posterize", 4), gray([255, 17, 240], 1, 3))
        assert list(out.data) == [240, 16, 240]

    def test_brightness_zero_is_identity(self, rng):
        img = random_image(rng, 9, 7)
        assert apply_pixel(OpSpec("brightness", 0.0), img) == img

    def test_contrast_near_midpoint(self):
        # (128 - 127.5) * 1.2 + 127.5 = 128.1 -> 128
        assert list(apply_pixel(OpSpec("contrast", 0.2), gray([128], 1, 1)).data) == [128]

    def test_brightness_saturates(self):
        assert list(apply_pixel(OpSpec("brightness", 0.2), gray([250, 100], 1, 2)).data) == [255, 120]

    @pytest.mark.parametrize("k", [3, 5, 7])
    def test_blur_and_sharpen_preserve_constant(self, k):
        img = Image(np.full((12, 10, 3), 100, np.uint8))
        assert apply_pixel(OpSpec("gaussian_blur", k), img) == img
        assert apply_pixel(OpSpec("sharpness", 0.5), img) == img

    def test_sigma_rule(self):
        assert gaussian_sigma(3) == pytest.approx(0.8)
        assert gaussian_sigma(7) == pytest.approx(1.4)
        k = gaussian_kernel1d(5)
        assert k.sum() == pytest.approx(1.0) and np.allclose(k, k[::-1])

    def test_noise_mad(self):
        img = Image(np.full((224, 224, 1), 128, np.uint8))
        out = apply_pixel(OpSpec("gaussian_noise", 25.0, noise_seed=8), img)
        mad = np.abs(out.array.astype(float) - 128).mean()
        half_normal = 5.0 * math.sqrt(2 / math.pi)
        assert abs(mad - half_normal) <= 0.05 * half_normal

    def test_noise_is_seeded_and_per_channel(self):
        img = Image(np.full((16, 16, 3), 128, np.uint8))
        a = apply_pixel(OpSpec("gaussian_noise", 30.0, noise_seed=1), img)
        b = apply_pixel(OpSpec("gaussian_noise", 30.0, noise_seed=1), img)
        c = apply_pixel(OpSpec("gaussian_noise", 30.0, noise_seed=2), img)
        assert a == b and a != c
        assert not np.array_equal(a.array[..., 0], a.array[..., 1])

    def test_skipped_op_is_identity(self, rng):
        img = random_image(rng, 8, 8)
        assert apply_pixel(OpSpec("brightness", 0.2, applied=False), img) == img


class TestSpatialExamples:
    def test_hflip_row_and_involution(self):
        img = gray([1, 2, 3], 1, 3)
        once, _ = apply_spatial(OpSpec("hflip"), img)
        assert list(once.data) == [3, 2, 1]
        assert apply_spatial(OpSpec("hflip"), once)[0] == img

    def test_translate_half_width(self):
        img = gray([10, 20, 30, 40], 2, 2)
        out, _ = apply_spatial(OpSpec("translate_x", 50.0), img)
        assert out.array[..., 0].tolist() == [[0, 10], [0, 30]]

    def test_translate_y_negative(self):
        img = gray([10, 20, 30, 40], 2, 2)
        out, _ = apply_spatial(OpSpec("translate_y", -50.0), img)
        assert out.array[..., 0].tolist() == [[30, 40], [0, 0]]

    def test_rotate_zero_identity(self, rng):
        img, mask = random_image(rng, 17, 13), random_mask(rng, 17, 13)
        out, mout = apply_spatial(OpSpec("rotate", 0.0), img, mask)
        assert out == img and mout == mask

    def test_rotate_ninety_is_exact_quarter_turn(self, rng):
        # square frame: the centre maps onto pixel centres, so the warp reads pixels exactly
        img = random_image(rng, 9, 9)
        out, _ = apply_spatial(OpSpec("rotate", 90.0), img)
        assert np.abs(out.array.astype(int) - np.rot90(img.array).astype(int)).max() <= 1

    def test_rotate_mask_labels(self):
        arr = np.zeros((32, 32), np.uint8)
        arr[8:24, 10:20] = 1
        _, mout = apply_spatial(OpSpec("rotate", 17.0), Image(arr * 200), Mask(arr))
        assert mout.labels <= {0, 1}

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            apply_spatial(OpSpec("rotate", 3.0), Image(np.zeros((4, 5), np.uint8)), Mask(np.zeros((5, 4), np.uint8)))


class TestErrors:
    def test_unknown_kind(self):
        with pytest.raises(UnknownOperation):
            OpSpec("solarize", 1.0)

    def test_wrong_space(self):
        img = Image(np.zeros((2, 2), np.uint8))
        with pytest.raises(UnknownOperation):
            apply_pixel(OpSpec("rotate", 1.0), img)
        with pytest.raises(UnknownOperation):
            apply_spatial(OpSpec("contrast", 0.1), img)

    def test_missing_magnitude(self):
        with pytest.raises(MissingMagnitude):
            apply_pixel(OpSpec("brightness"), Image(np.zeros((2, 2), np.uint8)))

    @pytest.mark.parametrize(
        "kind, m",
        [("posterize", 9), ("posterize", 3.5), ("gaussian_blur", 4), ("sharpness", 1.5), ("scale", 0.0),
         ("gaussian_noise", -1.0), ("translate_x", 150.0), ("shear_y", 90.0), ("rotate", float("nan"))],
    )
    def test_out_of_domain(self, kind, m):
        img = Image(np.zeros((4, 4), np.uint8))
        with pytest.raises(MagnitudeOutOfBound):
            apply_op(OpSpec(kind, m), img)


class TestOracleEquivalence:
    @pytest.mark.parametrize("kind", EXACT_KINDS)
    def test_exact_kinds(self, kind):
        rng = np.random.default_rng(sum(map(ord, kind)) + 7)
        for _ in range(6):
            h, w = rng.integers(3, 15, size=2)
            img, mask = random_image(rng, h, w, c=int(rng.choice([1, 3]))), random_mask(rng, h, w)
            spec = random_spec(kind, rng)
            fast = apply_op(spec, img, mask)
            slow = reference_oracle(spec, img, mask)
            assert fast[0] == slow[0]
            assert fast[1] == slow[1]

    @pytest.mark.parametrize("kind", CLOSE_KINDS)
    def test_close_kinds(self, kind):
        rng = np.random.default_rng(sum(map(ord, kind)))
        for _ in range(6):
            h, w = rng.integers(3, 15, size=2)
            img, mask = random_image(rng, h, w), random_mask(rng, h, w)
            spec = random_spec(kind, rng)
            fast = apply_op(spec, img, mask)
            slow = reference_oracle(spec, img, mask)
            assert np.abs(fast[0].array.astype(int) - slow[0].array.astype(int)).max() <= 1
            if spec.kind in SPATIAL_SPACE:
                # nearest-neighbour picks may differ only where a coordinate sits on a .5 tie
                assert np.mean(fast[1].array != slow[1].array) <= 0.02

    def test_noise_with_shared_stream(self, rng):
        img = random_image(rng, 6, 5)
        spec = OpSpec("gaussian_noise", 20.0)
        fast = apply_pixel(spec, img, np.random.default_rng(3))
        slow = reference_oracle(spec, img, rng=np.random.default_rng(3))[0]
        assert fast == slow


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10), st.sampled_from([1, 3]))))
    def test_flip_involutions(self, arr):
        img = Image(arr)
        for kind in ("hflip", "vflip"):
            assert apply_spatial(OpSpec(kind), apply_spatial(OpSpec(kind), img)[0])[0] == img

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10))), st.integers(1, 8))
    def test_posterize_idempotent(self, arr, bits):
        spec = OpSpec("posterize", bits)
        once = apply_pixel(spec, Image(arr))
        assert apply_pixel(spec, once) == once
        assert np.all(once.array & ((1 << (8 - bits)) - 1) == 0)

    @pytest.mark.parametrize("kind", PIXEL_SPACE)
    def test_pixel_ops_leave_mask(self, kind, rng):
        img, mask = random_image(rng, 12, 12), random_mask(rng, 12, 12)
        before = mask.array.copy()
        _, mout = apply_op(random_spec(kind, rng), img, mask)
        assert mout is mask and np.array_equal(mout.array, before)

    @pytest.mark.parametrize("kind", SPATIAL_SPACE)
    def test_spatial_masks_keep_labels(self, kind, rng):
        for _ in range(5):
            img, mask = random_image(rng, 20, 24), random_mask(rng, 20, 24, n_labels=4)
            _, mout = apply_op(random_spec(kind, rng), img, mask)
            assert mout.labels <= mask.labels

    @pytest.mark.parametrize(
        "spec", [OpSpec("rotate", 0.0), OpSpec("scale", 1.0), OpSpec("translate_x", 0.0),
                 OpSpec("translate_y", 0.0), OpSpec("shear_x", 0.0), OpSpec("shear_y", 0.0)]
    )
    def test_zero_magnitude_identity(self, spec, rng):
        img, mask = random_image(rng, 15, 22), random_mask(rng, 15, 22)
        out, mout = apply_spatial(spec, img, mask)
        assert out == img and mout == mask

    @pytest.mark.parametrize("kind", PIXEL_SPACE + SPATIAL_SPACE)
    def test_output_shape_and_range(self, kind, rng):
        img = random_image(rng, 11, 9)
        out, _ = apply_op(random_spec(kind, rng), img)
        assert out.array.shape == img.array.shape and out.array.dtype == np.uint8

    @pytest.mark.parametrize("kind", ["rotate", "scale", "shear_x", "shear_y", "translate_x", "translate_y"])
    def test_image_and_mask_share_geometry(self, kind, rng):
        for _ in range(4):
            check_shared_geometry(random_spec(kind, rng), 48, 40)


def check_shared_geometry(spec: OpSpec, w: int, h: int) -> int:
    """Warp coordinate ramps both as image and as mask and compare.

    Bilinear sampling of a linear ramp returns the source coordinate itself;
    nearest sampling returns it rounded. Where the constant 255 channel comes
    back untouched all four taps were in frame, and there the two readings
    must agree within one level. Returns the number of pixels compared.
    """
    ys, xs = np.mgrid[0:h, 0:w]
    img = Image(np.stack([xs, ys, np.full_like(xs, 255)], axis=-1).astype(np.uint8))
    out, mx = apply_spatial(spec, img, Mask(xs.astype(np.uint8)))
    _, my = apply_spatial(spec, img, Mask(ys.astype(np.uint8)))
    inside = out.array[..., 2] == 255
    dx = np.abs(out.array[..., 0].astype(int) - mx.array.astype(int))[inside]
    dy = np.abs(out.array[..., 1].astype(int) - my.array.astype(int))[inside]
    assert dx.size == 0 or dx.max() <= 1
    assert dy.size == 0 or dy.max() <= 1
    return int(inside.sum())
