"""The fourteen MedAugment transforms.

Pixel ops change intensities only and never touch a mask. Spatial ops are
fixed-frame affine warps (output size equals input size) applied identically
to the image (bilinear) and the mask (nearest neighbour); vacated regions are
filled with 0.

Spatial warps work in index coordinates where pixel (x, y) has its centre at
(x, y), so the frame centre is ((W - 1) / 2, (H - 1) / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import MagnitudeOutOfBound, MissingMagnitude, UnknownOperation
from .image_core import Image, Mask, check_pair, round_clamp

PIXEL_SPACE = ("brightness", "contrast", "posterize", "sharpness", "gaussian_blur", "gaussian_noise")
SPATIAL_SPACE = ("rotate", "hflip", "vflip", "scale", "translate_x", "translate_y", "shear_x", "shear_y")
ALL_OPS = PIXEL_SPACE + SPATIAL_SPACE
NO_MAGNITUDE = frozenset({"hflip", "vflip"})

SHARPEN_KERNEL = np.array([[-1, -1, -1], [-1, 9, -1], [-1, -1, -1]], dtype=np.float64)


@dataclass(frozen=True)
class OpSpec:
    """One sampled operation.

    `magnitude` is the concrete signed value (bits for posterize, kernel size
    for blur, variance for noise, degrees for rotate/shear, percent of the
    frame for translate, factor for scale). `applied` is False when the
    probability gate dropped the op, in which case it acts as the identity.
    """

    kind: str
    magnitude: float | int | None = None
    noise_seed: int | None = None
    applied: bool = True

    def __post_init__(self):
        if self.kind not in ALL_OPS:
            raise UnknownOperation(f"unknown operation {self.kind!r}")

    @property
    def is_pixel(self) -> bool:
        return self.kind in PIXEL_SPACE

    def with_magnitude(self, magnitude, noise_seed=None) -> "OpSpec":
        return replace(self, magnitude=magnitude, noise_seed=noise_seed)

    def describe(self) -> str:
        if self.kind in NO_MAGNITUDE:
            text = self.kind
        elif isinstance(self.magnitude, (int, np.integer)):
            text = f"{self.kind}({self.magnitude})"
        else:
            text = f"{self.kind}({self.magnitude:+.4f})"
        return text if self.applied else f"{text}[skipped]"


def validate_magnitude(spec: OpSpec) -> None:
    """Reject magnitudes outside an op's physically meaningful domain.

    Level bounds are enforced by the sampler; this only guards against values
    the transform itself cannot interpret.
    """
    kind, m = spec.kind, spec.magnitude
    if kind in NO_MAGNITUDE:
        return
    if m is None:
        raise MissingMagnitude(f"{kind} requires a magnitude")
    if not math.isfinite(m):
        raise MagnitudeOutOfBound(f"{kind}: magnitude {m} is not finite")
    ok = True
    if kind in ("brightness", "contrast"):
        ok = m >= -1.0
    elif kind == "posterize":
        ok = float(m).is_integer() and 0 <= m <= 8
    elif kind == "sharpness":
        ok = 0.0 <= m <= 1.0
    elif kind == "gaussian_blur":
        ok = float(m).is_integer() and m >= 1 and int(m) % 2 == 1
    elif kind == "gaussian_noise":
        ok = m >= 0.0
    elif kind == "scale":
        ok = m > 0.0
    elif kind in ("translate_x", "translate_y"):
        ok = -100.0 <= m <= 100.0
    elif kind in ("shear_x", "shear_y"):
        ok = -90.0 < m < 90.0
    if not ok:
        raise MagnitudeOutOfBound(f"{kind}: magnitude {m} outside its valid domain")


# --- pixel space ------------------------------------------------------------


def gaussian_sigma(ksize: int) -> float:
    return 0.3 * ((ksize - 1) * 0.5 - 1) + 0.8


def gaussian_kernel1d(ksize: int) -> np.ndarray:
    sigma = gaussian_sigma(ksize)
    x = np.arange(ksize, dtype=np.float64) - (ksize - 1) / 2
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode="edge")
    n = arr.shape[axis]
    out = np.zeros_like(arr)
    for i, w in enumerate(kernel):
        out += w * np.take(padded, np.arange(i, i + n), axis=axis)
    return out


def gaussian_blur(arr: np.ndarray, ksize: int) -> np.ndarray:
    """Separable Gaussian filter with replicated borders, float in/out."""
    k = gaussian_kernel1d(ksize)
    return _convolve_axis(_convolve_axis(arr, k, 0), k, 1)


def sharpen(arr: np.ndarray) -> np.ndarray:
    """3x3 sharpening filter with replicated borders, unclamped float output."""
    h, w = arr.shape[:2]
    padded = np.pad(arr, ((1, 1), (1, 1), (0, 0)), mode="edge")
    out = 9.0 * arr
    for dy in range(3):
        for dx in range(3):
            if dy == 1 and dx == 1:
                continue
            out -= padded[dy : dy + h, dx : dx + w]
    return out


def apply_pixel(spec: OpSpec, image: Image, rng: np.random.Generator | None = None) -> Image:
    """Apply a pixel-space op and return a new Image of the same shape.

    For gaussian_noise the noise comes from `rng` if given, otherwise from a
    generator seeded with `spec.noise_seed`.
    """
    if spec.kind not in PIXEL_SPACE:
        raise UnknownOperation(f"{spec.kind!r} is not a pixel-space operation")
    validate_magnitude(spec)
    if not spec.applied:
        return Image(image.array.copy())
    m = spec.magnitude
    v = image.array
    kind = spec.kind
    if kind == "posterize":
        keep = (0xFF << (8 - int(m))) & 0xFF
        return Image(v & np.uint8(keep))
    src = v.astype(np.float64)
    if kind == "brightness":
        out = src * (1.0 + m)
    elif kind == "contrast":
        out = (src - 127.5) * (1.0 + m) + 127.5
    elif kind == "sharpness":
        out = (1.0 - m) * src + m * sharpen(src)
    elif kind == "gaussian_blur":
        out = gaussian_blur(src, int(m))
    else:
        if rng is None:
            rng = np.random.default_rng(spec.noise_seed)
        out = src + rng.normal(0.0, math.sqrt(m), size=src.shape)
    return Image(round_clamp(out))


# --- spatial space ----------------------------------------------------------


def inverse_matrix(spec: OpSpec, width: int, height: int) -> np.ndarray:
    """2x3 matrix mapping output pixel coordinates to source coordinates.

    Positive rotation turns the content counter-clockwise as displayed.
    Positive translation moves content right/down; positive shear_x moves
    rows below the centre to the right.
    """
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    kind = spec.kind
    m = spec.magnitude
    if not spec.applied:
        a = np.eye(2)
        t = np.zeros(2)
    elif kind == "hflip":
        a = np.array([[-1.0, 0.0], [0.0, 1.0]])
        t = np.array([width - 1.0, 0.0])
    elif kind == "vflip":
        a = np.array([[1.0, 0.0], [0.0, -1.0]])
        t = np.array([0.0, height - 1.0])
    elif kind == "translate_x":
        a = np.eye(2)
        t = np.array([-(m / 100.0) * width, 0.0])
    elif kind == "translate_y":
        a = np.eye(2)
        t = np.array([0.0, -(m / 100.0) * height])
    else:
        if kind == "rotate":
            th = math.radians(m)
            c, s = math.cos(th), math.sin(th)
            a = np.array([[c, -s], [s, c]])
        elif kind == "scale":
            a = np.array([[1.0 / m, 0.0], [0.0, 1.0 / m]])
        elif kind == "shear_x":
            a = np.array([[1.0, -math.tan(math.radians(m))], [0.0, 1.0]])
        elif kind == "shear_y":
            a = np.array([[1.0, 0.0], [-math.tan(math.radians(m)), 1.0]])
        else:
            raise UnknownOperation(f"{kind!r} is not a spatial operation")
        # rotate/scale/shear about the frame centre
        t = np.array([cx, cy]) - a @ np.array([cx, cy])
    return np.hstack([a, t[:, None]])


def source_grid(matrix: np.ndarray, width: int, height: int):
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    sx = matrix[0, 0] * xs + matrix[0, 1] * ys + matrix[0, 2]
    sy = matrix[1, 0] * xs + matrix[1, 1] * ys + matrix[1, 2]
    return sx, sy


def _gather(arr: np.ndarray, xi: np.ndarray, yi: np.ndarray) -> np.ndarray:
    h, w = arr.shape[:2]
    inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    vals = arr[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
    if arr.ndim == 3:
        inside = inside[..., None]
    return np.where(inside, vals, 0)


def warp_bilinear(arr: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Bilinear sampling of an (H, W, C) float array; outside reads are 0."""
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    x0 = x0.astype(np.intp)
    y0 = y0.astype(np.intp)
    p00 = _gather(arr, x0, y0)
    p01 = _gather(arr, x0 + 1, y0)
    p10 = _gather(arr, x0, y0 + 1)
    p11 = _gather(arr, x0 + 1, y0 + 1)
    return ((1.0 - fx) * (1.0 - fy)) * p00 + (fx * (1.0 - fy)) * p01 + ((1.0 - fx) * fy) * p10 + (fx * fy) * p11


def warp_nearest(arr: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    xi = np.floor(sx + 0.5).astype(np.intp)
    yi = np.floor(sy + 0.5).astype(np.intp)
    return _gather(arr, xi, yi)


def apply_spatial(spec: OpSpec, image: Image, mask: Mask | None = None) -> tuple[Image, Mask | None]:
    """Apply one geometric map to an image and, if given, its mask."""
    if spec.kind not in SPATIAL_SPACE:
        raise UnknownOperation(f"{spec.kind!r} is not a spatial operation")
    validate_magnitude(spec)
    check_pair(image, mask)
    if not spec.applied:
        return Image(image.array.copy()), None if mask is None else Mask(mask.array.copy())
    if spec.kind == "hflip":
        out = Image(image.array[:, ::-1])
        return out, None if mask is None else Mask(mask.array[:, ::-1])
    if spec.kind == "vflip":
        out = Image(image.array[::-1])
        return out, None if mask is None else Mask(mask.array[::-1])
    h, w = image.height, image.width
    sx, sy = source_grid(inverse_matrix(spec, w, h), w, h)
    out = Image(round_clamp(warp_bilinear(image.array.astype(np.float64), sx, sy)))
    if mask is None:
        return out, None
    return out, Mask(warp_nearest(mask.array, sx, sy))


def apply_op(spec: OpSpec, image: Image, mask: Mask | None = None) -> tuple[Image, Mask | None]:
    """Apply any op; pixel ops pass the mask through unchanged."""
    if spec.is_pixel:
        check_pair(image, mask)
        return apply_pixel(spec, image), mask
    return apply_spatial(spec, image, mask)


def apply_plan(ops, image: Image, mask: Mask | None = None) -> tuple[Image, Mask | None]:
    for spec in ops:
        image, mask = apply_op(spec, image, mask)
    return image, mask
