"""Slow per-pixel reference implementations of every transform.

These are used by the test suite to cross-check the vectorised versions in
`ops`. They share no code with `ops` beyond the OpSpec type: coordinates are
computed from closed-form per-op formulas and convolutions are direct 2-D
sums, one pixel at a time.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UnknownOperation
from .image_core import Image, Mask, check_pair
from .ops import PIXEL_SPACE, SPATIAL_SPACE, OpSpec, validate_magnitude


def _round_clamp(x: float) -> int:
    r = math.floor(abs(x) + 0.5)
    r = r if x >= 0 else -r
    return min(255, max(0, r))


def _kernel2d(ksize: int) -> list[list[float]]:
    sigma = 0.3 * ((ksize - 1) * 0.5 - 1) + 0.8
    half = (ksize - 1) / 2
    g = [math.exp(-((i - half) ** 2) / (2 * sigma * sigma)) for i in range(ksize)]
    total = sum(g)
    g = [v / total for v in g]
    return [[a * b for b in g] for a in g]


def _pixel_ref(spec: OpSpec, image: Image, rng) -> Image:
    src = image.array
    h, w, c = src.shape
    out = np.zeros_like(src)
    m = spec.magnitude
    kind = spec.kind

    def at(y, x, ch):
        return float(src[min(max(y, 0), h - 1), min(max(x, 0), w - 1), ch])

    if kind == "gaussian_blur":
        kern = _kernel2d(int(m))
        r = int(m) // 2
    if kind == "gaussian_noise":
        if rng is None:
            rng = np.random.default_rng(spec.noise_seed)
        noise = rng.normal(0.0, math.sqrt(m), size=src.shape)

    for y in range(h):
        for x in range(w):
            for ch in range(c):
                v = float(src[y, x, ch])
                if kind == "brightness":
                    val = v * (1.0 + m)
                elif kind == "contrast":
                    val = (v - 127.5) * (1.0 + m) + 127.5
                elif kind == "posterize":
                    b = int(m)
                    out[y, x, ch] = (int(v) >> (8 - b) << (8 - b)) if b > 0 else 0
                    continue
                elif kind == "sharpness":
                    s = 0.0
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            weight = 9.0 if dy == 0 and dx == 0 else -1.0
                            s += weight * at(y + dy, x + dx, ch)
                    val = (1.0 - m) * v + m * s
                elif kind == "gaussian_blur":
                    val = 0.0
                    for dy in range(-r, r + 1):
                        for dx in range(-r, r + 1):
                            val += kern[dy + r][dx + r] * at(y + dy, x + dx, ch)
                else:
                    val = v + float(noise[y, x, ch])
                out[y, x, ch] = _round_clamp(val)
    return Image(out)


def _source_point(spec: OpSpec, x: int, y: int, w: int, h: int) -> tuple[float, float]:
    cx, cy = (w - 1) / 2, (h - 1) / 2
    m = spec.magnitude
    kind = spec.kind
    if kind == "hflip":
        return float(w - 1 - x), float(y)
    if kind == "vflip":
        return float(x), float(h - 1 - y)
    if kind == "translate_x":
        return x - (m / 100.0) * w, float(y)
    if kind == "translate_y":
        return float(x), y - (m / 100.0) * h
    dx, dy = x - cx, y - cy
    if kind == "rotate":
        th = math.radians(m)
        return cx + math.cos(th) * dx - math.sin(th) * dy, cy + math.sin(th) * dx + math.cos(th) * dy
    if kind == "scale":
        return cx + dx / m, cy + dy / m
    if kind == "shear_x":
        return cx + dx - math.tan(math.radians(m)) * dy, float(y)
    if kind == "shear_y":
        return float(x), cy + dy - math.tan(math.radians(m)) * dx
    raise UnknownOperation(kind)


def _spatial_ref(spec: OpSpec, image: Image, mask: Mask | None):
    src = image.array
    h, w, c = src.shape
    out = np.zeros_like(src)
    mout = None if mask is None else np.zeros_like(mask.array)

    def read(arr, yy, xx):
        if 0 <= xx < w and 0 <= yy < h:
            return arr[yy, xx]
        return None

    for y in range(h):
        for x in range(w):
            sx, sy = _source_point(spec, x, y, w, h)
            x0, y0 = math.floor(sx), math.floor(sy)
            fx, fy = sx - x0, sy - y0
            taps = (
                (y0, x0, (1.0 - fx) * (1.0 - fy)),
                (y0, x0 + 1, fx * (1.0 - fy)),
                (y0 + 1, x0, (1.0 - fx) * fy),
                (y0 + 1, x0 + 1, fx * fy),
            )
            for ch in range(c):
                acc = 0.0
                for yy, xx, wt in taps:
                    if 0 <= xx < w and 0 <= yy < h:
                        acc += wt * float(src[yy, xx, ch])
                out[y, x, ch] = _round_clamp(acc)
            if mout is not None:
                label = read(mask.array, math.floor(sy + 0.5), math.floor(sx + 0.5))
                mout[y, x] = 0 if label is None else label
    return Image(out), None if mout is None else Mask(mout)


def reference_oracle(spec: OpSpec, image: Image, mask: Mask | None = None, rng=None):
    """Direct per-pixel evaluation of `spec`; returns (image, mask)."""
    validate_magnitude(spec)
    check_pair(image, mask)
    if not spec.applied:
        return Image(image.array.copy()), mask
    if spec.kind in PIXEL_SPACE:
        return _pixel_ref(spec, image, rng), mask
    if spec.kind in SPATIAL_SPACE:
        return _spatial_ref(spec, image, mask)
    raise UnknownOperation(spec.kind)
