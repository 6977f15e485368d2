"""Pixel buffers, PNG/JPEG codecs and preprocessing resize."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import (
    CorruptStream,
    DimensionMismatch,
    ImageIOError,
    UnsupportedFormat,
    ValidationError,
    ZeroDimension,
)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


@dataclass(frozen=True, eq=False)
class Image:
    """An 8-bit image stored as an (H, W, C) uint8 array with C in {1, 3}."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValidationError(f"image array must be HxW, HxWx1 or HxWx3, got {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValidationError("image intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "array", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def channels(self) -> int:
        return self.array.shape[2]

    @property
    def data(self) -> bytes:
        """Row-major interleaved pixel bytes."""
        return self.array.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.array.shape == other.array.shape and np.array_equal(self.array, other.array)

    def __repr__(self):
        return f"Image(width={self.width}, height={self.height}, channels={self.channels})"


@dataclass(frozen=True, eq=False)
class Mask:
    """A single-channel (H, W) uint8 label map; 0 is background."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim != 2:
            raise ValidationError(f"mask array must be HxW, got {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValidationError("mask labels must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "array", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def data(self) -> bytes:
        return self.array.tobytes()

    @property
    def labels(self) -> frozenset[int]:
        return frozenset(int(v) for v in np.unique(self.array))

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.array.shape == other.array.shape and np.array_equal(self.array, other.array)

    def __repr__(self):
        return f"Mask(width={self.width}, height={self.height}, labels={sorted(self.labels)})"


def check_pair(image: Image, mask: Mask | None) -> None:
    if mask is not None and (mask.width, mask.height) != (image.width, image.height):
        raise DimensionMismatch(
            f"mask is {mask.width}x{mask.height} but image is {image.width}x{image.height}"
        )


def _open(path) -> PILImage.Image:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file")
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
    except OSError as exc:
        raise ImageIOError(str(exc), path) from exc
    if not (head.startswith(_PNG_MAGIC) or head.startswith(_JPEG_MAGIC)):
        raise UnsupportedFormat("not a PNG or JPEG file", path)
    try:
        pil = PILImage.open(path)
        pil.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptStream(f"cannot decode: {exc}", path) from exc
    return pil


def load_image(path) -> Image:
    """Decode a PNG or JPEG file.

    Grayscale sources (including palette images with a gray palette) give a
    single-channel Image; everything else is converted to RGB. Alpha is dropped.

    Raises:
        FileNotFoundError: `path` does not exist.
        UnsupportedFormat: the file is not PNG/JPEG or uses a 16-bit/float mode.
        CorruptStream: the header is recognised but decoding fails.
    """
    pil = _open(path)
    mode = pil.mode
    if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise UnsupportedFormat(f"unsupported pixel mode {mode}", path)
    if mode in ("L", "LA", "1"):
        arr = np.asarray(pil.convert("L"))
    elif mode == "P" and _gray_palette(pil):
        arr = np.asarray(pil.convert("L"))
    else:
        arr = np.asarray(pil.convert("RGB"))
    return Image(arr)


def _gray_palette(pil: PILImage.Image) -> bool:
    rgb = np.asarray(pil.convert("RGB"))
    return bool(np.all(rgb[..., 0] == rgb[..., 1]) and np.all(rgb[..., 1] == rgb[..., 2]))


def load_mask(path) -> Mask:
    """Decode a label mask.

    Palette PNGs keep their palette indices as labels. Multi-channel files are
    accepted only when all channels agree.
    """
    pil = _open(path)
    if pil.mode == "P":
        return Mask(np.asarray(pil))
    if pil.mode in ("L", "1", "LA"):
        return Mask(np.asarray(pil.convert("L")))
    if pil.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise UnsupportedFormat(f"unsupported mask mode {pil.mode}", path)
    rgb = np.asarray(pil.convert("RGB"))
    if not (np.array_equal(rgb[..., 0], rgb[..., 1]) and np.array_equal(rgb[..., 1], rgb[..., 2])):
        raise UnsupportedFormat("color mask with differing channels", path)
    return Mask(rgb[..., 0])


def _save_png(arr: np.ndarray, path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        PILImage.fromarray(arr).save(path, format="PNG", compress_level=6)
    except OSError as exc:
        raise ImageIOError(str(exc), path) from exc


def save_image(image: Image, path) -> None:
    """Write `image` as PNG, creating parent directories."""
    arr = image.array[:, :, 0] if image.channels == 1 else image.array
    _save_png(arr, path)


def save_mask(mask: Mask, path) -> None:
    _save_png(mask.array, path)


def _source_coords(dst: int, src: int) -> np.ndarray:
    # pixel centres: src = (dst + 0.5) * scale - 0.5
    scale = src / dst
    return (np.arange(dst, dtype=np.float64) + 0.5) * scale - 0.5


def _linear_weights(dst: int, src: int):
    coords = np.clip(_source_coords(dst, src), 0.0, src - 1)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, src - 1)
    frac = coords - lo
    return lo, hi, frac


def _nearest_index(dst: int, src: int) -> np.ndarray:
    idx = np.floor((np.arange(dst, dtype=np.float64) + 0.5) * (src / dst)).astype(np.intp)
    return np.clip(idx, 0, src - 1)


def round_clamp(values: np.ndarray) -> np.ndarray:
    """Round half away from zero, clamp to [0, 255], cast to uint8."""
    rounded = np.sign(values) * np.floor(np.abs(values) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def _check_target(target_w: int, target_h: int) -> None:
    if target_w < 1 or target_h < 1:
        raise ZeroDimension(f"target size must be at least 1x1, got {target_w}x{target_h}")


def resize(image: Image, target_w: int, target_h: int) -> Image:
    """Bilinear resize with pixel-centre alignment and edge clamping."""
    _check_target(target_w, target_h)
    if (target_w, target_h) == (image.width, image.height):
        return Image(image.array.copy())
    src = image.array.astype(np.float64)
    y0, y1, fy = _linear_weights(target_h, image.height)
    x0, x1, fx = _linear_weights(target_w, image.width)
    fy = fy[:, None, None]
    rows = src[y0] * (1.0 - fy) + src[y1] * fy
    fx = fx[None, :, None]
    out = rows[:, x0] * (1.0 - fx) + rows[:, x1] * fx
    return Image(round_clamp(out))


def resize_mask(mask: Mask, target_w: int, target_h: int) -> Mask:
    """Nearest-neighbour resize; never creates labels absent from the input."""
    _check_target(target_w, target_h)
    yi = _nearest_index(target_h, mask.height)
    xi = _nearest_index(target_w, mask.width)
    return Mask(mask.array[yi[:, None], xi[None, :]])


def is_image_file(name: str | os.PathLike) -> bool:
    return Path(name).suffix.lower() in IMAGE_SUFFIXES


IMAGE_SUFFIXES = frozenset({".png", ".jpg", ".jpeg"})
