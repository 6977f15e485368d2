"""Mapping from the augmentation level l to magnitude bounds and probability.

Bounds are computed from integer numerators (e.g. 4*l/100 rather than
0.04*l) so that every value is the correctly rounded float of the decimal it
stands for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnknownOperation, ValidationError
from .ops import ALL_OPS, NO_MAGNITUDE

LEVELS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class MagnitudeBound:
    """Sampling range for one op at one level.

    For signed ops the sampled value is u * sign with u uniform in
    [lower, upper] and sign uniform in {-1, +1}. `integer_odd` marks the blur
    kernel, which is drawn from the odd integers in [lower, upper].
    Flips carry ``lower = upper = None``.
    """

    kind: str
    lower: float | int | None
    upper: float | int | None
    is_signed: bool = False
    integer_odd: bool = False

    @property
    def has_magnitude(self) -> bool:
        return self.lower is not None

    @property
    def width(self) -> float:
        if not self.has_magnitude:
            return 0.0
        return self.upper - self.lower

    def contains(self, magnitude) -> bool:
        if not self.has_magnitude:
            return magnitude is None
        if magnitude is None:
            return False
        value = abs(magnitude) if self.is_signed else magnitude
        if self.integer_odd and (not float(value).is_integer() or int(value) % 2 == 0):
            return False
        return self.lower <= value <= self.upper


def check_level(level: int) -> int:
    if isinstance(level, bool) or not isinstance(level, (int, float)) or level not in LEVELS:
        raise ValidationError(f"augmentation level must be one of {LEVELS}, got {level!r}")
    return int(level)


def odd_ceiling(x: float) -> int:
    """Smallest odd integer that is >= ceil(x)."""
    if not x > 0:
        raise ValidationError(f"odd_ceiling needs x > 0, got {x}")
    c = math.ceil(x)
    return c if c % 2 == 1 else c + 1


def posterize_bits(level: int) -> int:
    return math.floor((80 - 8 * level) / 10)


def magnitude_bound(kind: str, level: int) -> MagnitudeBound:
    """Table of per-op magnitude ranges as a function of the level."""
    l = check_level(level)
    if kind not in ALL_OPS:
        raise UnknownOperation(f"unknown operation {kind!r}")
    if kind in NO_MAGNITUDE:
        return MagnitudeBound(kind, None, None)
    if kind in ("brightness", "contrast"):
        return MagnitudeBound(kind, 0.0, 4 * l / 100, is_signed=True)
    if kind == "posterize":
        bits = posterize_bits(l)
        return MagnitudeBound(kind, bits, bits)
    if kind == "sharpness":
        return MagnitudeBound(kind, 4 * l / 100, l / 10)
    if kind == "gaussian_blur":
        return MagnitudeBound(kind, 3, odd_ceiling((30 + 8 * l) / 10), integer_odd=True)
    if kind == "gaussian_noise":
        return MagnitudeBound(kind, float(2 * l), float(10 * l))
    if kind == "rotate":
        return MagnitudeBound(kind, 0.0, float(4 * l), is_signed=True)
    if kind == "scale":
        return MagnitudeBound(kind, (100 - 4 * l) / 100, (100 + 4 * l) / 100)
    if kind in ("translate_x", "translate_y"):
        return MagnitudeBound(kind, 0.0, float(2 * l), is_signed=True)
    # shear_x / shear_y, in degrees
    return MagnitudeBound(kind, 0.0, 2 * l / 100, is_signed=True)


def op_probability(level: int) -> float:
    """Shared application probability, 0.2 * l."""
    return 2 * check_level(level) / 10
