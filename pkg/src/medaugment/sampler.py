"""Branch sampling: strategy, operation choice/order, magnitudes.

Every image gets its own strategy assignment and, per branch, its own ops,
order and magnitudes. All randomness comes from streams derived from
``(seed, image_index, branch_index)``, so the plans for an image do not depend
on which other images are processed, in what order, or by how many workers.

Stream derivation (stable, version 1):
    key = splitmix64(splitmix64(splitmix64(seed) ^ image_index) ^ branch_index)
    stream = numpy Generator over Philox with that 64-bit key, counter 0
with every input reduced modulo 2**64 first. The strategy draw for an image
uses branch_index = STRATEGY_BRANCH.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .level_map import check_level, magnitude_bound, op_probability
from .ops import ALL_OPS, PIXEL_SPACE, SPATIAL_SPACE, OpSpec

STREAM_VERSION = 1
STRATEGY_BRANCH = -1
TASKS = ("classification", "segmentation")
SPACE_MODES = ("split", "merged")

_MASK64 = (1 << 64) - 1


class Strategy(NamedTuple):
    n_pixel: int
    n_spatial: int

    def __str__(self):
        return f"{self.n_pixel}+{self.n_spatial}"


STRATEGIES = (Strategy(1, 2), Strategy(0, 3), Strategy(1, 1), Strategy(0, 2))


@dataclass(frozen=True)
class AugConfig:
    """Run parameters.

    `resize` is the working resolution (width, height) applied before
    augmentation, or None to keep source sizes. ``branches=1`` with
    ``include_original=False`` is one-to-one augmentation.
    """

    level: int = 5
    branches: int = 4
    include_original: bool = True
    seed: int = 8
    task: str = "classification"
    space_mode: str = "split"
    resize: tuple[int, int] | None = (224, 224)

    def __post_init__(self):
        check_level(self.level)
        object.__setattr__(self, "level", int(self.level))
        if isinstance(self.branches, bool) or not isinstance(self.branches, int) or self.branches < 1:
            raise ValidationError(f"branches must be an integer >= 1, got {self.branches!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.space_mode not in SPACE_MODES:
            raise ValidationError(f"space_mode must be one of {SPACE_MODES}, got {self.space_mode!r}")
        if self.resize is not None:
            w, h = self.resize
            if int(w) < 1 or int(h) < 1:
                raise ValidationError(f"resize must be at least 1x1, got {self.resize!r}")
            object.__setattr__(self, "resize", (int(w), int(h)))

    @property
    def one_to_one(self) -> bool:
        return self.branches == 1 and not self.include_original

    @property
    def outputs_per_image(self) -> int:
        return self.branches + int(self.include_original)


@dataclass(frozen=True)
class BranchPlan:
    branch_index: int
    ops: tuple[OpSpec, ...]
    strategy: Strategy
    materialized: bool = field(default=False, compare=False)

    @property
    def n_pixel(self) -> int:
        return sum(op.is_pixel for op in self.ops)

    def describe(self) -> str:
        body = " -> ".join(op.describe() for op in self.ops)
        return f"branch {self.branch_index} [{self.strategy}]: {body}"


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(seed: int, image_index: int, branch_index: int) -> int:
    h = _splitmix64(seed & _MASK64)
    h = _splitmix64(h ^ (image_index & _MASK64))
    return _splitmix64(h ^ (branch_index & _MASK64))


def derive_stream(seed: int, image_index: int, branch_index: int) -> np.random.Generator:
    """Independent reproducible generator for one (image, branch) task."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, image_index, branch_index)))


def sample_strategies(config: AugConfig, rng: np.random.Generator) -> list[Strategy]:
    """A permutation of the four strategies when N == 4, else N draws with replacement."""
    if config.branches == len(STRATEGIES):
        order = rng.permutation(len(STRATEGIES))
    else:
        order = rng.integers(0, len(STRATEGIES), size=config.branches)
    return [STRATEGIES[i] for i in order]


def sample_branch_plan(
    strategy: Strategy, config: AugConfig, rng: np.random.Generator, branch_index: int = 0
) -> BranchPlan:
    """Choose distinct op kinds for one branch and shuffle them.

    In merged space mode the strategy is ignored: 2 or 3 ops are drawn from
    all fourteen with no limit on pixel ops, and the plan records the counts
    it ended up with.
    """
    if config.space_mode == "merged":
        m = int(rng.integers(2, 4))
        kinds = [ALL_OPS[i] for i in rng.choice(len(ALL_OPS), size=m, replace=False)]
        n_pix = sum(k in PIXEL_SPACE for k in kinds)
        strategy = Strategy(n_pix, m - n_pix)
    else:
        if strategy not in STRATEGIES:
            raise ValidationError(f"strategy {strategy} is not one of {STRATEGIES}")
        pix = rng.choice(len(PIXEL_SPACE), size=strategy.n_pixel, replace=False)
        spa = rng.choice(len(SPATIAL_SPACE), size=strategy.n_spatial, replace=False)
        kinds = [PIXEL_SPACE[i] for i in pix] + [SPATIAL_SPACE[i] for i in spa]
    order = rng.permutation(len(kinds))
    ops = tuple(OpSpec(kinds[i]) for i in order)
    return BranchPlan(branch_index, ops, strategy)


def sample_magnitude(kind: str, level: int, rng: np.random.Generator):
    bound = magnitude_bound(kind, level)
    if not bound.has_magnitude:
        return None
    if bound.integer_odd:
        return int(rng.choice(np.arange(bound.lower, bound.upper + 1, 2)))
    if bound.lower == bound.upper:
        return bound.lower
    value = float(rng.uniform(bound.lower, bound.upper))
    if bound.is_signed and rng.random() < 0.5:
        value = -value
    return value


def materialize(plan: BranchPlan, config: AugConfig, rng: np.random.Generator) -> BranchPlan:
    """Attach magnitudes and apply the probability gate to every op."""
    p = op_probability(config.level)
    ops = []
    for op in plan.ops:
        magnitude = sample_magnitude(op.kind, config.level, rng)
        noise_seed = int(rng.integers(0, 2**63)) if op.kind == "gaussian_noise" else None
        applied = bool(rng.random() < p)
        ops.append(replace(op, magnitude=magnitude, noise_seed=noise_seed, applied=applied))
    return replace(plan, ops=tuple(ops), materialized=True)


def plan_image(config: AugConfig, image_index: int) -> list[BranchPlan]:
    """The N materialized branch plans for one image."""
    strategies = sample_strategies(config, derive_stream(config.seed, image_index, STRATEGY_BRANCH))
    plans = []
    for j, strategy in enumerate(strategies):
        rng = derive_stream(config.seed, image_index, j)
        plan = sample_branch_plan(strategy, config, rng, branch_index=j)
        plans.append(materialize(plan, config, rng))
    return plans
