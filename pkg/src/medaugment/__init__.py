"""MedAugment: branch-based automatic data augmentation for medical images."""

__version__ = "0.1.0"

from .image_core import Image, Mask, load_image, load_mask, resize, resize_mask, save_image, save_mask
from .level_map import MagnitudeBound, magnitude_bound, odd_ceiling, op_probability
from .ops import ALL_OPS, PIXEL_SPACE, SPATIAL_SPACE, OpSpec, apply_pixel, apply_spatial
from .sampler import (
    STRATEGIES,
    AugConfig,
    BranchPlan,
    Strategy,
    derive_stream,
    materialize,
    plan_image,
    sample_branch_plan,
    sample_strategies,
)
from .pipeline import (
    DatasetManifest,
    Sample,
    SplitAssignment,
    augment_dataset,
    augment_sample,
    scan_dataset,
    split_dataset,
)

__all__ = [
    "ALL_OPS",
    "PIXEL_SPACE",
    "SPATIAL_SPACE",
    "STRATEGIES",
    "AugConfig",
    "BranchPlan",
    "DatasetManifest",
    "Image",
    "MagnitudeBound",
    "Mask",
    "OpSpec",
    "Sample",
    "SplitAssignment",
    "Strategy",
    "apply_pixel",
    "apply_spatial",
    "augment_dataset",
    "augment_sample",
    "derive_stream",
    "load_image",
    "load_mask",
    "magnitude_bound",
    "materialize",
    "odd_ceiling",
    "op_probability",
    "plan_image",
    "resize",
    "resize_mask",
    "sample_branch_plan",
    "sample_strategies",
    "save_image",
    "save_mask",
    "scan_dataset",
    "split_dataset",
]
