from pathlib import Path

import numpy as np
import pytest

from medaugment.image_core import Image, Mask, save_image, save_mask

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_image(rng, h, w, c=3) -> Image:
    return Image(rng.integers(0, 256, size=(h, w, c), dtype=np.uint8))


def random_mask(rng, h, w, n_labels=3) -> Mask:
    """Blocky label map that always contains background 0."""
    coarse = rng.integers(0, n_labels, size=(max(1, h // 4), max(1, w // 4)), dtype=np.uint8)
    arr = np.kron(coarse, np.ones((4, 4), dtype=np.uint8))[:h, :w]
    arr = np.pad(arr, ((0, h - arr.shape[0]), (0, w - arr.shape[1])))
    arr[0, 0] = 0
    return Mask(arr)


def make_classification_tree(root: Path, counts: dict, size=(40, 32), seed=0, suffix=".png") -> Path:
    rng = np.random.default_rng(seed)
    for label, n in counts.items():
        for i in range(n):
            save_image(random_image(rng, size[1], size[0]), root / label / f"img{i:03d}{suffix}")
    return root


def make_segmentation_tree(root: Path, n: int, size=(40, 32), seed=0) -> Path:
    rng = np.random.default_rng(seed)
    for i in range(n):
        save_image(random_image(rng, size[1], size[0], c=1), root / "images" / f"case{i:03d}.png")
        save_mask(random_mask(rng, size[1], size[0]), root / "masks" / f"case{i:03d}.png")
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
