"""Dataset scanning, stratified splitting and batch augmentation.

Input layouts:

    classification:  root/<class>/<file>.{png,jpg,jpeg}
    segmentation:    root/images/<stem>.* paired with root/masks/<stem>.*

Augmented output mirrors the input layout under the output root, with
``<stem>_b<j>.png`` for branch j and ``<stem>_orig.png`` for the pass-through.
Alongside the images the run writes ``run_metadata.json`` and
``manifest.json``; while a run is in progress it also keeps an append-only
``journal.jsonl`` that lets an interrupted run resume.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import shutil
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable

from . import __version__
from .errors import (
    EmptyDataset,
    ImageIOError,
    MedAugmentError,
    MixedLayout,
    NonTrainSplit,
    UnpairedMask,
    ValidationError,
)
from .image_core import (
    Image,
    Mask,
    check_pair,
    is_image_file,
    load_image,
    load_mask,
    resize,
    resize_mask,
    save_image,
    save_mask,
)
from .ops import apply_plan
from .sampler import STREAM_VERSION, AugConfig, BranchPlan, plan_image

log = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")
METADATA_FILE = "run_metadata.json"
MANIFEST_FILE = "manifest.json"
JOURNAL_FILE = "journal.jsonl"


@dataclass(frozen=True)
class Sample:
    image_path: Path
    mask_path: Path | None = None
    class_label: str | None = None
    index: int = 0

    @property
    def stem(self) -> str:
        return self.image_path.stem


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    task: str
    samples: tuple[Sample, ...]

    @property
    def class_set(self) -> frozenset[str]:
        return frozenset(s.class_label for s in self.samples if s.class_label is not None)

    @property
    def split(self) -> str | None:
        """`train`/`val`/`test` when the root is a split directory."""
        name = self.root.name
        return name if name in SPLIT_NAMES else None

    def __len__(self):
        return len(self.samples)


@dataclass
class SplitAssignment:
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]
    ratios: tuple[float, float, float]
    degenerate: list[str] = field(default_factory=list)

    def parts(self) -> dict[str, list[Sample]]:
        return {"train": self.train, "val": self.val, "test": self.test}

    def class_counts(self) -> dict[str, Counter]:
        return {name: Counter(s.class_label for s in part) for name, part in self.parts().items()}


# --- scanning -----------------------------------------------------------------


def _visible(path: Path) -> bool:
    return not path.name.startswith(".")


def _image_files(folder: Path) -> list[Path]:
    return sorted(
        (p for p in folder.iterdir() if p.is_file() and _visible(p) and is_image_file(p.name)),
        key=lambda p: p.name,
    )


def _by_stem(files: list[Path], where: Path) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for p in files:
        if p.stem in out:
            raise ValidationError(f"{where}: duplicate stem {p.stem!r} ({out[p.stem].name}, {p.name})")
        out[p.stem] = p
    return out


def scan_dataset(root, task: str) -> DatasetManifest:
    """Enumerate a dataset tree; samples are ordered by relative path."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root}: not a directory")
    if task == "classification":
        subdirs = sorted((p for p in root.iterdir() if p.is_dir() and _visible(p)), key=lambda p: p.name)
        loose = _image_files(root)
        if loose and subdirs:
            raise MixedLayout(f"{root}: image files next to class folders ({loose[0].name})")
        if loose:
            raise MixedLayout(f"{root}: classification data must live in one folder per class")
        found = []
        for d in subdirs:
            files = _image_files(d)
            _by_stem(files, d)
            found.extend((f"{d.name}/{f.name}", Sample(f, None, d.name)) for f in files)
    elif task == "segmentation":
        img_dir, mask_dir = root / "images", root / "masks"
        if not (img_dir.is_dir() and mask_dir.is_dir()):
            raise MixedLayout(f"{root}: segmentation data needs images/ and masks/ folders")
        images = _by_stem(_image_files(img_dir), img_dir)
        masks = _by_stem(_image_files(mask_dir), mask_dir)
        lonely = sorted(set(images) ^ set(masks))
        if lonely:
            raise UnpairedMask(f"{root}: stems without a counterpart: {', '.join(lonely[:10])}")
        found = [(f"images/{images[s].name}", Sample(images[s], masks[s], None)) for s in images]
    else:
        raise ValidationError(f"unknown task {task!r}")
    if not found:
        raise EmptyDataset(f"{root}: no images found")
    found.sort(key=lambda item: item[0])
    samples = tuple(
        Sample(s.image_path, s.mask_path, s.class_label, i) for i, (_, s) in enumerate(found)
    )
    return DatasetManifest(root, task, samples)


# --- splitting ----------------------------------------------------------------


def normalize_ratios(ratios) -> tuple[float, float, float]:
    r = [float(x) for x in ratios]
    if len(r) == 2:
        r.append(0.0)
    if len(r) != 3:
        raise ValidationError(f"expected 2 or 3 split ratios, got {len(r)}")
    if any(x < 0 or not math.isfinite(x) for x in r):
        raise ValidationError(f"split ratios must be non-negative, got {r}")
    if abs(sum(r) - 1.0) > 1e-9:
        raise ValidationError(f"split ratios must sum to 1, got {sum(r):.6g}")
    return tuple(r)


def largest_remainder(n: int, ratios) -> list[int]:
    """Integer counts summing to n, each within 1 of ratio * n."""
    quotas = [r * n for r in ratios]
    counts = [math.floor(q + 1e-9) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def split_dataset(manifest: DatasetManifest, ratios, seed: int) -> SplitAssignment:
    """Stratified train/val/test split.

    Each class is shuffled with a generator seeded from (seed, class name) and
    cut at largest-remainder boundaries. A class with fewer samples than there
    are non-empty splits is logged as degenerate and kept whole in train.
    """
    ratios = normalize_ratios(ratios)
    groups: dict[str | None, list[Sample]] = defaultdict(list)
    for s in manifest.samples:
        groups[s.class_label].append(s)
    nonzero = sum(r > 0 for r in ratios)
    parts: list[list[Sample]] = [[], [], []]
    degenerate = []
    for label in sorted(groups, key=lambda k: "" if k is None else k):
        members = groups[label]
        if len(members) < nonzero:
            log.warning("class %r has %d samples for %d splits; keeping it in train", label, len(members), nonzero)
            degenerate.append(label)
            parts[0].extend(members)
            continue
        shuffled = list(members)
        random.Random(f"{seed}/{label}").shuffle(shuffled)
        start = 0
        for k, count in enumerate(largest_remainder(len(shuffled), ratios)):
            parts[k].extend(shuffled[start : start + count])
            start += count
    for part in parts:
        part.sort(key=lambda s: s.index)
    return SplitAssignment(parts[0], parts[1], parts[2], ratios, degenerate)


def _relative(sample: Sample, manifest: DatasetManifest) -> tuple[Path, Path | None]:
    img = sample.image_path.relative_to(manifest.root)
    mask = sample.mask_path.relative_to(manifest.root) if sample.mask_path is not None else None
    return img, mask


def _place(src: Path, dst: Path, link: bool) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    if dst.exists() or dst.is_symlink():
        dst.unlink()
    if link:
        os.symlink(src.resolve(), dst)
    else:
        shutil.copyfile(src, dst)


def write_split(assignment: SplitAssignment, manifest: DatasetManifest, out_root, link: bool = False) -> None:
    """Materialise train/, val/, test/ trees that mirror the input layout."""
    out_root = Path(out_root)
    try:
        for name, part in assignment.parts().items():
            (out_root / name).mkdir(parents=True, exist_ok=True)
            for s in part:
                img_rel, mask_rel = _relative(s, manifest)
                _place(s.image_path, out_root / name / img_rel, link)
                if mask_rel is not None:
                    _place(s.mask_path, out_root / name / mask_rel, link)
    except OSError as exc:
        raise ImageIOError(str(exc), getattr(exc, "filename", None)) from exc


# --- augmentation -------------------------------------------------------------


def load_sample(sample: Sample, config: AugConfig) -> tuple[Image, Mask | None]:
    """Load one sample at the working resolution."""
    image = load_image(sample.image_path)
    mask = None
    if config.task == "segmentation":
        if sample.mask_path is None:
            raise ValidationError(f"{sample.image_path}: segmentation sample without a mask")
        mask = load_mask(sample.mask_path)
        check_pair(image, mask)
    if config.resize is not None:
        w, h = config.resize
        image = resize(image, w, h)
        if mask is not None:
            mask = resize_mask(mask, w, h)
    return image, mask


def augment_pair(
    image: Image, mask: Mask | None, config: AugConfig, image_index: int
) -> tuple[list[BranchPlan], list[tuple[Image, Mask | None]]]:
    """Run every branch on an in-memory pair; the original comes last when kept."""
    check_pair(image, mask)
    plans = plan_image(config, image_index)
    outputs = [apply_plan(plan.ops, image, mask) for plan in plans]
    if config.include_original:
        outputs.append((image, mask))
    return plans, outputs


def augment_sample(sample: Sample, config: AugConfig) -> list[tuple[Image, Mask | None]]:
    image, mask = load_sample(sample, config)
    return augment_pair(image, mask, config, sample.index)[1]


def output_names(stem: str, config: AugConfig) -> list[str]:
    names = [f"{stem}_b{j}.png" for j in range(config.branches)]
    if config.include_original:
        names.append(f"{stem}_orig.png")
    return names


def _targets(sample: Sample, config: AugConfig) -> list[tuple[str, str | None]]:
    """Relative (image, mask) output paths for one sample."""
    names = output_names(sample.stem, config)
    if config.task == "segmentation":
        return [(f"images/{n}", f"masks/{n}") for n in names]
    return [(f"{sample.class_label}/{n}", None) for n in names]


def _process_sample(sample: Sample, config: AugConfig, out_root: Path) -> dict:
    try:
        targets = _targets(sample, config)
        outputs = augment_sample(sample, config)
        for (img_rel, mask_rel), (image, mask) in zip(targets, outputs):
            save_image(image, out_root / img_rel)
            if mask_rel is not None:
                save_mask(mask, out_root / mask_rel)
    except (MedAugmentError, OSError) as exc:
        return {"index": sample.index, "error": f"{type(exc).__name__}: {exc}", "path": str(sample.image_path)}
    return {"index": sample.index, "outputs": targets}


def run_metadata(config: AugConfig) -> dict:
    meta = asdict(config)
    meta["resize"] = list(config.resize) if config.resize is not None else None
    meta["tool_version"] = __version__
    meta["stream_version"] = STREAM_VERSION
    return meta


@dataclass
class AugmentResult:
    manifest: DatasetManifest
    inputs: int
    written: int
    failures: list[dict]
    resumed: int = 0


def _read_journal(path: Path) -> dict[int, dict]:
    done = {}
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                break  # torn final line from an interrupted write
            if "outputs" in entry:
                done[entry["index"]] = entry
    return done


def augment_dataset(
    manifest: DatasetManifest,
    config: AugConfig,
    out_root,
    workers: int = 1,
    allow_nontrain: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> AugmentResult:
    """Augment every sample of `manifest` into `out_root`.

    Per-sample failures (unreadable or corrupt files) are collected in the
    result and leave the journal in place so a rerun resumes where this one
    stopped. Output bytes do not depend on `workers`.
    """
    if not manifest.samples:
        raise EmptyDataset(f"{manifest.root}: no samples to augment")
    if manifest.task != config.task:
        raise ValidationError(f"manifest task {manifest.task!r} does not match config task {config.task!r}")
    if manifest.split in ("val", "test") and not allow_nontrain:
        raise NonTrainSplit(
            f"{manifest.root} looks like the {manifest.split} split; augmentation is for training data"
        )
    out_root = Path(out_root)
    meta = run_metadata(config)
    meta_path = out_root / METADATA_FILE
    journal_path = out_root / JOURNAL_FILE
    try:
        out_root.mkdir(parents=True, exist_ok=True)
        done = {}
        if journal_path.exists() and meta_path.exists():
            if json.loads(meta_path.read_text(encoding="utf-8")) == meta:
                done = _read_journal(journal_path)
            else:
                journal_path.unlink()
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ImageIOError(str(exc), out_root) from exc

    todo = [s for s in manifest.samples if s.index not in done]
    results = dict(done)
    failures = []
    work = partial(_process_sample, config=config, out_root=out_root)
    with open(journal_path, "a", encoding="utf-8") as journal:
        if workers > 1 and len(todo) > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            stream = pool.map(work, todo, chunksize=max(1, len(todo) // (workers * 8)))
        else:
            pool = None
            stream = map(work, todo)
        try:
            for n, entry in enumerate(stream, start=1):
                if "error" in entry:
                    failures.append(entry)
                    log.error("%s: %s", entry["path"], entry["error"])
                else:
                    results[entry["index"]] = entry
                    journal.write(json.dumps(entry) + "\n")
                    journal.flush()
                if progress is not None and (n % 100 == 0 or n == len(todo)):
                    progress(n, len(todo))
        finally:
            if pool is not None:
                pool.shutdown()

    by_index = {s.index: s for s in manifest.samples}
    out_samples = []
    listing = []
    for index in sorted(results):
        src = by_index[index]
        for img_rel, mask_rel in results[index]["outputs"]:
            out_samples.append(
                Sample(out_root / img_rel, None if mask_rel is None else out_root / mask_rel, src.class_label)
            )
            listing.append(
                {
                    "image": img_rel,
                    "mask": mask_rel,
                    "class": src.class_label,
                    "source": src.image_path.relative_to(manifest.root).as_posix(),
                }
            )
    listing.sort(key=lambda e: e["image"])
    out_samples.sort(key=lambda s: s.image_path.as_posix())
    out_samples = [Sample(s.image_path, s.mask_path, s.class_label, i) for i, s in enumerate(out_samples)]
    doc = {"task": config.task, "count": len(listing), "samples": listing}
    (out_root / MANIFEST_FILE).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    if not failures:
        journal_path.unlink()
    return AugmentResult(
        DatasetManifest(out_root, config.task, tuple(out_samples)),
        inputs=len(manifest.samples),
        written=len(out_samples),
        failures=failures,
        resumed=len(done),
    )
