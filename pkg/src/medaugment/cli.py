"""Command-line interface: ``medaugment split|augment|preview``.

Settings resolve as command-line flag > JSON config file (--config) >
MEDAUG_SEED environment variable (seed only) > built-in default.

Exit codes: 0 success, 1 usage, 2 layout/validation, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ImageIOError, MedAugmentError, ValidationError
from .image_core import Image, load_image, load_mask, resize, resize_mask, save_image
from .pipeline import (
    augment_dataset,
    augment_pair,
    normalize_ratios,
    scan_dataset,
    split_dataset,
    write_split,
)
from .sampler import SPACE_MODES, TASKS, AugConfig

EXIT_OK, EXIT_USAGE, EXIT_LAYOUT, EXIT_IO = 0, 1, 2, 3

DEFAULTS = {
    "split": {
        "input": None,
        "output": None,
        "ratios": [0.6, 0.2, 0.2],
        "seed": 8,
        "task": "classification",
        "link": False,
    },
    "augment": {
        "input": None,
        "output": None,
        "level": 5,
        "branches": 4,
        "seed": 8,
        "task": "classification",
        "no_original": False,
        "space_mode": "split",
        "workers": os.cpu_count() or 1,
        "resize": "224x224",
        "allow_nontrain": False,
    },
    "preview": {
        "input": None,
        "mask": None,
        "output": None,
        "level": 5,
        "seed": 8,
        "count": 4,
        "space_mode": "split",
        "resize": "224x224",
    },
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _help(text: str, command: str, key: str) -> str:
    default = DEFAULTS[command][key]
    if key == "seed":
        return f"{text} (default: $MEDAUG_SEED or {default})"
    if isinstance(default, list):
        default = " ".join(str(v) for v in default)
    return f"{text} (default: {default})"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="medaugment", description="MedAugment data augmentation for medical images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, command):
        # SUPPRESS keeps unset flags out of the namespace so config values can fill them
        p.add_argument("--config", help="flat JSON file whose keys mirror the flag names (default: none)")
        p.add_argument("--print-config", action="store_true", default=argparse.SUPPRESS,
                       help="print the fully resolved settings as JSON and exit (default: off)")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=_help("random seed", command, "seed"))

    p = sub.add_parser("split", help="stratified train/val/test split of a dataset tree")
    common(p, "split")
    p.add_argument("--input", default=argparse.SUPPRESS, help=_help("dataset root", "split", "input"))
    p.add_argument("--output", default=argparse.SUPPRESS, help=_help("destination for train/ val/ test/", "split", "output"))
    p.add_argument("--ratios", type=float, nargs="+", default=argparse.SUPPRESS,
                   help=_help("train val [test] fractions summing to 1", "split", "ratios"))
    p.add_argument("--task", choices=TASKS, default=argparse.SUPPRESS, help=_help("dataset layout", "split", "task"))
    p.add_argument("--link", action="store_true", default=argparse.SUPPRESS,
                   help=_help("symlink files instead of copying", "split", "link"))

    p = sub.add_parser("augment", help="augment a training set")
    common(p, "augment")
    p.add_argument("--input", default=argparse.SUPPRESS, help=_help("training set root", "augment", "input"))
    p.add_argument("--output", default=argparse.SUPPRESS, help=_help("output root", "augment", "output"))
    p.add_argument("--level", type=int, default=argparse.SUPPRESS, help=_help("augmentation level 1-5", "augment", "level"))
    p.add_argument("--branches", type=int, default=argparse.SUPPRESS, help=_help("augment branches N", "augment", "branches"))
    p.add_argument("--task", choices=TASKS, default=argparse.SUPPRESS, help=_help("dataset layout", "augment", "task"))
    p.add_argument("--no-original", action="store_true", default=argparse.SUPPRESS,
                   help=_help("drop the pass-through copy of each image", "augment", "no_original"))
    p.add_argument("--space-mode", choices=SPACE_MODES, default=argparse.SUPPRESS,
                   help=_help("separate pixel/spatial spaces or one merged space", "augment", "space_mode"))
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                   help=_help("parallel worker processes", "augment", "workers"))
    p.add_argument("--resize", default=argparse.SUPPRESS,
                   help=_help("working resolution WxH, a single size, or 'none'", "augment", "resize"))
    p.add_argument("--allow-nontrain", action="store_true", default=argparse.SUPPRESS,
                   help=_help("permit augmenting a val/ or test/ split", "augment", "allow_nontrain"))

    p = sub.add_parser("preview", help="contact sheet of augmented variants of one image")
    common(p, "preview")
    p.add_argument("--input", default=argparse.SUPPRESS, help=_help("image file", "preview", "input"))
    p.add_argument("--mask", default=argparse.SUPPRESS, help=_help("optional mask file", "preview", "mask"))
    p.add_argument("--output", default=argparse.SUPPRESS,
                   help=_help("sheet PNG path; <input stem>_preview.png when unset", "preview", "output"))
    p.add_argument("--level", type=int, default=argparse.SUPPRESS, help=_help("augmentation level 1-5", "preview", "level"))
    p.add_argument("--count", type=int, default=argparse.SUPPRESS, help=_help("number of variants", "preview", "count"))
    p.add_argument("--space-mode", choices=SPACE_MODES, default=argparse.SUPPRESS,
                   help=_help("separate pixel/spatial spaces or one merged space", "preview", "space_mode"))
    p.add_argument("--resize", default=argparse.SUPPRESS,
                   help=_help("working resolution WxH, a single size, or 'none'", "preview", "resize"))
    return parser


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ImageIOError(str(exc), path) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def resolve_settings(command: str, args: argparse.Namespace, environ=os.environ) -> dict:
    """Merge flags, config file, environment and defaults."""
    settings = dict(DEFAULTS[command])
    env_seed = environ.get("MEDAUG_SEED")
    if env_seed is not None:
        try:
            settings["seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"MEDAUG_SEED must be an integer, got {env_seed!r}") from None
    if args.config:
        file_values = load_config_file(args.config)
        unknown = sorted(set(file_values) - set(settings))
        if unknown:
            raise UsageError(f"{args.config}: unknown keys for {command}: {', '.join(unknown)}")
        settings.update(file_values)
    for key in settings:
        if hasattr(args, key):
            settings[key] = getattr(args, key)
    return settings


def parse_resize(value) -> tuple[int, int] | None:
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        return None
    if isinstance(value, int):
        return (value, value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        w, h = value
    else:
        parts = str(value).lower().split("x")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise UsageError(f"bad --resize value {value!r}") from None
        if len(nums) == 1:
            w = h = nums[0]
        elif len(nums) == 2:
            w, h = nums
        else:
            raise UsageError(f"bad --resize value {value!r}")
    if w < 1 or h < 1:
        raise UsageError(f"--resize must be positive, got {value!r}")
    return (int(w), int(h))


def _require(settings: dict, *keys: str) -> None:
    missing = [k for k in keys if not settings.get(k)]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _err(message: str) -> None:
    print(f"medaugment: {message}", file=sys.stderr)


def cmd_split(settings: dict) -> int:
    _require(settings, "input", "output")
    try:
        ratios = normalize_ratios(settings["ratios"])
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    manifest = scan_dataset(settings["input"], settings["task"])
    assignment = split_dataset(manifest, ratios, int(settings["seed"]))
    write_split(assignment, manifest, settings["output"], link=bool(settings["link"]))
    counts = assignment.class_counts()
    labels = sorted({label for c in counts.values() for label in c}, key=lambda k: "" if k is None else k)
    print(f"{'class':<20} {'train':>7} {'val':>7} {'test':>7}")
    for label in labels:
        row = [counts[name][label] for name in ("train", "val", "test")]
        print(f"{label if label is not None else '(all)':<20} {row[0]:>7} {row[1]:>7} {row[2]:>7}")
    print(f"{'total':<20} {len(assignment.train):>7} {len(assignment.val):>7} {len(assignment.test):>7}")
    for label in assignment.degenerate:
        _err(f"warning: class {label!r} too small to split; kept in train")
    return EXIT_OK


def _make_config(settings: dict, **overrides) -> AugConfig:
    values = {
        "level": settings.get("level"),
        "seed": settings.get("seed"),
        "space_mode": settings.get("space_mode"),
        "resize": parse_resize(settings.get("resize")),
    }
    values.update(overrides)
    try:
        return AugConfig(**values)
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc


def cmd_augment(settings: dict) -> int:
    _require(settings, "input", "output")
    config = _make_config(
        settings,
        branches=settings["branches"],
        task=settings["task"],
        include_original=not settings["no_original"],
    )
    workers = settings["workers"]
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise UsageError(f"--workers must be a positive integer, got {workers!r}")
    manifest = scan_dataset(settings["input"], config.task)

    def progress(done, total):
        print(f"processed {done}/{total} samples", file=sys.stderr, flush=True)

    start = time.perf_counter()
    result = augment_dataset(
        manifest,
        config,
        settings["output"],
        workers=workers,
        allow_nontrain=bool(settings["allow_nontrain"]),
        progress=progress,
    )
    elapsed = time.perf_counter() - start
    print(
        f"{result.inputs} inputs, {result.written} written, {len(result.failures)} failed "
        f"in {elapsed:.1f}s"
    )
    for failure in result.failures:
        _err(f"{failure['path']}: {failure['error']}")
    return EXIT_IO if result.failures else EXIT_OK


def contact_sheet(tiles: list[Image], masks: list | None = None, gap: int = 2) -> Image:
    """Lay tiles out left to right; masks, if given, form a second row."""
    channels = max(t.channels for t in tiles)
    h = max(t.height for t in tiles)
    w = max(t.width for t in tiles)
    rows = 1 if masks is None else 2
    sheet = np.zeros((rows * h + (rows - 1) * gap, len(tiles) * (w + gap) - gap, channels), dtype=np.uint8)
    for i, tile in enumerate(tiles):
        x = i * (w + gap)
        sheet[: tile.height, x : x + tile.width] = tile.array
        if masks is not None and masks[i] is not None:
            m = masks[i].array.astype(np.int64)
            top = m.max()
            shown = (m * 255 // top).astype(np.uint8) if top > 0 else m.astype(np.uint8)
            y = h + gap
            sheet[y : y + shown.shape[0], x : x + shown.shape[1]] = shown[:, :, None]
    return Image(sheet)


def cmd_preview(settings: dict) -> int:
    _require(settings, "input")
    count = settings["count"]
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise UsageError(f"--count must be a positive integer, got {count!r}")
    task = "segmentation" if settings.get("mask") else "classification"
    config = _make_config(settings, branches=count, task=task, include_original=True)
    image = load_image(settings["input"])
    mask = load_mask(settings["mask"]) if settings.get("mask") else None
    if config.resize is not None:
        image = resize(image, *config.resize)
        if mask is not None:
            mask = resize_mask(mask, *config.resize)
    plans, outputs = augment_pair(image, mask, config, image_index=0)
    # original first, then the variants in branch order
    ordered = [outputs[-1]] + outputs[:-1]
    sheet = contact_sheet([o[0] for o in ordered], None if mask is None else [o[1] for o in ordered])
    out = Path(settings["output"] or f"{Path(settings['input']).stem}_preview.png")
    save_image(sheet, out)
    dump = "\n".join(plan.describe() for plan in plans) + "\n"
    try:
        out.with_suffix(".txt").write_text(dump, encoding="utf-8")
    except OSError as exc:
        raise ImageIOError(str(exc), out.with_suffix(".txt")) from exc
    sys.stdout.write(dump)
    print(f"wrote {out} ({len(ordered)} tiles)")
    return EXIT_OK


COMMANDS = {"split": cmd_split, "augment": cmd_augment, "preview": cmd_preview}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        settings = resolve_settings(args.command, args)
        if getattr(args, "print_config", False):
            print(json.dumps(settings, indent=2, sort_keys=True))
            return EXIT_OK
        return COMMANDS[args.command](settings)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except ValidationError as exc:
        _err(str(exc))
        return EXIT_LAYOUT
    except (MedAugmentError, OSError) as exc:
        _err(str(exc))
        return EXIT_IO
