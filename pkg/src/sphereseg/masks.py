"""Interchange formats for detector boxes (JSON) and binary masks (PGM P5).

These files are the boundary between this pipeline and whatever produced the
segmentation: a neural adapter, the ground-truth oracle, or a hand-made
fixture. Formats are byte-exact so the boundary can be tested in isolation.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _netpbm
from .errors import BoxFormatError, DimensionMismatchError

MASK_THRESHOLD = 128  # PGM value >= this reads as building
DEFAULT_MIN_SCORE = 0.35


@dataclass(frozen=True)
class ScoredBox:
    """One detection: continuous pixel box, confidence, and the matched phrase."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float
    phrase: str = ""


@dataclass
class BoxSet:
    width: int
    height: int
    boxes: list[ScoredBox] = field(default_factory=list)


@dataclass
class Mask:
    """Binary building mask aligned with an equirectangular image."""

    width: int
    height: int
    bits: np.ndarray  # (H, W) bool

    def __post_init__(self) -> None:
        self.bits = np.ascontiguousarray(self.bits, dtype=bool)
        if self.bits.shape != (self.height, self.width):
            raise DimensionMismatchError(
                f"mask bits shape {self.bits.shape} != (height, width) "
                f"({self.height}, {self.width})"
            )

    @classmethod
    def empty(cls, width: int, height: int) -> "Mask":
        return cls(width, height, np.zeros((height, width), dtype=bool))

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.bits, other.bits)
        )


def read_boxes(path: str | Path, width: int, height: int) -> BoxSet:
    """Read detector boxes from JSON, clamping them to the image bounds.

    Boxes that are empty after clamping are dropped with a warning.

    Raises:
        BoxFormatError: malformed JSON or missing fields.
        DimensionMismatchError: file dimensions differ from `width` x `height`.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BoxFormatError(f"{path}: malformed JSON ({exc})") from exc
    try:
        file_w, file_h = int(doc["width"]), int(doc["height"])
        raw = doc["boxes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise BoxFormatError(f"{path}: missing or invalid width/height/boxes") from exc
    if (file_w, file_h) != (width, height):
        raise DimensionMismatchError(
            f"{path}: box file is {file_w}x{file_h}, expected {width}x{height}"
        )
    boxes = []
    for k, entry in enumerate(raw):
        try:
            box = ScoredBox(
                x_min=max(0.0, float(entry["x_min"])),
                y_min=max(0.0, float(entry["y_min"])),
                x_max=min(float(width), float(entry["x_max"])),
                y_max=min(float(height), float(entry["y_max"])),
                score=float(entry["score"]),
                phrase=str(entry.get("phrase", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BoxFormatError(f"{path}: malformed box #{k} ({exc})") from exc
        if not (0.0 <= box.score <= 1.0):
            raise BoxFormatError(f"{path}: box #{k} score {box.score} outside [0, 1]")
        if box.x_min >= box.x_max or box.y_min >= box.y_max:
            warnings.warn(f"{path}: dropping box #{k}, empty after clamping", stacklevel=2)
            continue
        boxes.append(box)
    return BoxSet(width, height, boxes)


def write_boxes(boxset: BoxSet, path: str | Path, prompt: str = "buildings") -> None:
    doc = {
        "width": boxset.width,
        "height": boxset.height,
        "prompt": prompt,
        "boxes": [
            {
                "x_min": b.x_min,
                "y_min": b.y_min,
                "x_max": b.x_max,
                "y_max": b.y_max,
                "score": b.score,
                "phrase": b.phrase,
            }
            for b in boxset.boxes
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def filter_boxes(boxset: BoxSet, min_score: float = DEFAULT_MIN_SCORE) -> BoxSet:
    """Keep boxes with score >= min_score, preserving order."""
    return BoxSet(boxset.width, boxset.height, [b for b in boxset.boxes if b.score >= min_score])


def read_mask_pgm(path: str | Path) -> Mask:
    """Read a binary PGM (P5, maxval 255); values >= 128 become True."""
    pixels = _netpbm.read_pgm(str(path))
    height, width = pixels.shape
    return Mask(width, height, pixels >= MASK_THRESHOLD)


def write_mask_pgm(mask: Mask, path: str | Path) -> None:
    """Write a mask as binary PGM with 255 for True and 0 for False."""
    _netpbm.write_pgm(str(path), np.where(mask.bits, 255, 0).astype(np.uint8))


def merge_masks(masks: list[Mask]) -> Mask:
    """Pixelwise union of same-sized masks (one per detector box)."""
    if not masks:
        raise ValueError("merge_masks needs at least one mask")
    first = masks[0]
    bits = first.bits.copy()
    for m in masks[1:]:
        if (m.width, m.height) != (first.width, first.height):
            raise DimensionMismatchError(
                f"mask {m.width}x{m.height} != {first.width}x{first.height}"
            )
        bits |= m.bits
    return Mask(first.width, first.height, bits)
