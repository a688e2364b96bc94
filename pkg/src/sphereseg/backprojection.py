"""Lift 2D building masks to 3D point predictions via the pixel mapping.

Two depth policies: `all` transfers every point stored in a masked pixel,
which reproduces the behind-the-facade false positives of a purely angular
projection; `nearest` keeps only points within a relative depth band of the
pixel's closest point, suppressing occluded hits.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud_io import LabeledCloud
from .errors import DimensionMismatchError, PredictionError
from .masks import Mask
from .projection import PixelMapping

HIGHLIGHT_RGB = (255, 255, 0)
DEFAULT_EPSILON_REL = 0.02


@dataclass(frozen=True)
class DepthMode:
    """Back-projection depth policy.

    mode "all": every point in a masked pixel is predicted.
    mode "nearest": only points with depth <= d0 * (1 + epsilon_rel), where d0
    is the masked pixel's minimum depth.
    """

    mode: str = "all"
    epsilon_rel: float = DEFAULT_EPSILON_REL

    def __post_init__(self) -> None:
        if self.mode not in ("all", "nearest"):
            raise ValueError(f"unknown depth mode {self.mode!r}, expected 'all' or 'nearest'")
        if not (0.0 <= self.epsilon_rel < 1.0):
            raise ValueError(f"epsilon_rel must be in [0, 1), got {self.epsilon_rel}")


@dataclass
class PredictionSet:
    """Indices of points predicted as building, over a cloud of n_points."""

    n_points: int
    indices: np.ndarray  # int64, ascending, unique

    def __post_init__(self) -> None:
        self.indices = np.unique(np.asarray(self.indices, dtype=np.int64))
        if len(self.indices):
            if int(self.indices[0]) < 0 or int(self.indices[-1]) >= self.n_points:
                raise PredictionError(
                    f"prediction index out of range for cloud of {self.n_points} points"
                )
        self.indices.flags.writeable = False

    def __len__(self) -> int:
        return len(self.indices)

    def as_bool_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_points, dtype=bool)
        mask[self.indices] = True
        return mask

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return self.n_points == other.n_points and np.array_equal(self.indices, other.indices)


def backproject(mask: Mask, mapping: PixelMapping, dm: DepthMode, n_points: int | None = None) -> PredictionSet:
    """Collect the point indices that fall in masked pixels under a depth policy.

    Args:
        mask: binary building mask, same dimensions as the mapping.
        mapping: point-pixel mapping persisted at projection time.
        dm: depth policy.
        n_points: size of the source cloud; defaults to max mapped index + 1
            when omitted (a mapping alone cannot know about dropped points).
    """
    if (mask.width, mask.height) != (mapping.width, mapping.height):
        raise DimensionMismatchError(
            f"mask {mask.width}x{mask.height} != mapping {mapping.width}x{mapping.height}"
        )
    if n_points is None:
        n_points = int(mapping.point_index.max()) + 1 if len(mapping) else 0

    if len(mapping) == 0:
        return PredictionSet(n_points, np.empty(0, dtype=np.int64))

    hit = mask.bits.ravel()[mapping.linear_pixels]
    if dm.mode == "nearest":
        starts = mapping.run_starts
        run_lengths = np.diff(np.r_[starts, len(mapping)])
        d0 = np.repeat(mapping.depth[starts], run_lengths)
        hit = hit & (mapping.depth <= d0 * (1.0 + dm.epsilon_rel))
    return PredictionSet(n_points, np.sort(mapping.point_index[hit]).astype(np.int64))


def merge_predictions(sets: list[PredictionSet]) -> PredictionSet:
    """Union predictions from multiple scenes over the same cloud."""
    if not sets:
        raise ValueError("merge_predictions needs at least one prediction set")
    n = sets[0].n_points
    for s in sets[1:]:
        if s.n_points != n:
            raise PredictionError(f"prediction sizes differ: {s.n_points} != {n}")
    return PredictionSet(n, np.concatenate([s.indices for s in sets]))


def apply_labels(
    cloud: LabeledCloud,
    pred: PredictionSet,
    highlight: tuple[int, int, int] = HIGHLIGHT_RGB,
) -> LabeledCloud:
    """Return a copy of the cloud with predicted points recolored.

    Ground-truth labels are untouched; clouds without colors get a white base
    so the highlight is meaningful.
    """
    if pred.n_points != cloud.n_points:
        raise PredictionError(
            f"prediction is over {pred.n_points} points, cloud has {cloud.n_points}"
        )
    if cloud.colors is not None:
        colors = cloud.colors.copy()
    else:
        colors = np.full((cloud.n_points, 3), 255, dtype=np.uint8)
    colors[pred.indices] = highlight
    return LabeledCloud(cloud.positions, cloud.labels, colors, cloud.category_names)


def save_predictions(pred: PredictionSet, path: str | Path) -> None:
    """Write newline-delimited ascending indices with a `# n_points=N` header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n_points={pred.n_points}\n")
        for i in pred.indices:
            fh.write(f"{int(i)}\n")


def load_predictions(path: str | Path) -> PredictionSet:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# n_points="):
            raise PredictionError(f"{path}: missing '# n_points=N' header")
        try:
            n_points = int(header.removeprefix("# n_points="))
        except ValueError as exc:
            raise PredictionError(f"{path}: malformed header {header!r}") from exc
        try:
            indices = [int(line) for line in fh if line.strip()]
        except ValueError as exc:
            raise PredictionError(f"{path}: non-integer index line ({exc})") from exc
    return PredictionSet(n_points, np.asarray(indices, dtype=np.int64))
