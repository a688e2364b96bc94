"""Spherical coordinates, equirectangular rasterization, and the point-pixel mapping.

A point is normalized about a scene reference, converted to (r, theta, phi),
and dropped onto a W x H equirectangular grid. Every surviving point lands in
exactly one pixel; the mapping records all of them with their radial depth so
a 2D mask can later be lifted back to 3D.

The scalar helpers and the bulk rasterizer share numpy's transcendental
kernels, so per-point re-derivation reproduces the bulk output bit for bit.
"""
from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _netpbm
from .cloud_io import LabeledCloud
from .errors import CloudFormatError, DegenerateOriginError, MappingFormatError

DEFAULT_WIDTH = 4096
DEFAULT_HEIGHT = 2048
BACKGROUND_RGB = (0, 0, 0)
UNCOLORED_RGB = (255, 255, 255)
THREADS_ENV = "SPHERESEG_THREADS"

MAPPING_MAGIC = b"SPMAP1\x00\x00"
MAPPING_VERSION = 1
_RECORD_DTYPE = np.dtype([("px", "<u4"), ("py", "<u4"), ("point_index", "<u8"), ("depth", "<f8")])
_HEADER = struct.Struct("<IIIQ")  # version, width, height, record_count


@dataclass(frozen=True)
class ReferencePoint:
    """Scene origin the cloud is normalized about, e.g. a road center."""

    x: float
    y: float
    z: float
    name: str = ""


@dataclass(frozen=True)
class SphericalCoord:
    r: float
    theta: float  # azimuth in (-pi, pi]
    phi: float    # polar angle from +z in [0, pi]


@dataclass(frozen=True)
class PixelCoord:
    px: int
    py: int


def normalize_point(
    p: tuple[float, float, float], ref: ReferencePoint
) -> tuple[float, float, float]:
    """Shift a point so the reference becomes the origin."""
    return (p[0] - ref.x, p[1] - ref.y, p[2] - ref.z)


def to_spherical(p: tuple[float, float, float]) -> SphericalCoord:
    """Convert a normalized point to spherical coordinates.

    Raises:
        DegenerateOriginError: the point coincides with the reference (r = 0)
            and has no defined direction.
    """
    x, y, z = p
    r = float(np.sqrt(x * x + y * y + z * z))
    if r == 0.0:
        raise DegenerateOriginError("point coincides with the reference point")
    theta = float(np.arctan2(y, x))
    if theta == -np.pi:
        theta = float(np.pi)  # keep azimuth in (-pi, pi]; same seam pixel either way
    phi = float(np.arccos(min(1.0, max(-1.0, z / r))))
    return SphericalCoord(r, theta, phi)


def to_pixel(c: SphericalCoord, width: int, height: int) -> PixelCoord:
    """Quantize spherical angles onto a W x H equirectangular grid.

    Azimuth wraps modulo the width (theta = pi lands on column 0); the south
    pole row is clamped to height - 1.
    """
    u = (c.theta + np.pi) / (2.0 * np.pi) * width
    v = c.phi / np.pi * height
    px = int(np.floor(u)) % width
    py = min(int(np.floor(v)), height - 1)
    return PixelCoord(px, py)


@dataclass
class PixelMapping:
    """All (point index, depth) pairs per occupied pixel of one projection.

    Stored as flat parallel arrays in file order: sorted by (py, px, depth,
    point_index). The first record of each pixel run is therefore the pixel's
    nearest point.
    """

    width: int
    height: int
    px: np.ndarray           # uint32
    py: np.ndarray           # uint32
    point_index: np.ndarray  # uint64
    depth: np.ndarray        # float64

    def __post_init__(self) -> None:
        self.px = np.ascontiguousarray(self.px, dtype=np.uint32)
        self.py = np.ascontiguousarray(self.py, dtype=np.uint32)
        self.point_index = np.ascontiguousarray(self.point_index, dtype=np.uint64)
        self.depth = np.ascontiguousarray(self.depth, dtype=np.float64)
        n = len(self.px)
        if not (len(self.py) == len(self.point_index) == len(self.depth) == n):
            raise MappingFormatError("mapping arrays have inconsistent lengths")
        if self.width < 1 or self.height < 1:
            raise MappingFormatError(f"invalid mapping dimensions {self.width}x{self.height}")
        if n:
            if int(self.px.max()) >= self.width or int(self.py.max()) >= self.height:
                raise MappingFormatError("mapping record outside image bounds")
            lin = self.linear_pixels
            same = lin[1:] == lin[:-1]
            d_prev, d_next = self.depth[:-1], self.depth[1:]
            i_prev, i_next = self.point_index[:-1], self.point_index[1:]
            ordered = (lin[1:] > lin[:-1]) | (
                same & ((d_next > d_prev) | ((d_next == d_prev) & (i_next > i_prev)))
            )
            if not ordered.all():
                raise MappingFormatError(
                    "mapping records not sorted by (py, px, depth, point_index)"
                )
        for arr in (self.px, self.py, self.point_index, self.depth):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.px)

    @cached_property
    def linear_pixels(self) -> np.ndarray:
        """Row-major pixel id per record; non-decreasing by construction."""
        return self.py.astype(np.int64) * self.width + self.px.astype(np.int64)

    @cached_property
    def run_starts(self) -> np.ndarray:
        """Record index where each occupied pixel's run begins."""
        lin = self.linear_pixels
        if len(lin) == 0:
            return np.empty(0, dtype=np.int64)
        return np.flatnonzero(np.r_[True, lin[1:] != lin[:-1]])

    def entries_at(self, px: int, py: int) -> list[tuple[int, float]]:
        """(point_index, depth) pairs stored at one pixel, nearest first."""
        lin = self.linear_pixels
        key = py * self.width + px
        lo = int(np.searchsorted(lin, key, side="left"))
        hi = int(np.searchsorted(lin, key, side="right"))
        return [(int(i), float(d)) for i, d in zip(self.point_index[lo:hi], self.depth[lo:hi])]

    def occupied_pixels(self) -> list[tuple[int, int]]:
        s = self.run_starts
        return list(zip(self.px[s].tolist(), self.py[s].tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelMapping):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.px, other.px)
            and np.array_equal(self.py, other.py)
            and np.array_equal(self.point_index, other.point_index)
            and np.array_equal(self.depth, other.depth)
        )


@dataclass
class EquirectImage:
    """Rendered panorama: nearest-point color plus per-pixel minimum depth."""

    width: int
    height: int
    rgb: np.ndarray        # (H, W, 3) uint8
    min_depth: np.ndarray  # (H, W) float64, +inf where empty

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EquirectImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.rgb, other.rgb)
            and np.array_equal(self.min_depth, other.min_depth)
        )


@dataclass(frozen=True)
class ProjectionStats:
    """Where every input point went: mapped, degenerate, or out of range."""

    n_points: int
    n_mapped: int
    n_degenerate: int
    n_out_of_range: int


def _resolve_workers(workers: int | None) -> int:
    cap = os.environ.get(THREADS_ENV)
    if workers is None:
        workers = int(cap) if cap else 1
    elif cap:
        workers = min(workers, int(cap))
    return max(1, workers)


def _project_chunk(
    positions: np.ndarray,
    ref: ReferencePoint,
    width: int,
    height: int,
    max_range: float | None,
    index_base: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int, int]:
    x = positions[:, 0] - ref.x
    y = positions[:, 1] - ref.y
    z = positions[:, 2] - ref.z
    r = np.sqrt(x * x + y * y + z * z)
    degenerate = r == 0.0
    keep = ~degenerate
    n_out = 0
    if max_range is not None:
        out = r > max_range
        n_out = int(out.sum())
        keep &= ~out
    idx = np.flatnonzero(keep)
    x, y, z, r = x[idx], y[idx], z[idx], r[idx]
    theta = np.arctan2(y, x)
    theta[theta == -np.pi] = np.pi
    phi = np.arccos(np.clip(z / r, -1.0, 1.0))
    u = (theta + np.pi) / (2.0 * np.pi) * width
    v = phi / np.pi * height
    px = (np.floor(u).astype(np.int64) % width).astype(np.uint32)
    py = np.minimum(np.floor(v).astype(np.int64), height - 1).astype(np.uint32)
    point_index = (idx + index_base).astype(np.uint64)
    return px, py, point_index, r, int(degenerate.sum()), n_out


def project_scene(
    cloud: LabeledCloud,
    ref: ReferencePoint,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    max_range: float | None = None,
    workers: int | None = None,
) -> tuple[EquirectImage, PixelMapping, ProjectionStats]:
    """Rasterize a labeled cloud into an equirectangular image and its mapping.

    Every non-degenerate point within `max_range` (when set) contributes one
    mapping record. Pixel color is the nearest point's color (ties broken by
    the smaller point index); clouds without colors render white on black.

    Points may be partitioned across `workers` threads; the output is
    byte-identical for any worker count because records are globally re-sorted
    by (py, px, depth, point_index) at the end.

    Returns:
        (image, mapping, stats) where stats accounts for dropped points.
    """
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be >= 1, got {width}x{height}")
    if not np.isfinite(cloud.positions).all():
        raise CloudFormatError("cloud has non-finite coordinates; run validate_cloud")
    workers = _resolve_workers(workers)
    n = cloud.n_points

    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    jobs = [
        (cloud.positions[lo:hi], ref, width, height, max_range, int(lo))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if len(jobs) <= 1:
        parts = [_project_chunk(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            parts = list(pool.map(lambda job: _project_chunk(*job), jobs))

    if parts:
        px = np.concatenate([p[0] for p in parts])
        py = np.concatenate([p[1] for p in parts])
        point_index = np.concatenate([p[2] for p in parts])
        depth = np.concatenate([p[3] for p in parts])
    else:
        px = np.empty(0, np.uint32)
        py = np.empty(0, np.uint32)
        point_index = np.empty(0, np.uint64)
        depth = np.empty(0, np.float64)
    n_degenerate = sum(p[4] for p in parts)
    n_out_of_range = sum(p[5] for p in parts)

    lin = py.astype(np.int64) * width + px.astype(np.int64)
    order = np.lexsort((point_index, depth, lin))
    mapping = PixelMapping(width, height, px[order], py[order], point_index[order], depth[order])

    rgb = np.zeros((height, width, 3), dtype=np.uint8)
    rgb[:] = BACKGROUND_RGB
    min_depth = np.full((height, width), np.inf)
    starts = mapping.run_starts
    if len(starts):
        rows = mapping.py[starts].astype(np.int64)
        cols = mapping.px[starts].astype(np.int64)
        nearest = mapping.point_index[starts].astype(np.int64)
        if cloud.colors is not None:
            rgb[rows, cols] = cloud.colors[nearest]
        else:
            rgb[rows, cols] = UNCOLORED_RGB
        min_depth[rows, cols] = mapping.depth[starts]

    image = EquirectImage(width, height, rgb, min_depth)
    stats = ProjectionStats(n, len(mapping), n_degenerate, n_out_of_range)
    return image, mapping, stats


def write_mapping(mapping: PixelMapping, path: str | Path) -> None:
    """Persist a mapping in the little-endian SPMAP1 binary format."""
    records = np.empty(len(mapping), dtype=_RECORD_DTYPE)
    records["px"] = mapping.px
    records["py"] = mapping.py
    records["point_index"] = mapping.point_index
    records["depth"] = mapping.depth
    with open(path, "wb") as fh:
        fh.write(MAPPING_MAGIC)
        fh.write(_HEADER.pack(MAPPING_VERSION, mapping.width, mapping.height, len(mapping)))
        fh.write(records.tobytes())


def read_mapping(path: str | Path) -> PixelMapping:
    """Read a SPMAP1 mapping file written by `write_mapping`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAPPING_MAGIC) + _HEADER.size:
        raise MappingFormatError(f"{path}: truncated header")
    if data[: len(MAPPING_MAGIC)] != MAPPING_MAGIC:
        raise MappingFormatError(f"{path}: bad magic")
    version, width, height, count = _HEADER.unpack_from(data, len(MAPPING_MAGIC))
    if version != MAPPING_VERSION:
        raise MappingFormatError(f"{path}: unsupported version {version}")
    body = data[len(MAPPING_MAGIC) + _HEADER.size :]
    expected = count * _RECORD_DTYPE.itemsize
    if len(body) != expected:
        raise MappingFormatError(
            f"{path}: truncated or oversized body, expected {expected} bytes, got {len(body)}"
        )
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    return PixelMapping(
        int(width),
        int(height),
        records["px"],
        records["py"],
        records["point_index"],
        records["depth"],
    )


def write_image(image: EquirectImage, path: str | Path) -> None:
    """Write the rendered panorama as binary PPM (P6)."""
    _netpbm.write_ppm(str(path), image.rgb)


def read_image_rgb(path: str | Path) -> np.ndarray:
    """Read a binary PPM (P6) back into a (H, W, 3) uint8 array."""
    return _netpbm.read_ppm(str(path))
