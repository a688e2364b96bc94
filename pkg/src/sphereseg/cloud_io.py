"""Labeled point cloud container plus CSV / ASCII-PLY readers and writers.

Coordinates are kept as 64-bit floats end to end and serialized with 17
significant digits so that a save/load cycle is bit-exact. Point order in a
file is point order in memory: downstream pixel mappings address points by
their file index.
"""
from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CloudFormatError

CSV_COLUMNS = ("x", "y", "z", "red", "green", "blue", "label")


@dataclass
class LabeledCloud:
    """Columnar point set: positions, optional 8-bit colors, category labels.

    Attributes:
        positions: (N, 3) float64 array of x, y, z in meters.
        labels: (N,) int64 array of category ids.
        colors: optional (N, 3) uint8 array of RGB values.
        category_names: mapping of category id to display name.
    """

    positions: np.ndarray
    labels: np.ndarray
    colors: np.ndarray | None = None
    category_names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64).reshape(-1)
        if self.colors is not None:
            self.colors = np.ascontiguousarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        n = len(self.positions)
        if len(self.labels) != n:
            raise CloudFormatError(f"labels length {len(self.labels)} != positions length {n}")
        if self.colors is not None and len(self.colors) != n:
            raise CloudFormatError(f"colors length {len(self.colors)} != positions length {n}")
        self.category_names = {int(k): str(v) for k, v in self.category_names.items()}
        for arr in (self.positions, self.labels, self.colors):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def n_points(self) -> int:
        return len(self.positions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledCloud):
            return NotImplemented
        if (self.colors is None) != (other.colors is None):
            return False
        return (
            np.array_equal(self.positions, other.positions, equal_nan=True)
            and np.array_equal(self.labels, other.labels)
            and (self.colors is None or np.array_equal(self.colors, other.colors))
            and self.category_names == other.category_names
        )


@dataclass
class CloudValidationReport:
    n_points: int
    n_invalid_coords: int
    missing_labels: list[int]
    bbox: tuple[tuple[float, float, float], tuple[float, float, float]] | None

    @property
    def ok(self) -> bool:
        return self.n_invalid_coords == 0 and not self.missing_labels


def validate_cloud(cloud: LabeledCloud) -> CloudValidationReport:
    """Report invalid coordinates, unnamed labels, and the bounding box."""
    finite_rows = np.isfinite(cloud.positions).all(axis=1)
    n_invalid = int(cloud.n_points - finite_rows.sum())
    missing = sorted(set(np.unique(cloud.labels).tolist()) - set(cloud.category_names))
    bbox = None
    if finite_rows.any():
        good = cloud.positions[finite_rows]
        bbox = (tuple(good.min(axis=0).tolist()), tuple(good.max(axis=0).tolist()))
    return CloudValidationReport(cloud.n_points, n_invalid, missing, bbox)


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".categories.json")


def _fallback_names(labels: np.ndarray) -> dict[int, str]:
    return {int(v): f"category_{int(v)}" for v in np.unique(labels)}


def load_categories(path: str | Path) -> dict[int, str]:
    """Read a `{"categories": {"<id>": "<name>"}}` sidecar file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return {int(k): str(v) for k, v in doc["categories"].items()}


def save_categories(names: dict[int, str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"categories": {str(k): v for k, v in names.items()}}, fh, indent=2)
        fh.write("\n")


def load_point_cloud(
    path: str | Path,
    format: str = "auto",
    categories: dict[int, str] | None = None,
) -> LabeledCloud:
    """Load a labeled cloud from CSV or ASCII PLY.

    Category names come from, in order of precedence: the `categories`
    argument, `comment category` lines in a PLY header, a JSON sidecar next
    to the file, or synthesized `category_<id>` placeholders.

    Args:
        path: input file.
        format: "csv", "ply_ascii", or "auto" (by extension, then content).
        categories: explicit category-id -> name map.

    Raises:
        FileNotFoundError: the file does not exist.
        CloudFormatError: malformed header, non-numeric field, missing label
            column, non-finite coordinate, or out-of-range color/label.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"point cloud file not found: {path}")
    if format == "auto":
        format = _sniff_format(path)
    if format == "csv":
        cloud = _load_csv(path)
    elif format == "ply_ascii":
        cloud = _load_ply(path)
    else:
        raise CloudFormatError(f"unknown format {format!r}, expected csv or ply_ascii")

    names = categories
    if names is None:
        names = cloud.category_names or None  # PLY comments, if any
    if names is None and _sidecar_path(path).is_file():
        names = load_categories(_sidecar_path(path))
    if names is None:
        names = _fallback_names(cloud.labels)
    else:
        names = dict(names)
        for v in np.unique(cloud.labels):
            names.setdefault(int(v), f"category_{int(v)}")
    return LabeledCloud(cloud.positions, cloud.labels, cloud.colors, names)


def save_labeled_cloud(
    cloud: LabeledCloud,
    path: str | Path,
    format: str = "csv",
    write_sidecar: bool = True,
) -> None:
    """Write a cloud so that `load_point_cloud` restores it field-for-field.

    CSV stores category names in a `.categories.json` sidecar (unless
    disabled); PLY embeds them as header comments and needs no sidecar.
    """
    path = Path(path)
    if format == "csv":
        _save_csv(cloud, path)
        if write_sidecar:
            save_categories(cloud.category_names, _sidecar_path(path))
    elif format == "ply_ascii":
        _save_ply(cloud, path)
    else:
        raise CloudFormatError(f"unknown format {format!r}, expected csv or ply_ascii")


def _sniff_format(path: Path) -> str:
    ext = path.suffix.lower()
    if ext == ".csv":
        return "csv"
    if ext == ".ply":
        return "ply_ascii"
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "ply_ascii" if head.startswith(b"ply") else "csv"


def _check_finite(positions: np.ndarray, path: Path) -> None:
    bad = ~np.isfinite(positions).all(axis=1)
    if bad.any():
        raise CloudFormatError(
            f"{path}: non-finite coordinate at row {int(np.flatnonzero(bad)[0])}"
        )


def _check_labels(values: np.ndarray, path: Path) -> np.ndarray:
    if values.size and (np.floor(values) != values).any():
        raise CloudFormatError(f"{path}: non-integer label value")
    labels = values.astype(np.int64)
    if values.size and labels.min() < 0:
        raise CloudFormatError(f"{path}: negative label value {int(labels.min())}")
    return labels


def _check_colors(values: np.ndarray, path: Path) -> np.ndarray:
    if values.size and ((values < 0).any() or (values > 255).any() or (np.floor(values) != values).any()):
        raise CloudFormatError(f"{path}: color values must be integers in 0..255")
    return values.astype(np.uint8)


def _load_csv(path: Path) -> LabeledCloud:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise CloudFormatError(f"{path}: empty file, expected a CSV header")
        header = [h.strip().lower() for h in header_line.strip().split(",")]
        if len(set(header)) != len(header):
            raise CloudFormatError(f"{path}: duplicate CSV column names")
        for required in ("x", "y", "z"):
            if required not in header:
                raise CloudFormatError(f"{path}: malformed header, missing column {required!r}")
        if "label" not in header:
            raise CloudFormatError(f"{path}: label column missing")
        has_color = any(c in header for c in ("red", "green", "blue"))
        if has_color and not all(c in header for c in ("red", "green", "blue")):
            raise CloudFormatError(f"{path}: color columns must be all of red,green,blue or none")
        extras = [c for c in header if c not in CSV_COLUMNS]
        if extras:
            warnings.warn(f"{path}: ignoring unknown CSV columns {extras}", stacklevel=3)

        body = fh.read()
        if not body.strip():
            data = np.empty((0, len(header)))
        else:
            try:
                data = np.loadtxt(
                    io.StringIO(body), delimiter=",", dtype=np.float64, ndmin=2
                )
            except ValueError as exc:
                raise CloudFormatError(f"{path}: non-numeric field in CSV body ({exc})") from exc
    if data.shape[1] != len(header):
        raise CloudFormatError(
            f"{path}: row has {data.shape[1]} fields, header names {len(header)}"
        )
    col = {name: data[:, i] for i, name in enumerate(header)}
    positions = np.column_stack([col["x"], col["y"], col["z"]])
    _check_finite(positions, path)
    labels = _check_labels(col["label"], path)
    colors = None
    if has_color:
        colors = _check_colors(np.column_stack([col["red"], col["green"], col["blue"]]), path)
    return LabeledCloud(positions, labels, colors)


def _save_csv(cloud: LabeledCloud, path: Path) -> None:
    cols = ["x", "y", "z"]
    if cloud.colors is not None:
        cols += ["red", "green", "blue"]
    cols.append("label")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(cloud.n_points):
            x, y, z = cloud.positions[i]
            row = [format(x, ".17g"), format(y, ".17g"), format(z, ".17g")]
            if cloud.colors is not None:
                row += [str(int(v)) for v in cloud.colors[i]]
            row.append(str(int(cloud.labels[i])))
            fh.write(",".join(row) + "\n")


_PLY_DTYPES = {
    "char", "uchar", "int8", "uint8", "short", "ushort", "int16", "uint16",
    "int", "uint", "int32", "uint32", "float", "float32", "double", "float64",
}


def _load_ply(path: Path) -> LabeledCloud:
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != "ply":
            raise CloudFormatError(f"{path}: malformed header, missing 'ply' magic")
        if fh.readline().strip() != "format ascii 1.0":
            raise CloudFormatError(f"{path}: only 'format ascii 1.0' PLY is supported")

        elements: list[tuple[str, int, list[str]]] = []  # (name, count, property names)
        comments: dict[int, str] = {}
        for line in fh:
            fields = line.strip().split()
            if not fields:
                continue
            if fields[0] == "end_header":
                break
            if fields[0] == "comment":
                if len(fields) >= 3 and fields[1] == "category" and fields[2].isdigit():
                    comments[int(fields[2])] = " ".join(fields[3:])
                continue
            if fields[0] == "element":
                if len(fields) != 3 or not fields[2].isdigit():
                    raise CloudFormatError(f"{path}: malformed element line {line.strip()!r}")
                elements.append((fields[1], int(fields[2]), []))
            elif fields[0] == "property":
                if not elements:
                    raise CloudFormatError(f"{path}: property before any element")
                if fields[1] == "list":
                    raise CloudFormatError(f"{path}: list properties are not supported")
                if len(fields) != 3 or fields[1] not in _PLY_DTYPES:
                    raise CloudFormatError(f"{path}: malformed property line {line.strip()!r}")
                elements[-1][2].append(fields[2])
        else:
            raise CloudFormatError(f"{path}: malformed header, no end_header")

        vertex = next((e for e in elements if e[0] == "vertex"), None)
        if vertex is None:
            raise CloudFormatError(f"{path}: no 'element vertex' in header")
        _, n, props = vertex
        for required in ("x", "y", "z"):
            if required not in props:
                raise CloudFormatError(f"{path}: vertex element missing property {required!r}")
        if "label" not in props:
            raise CloudFormatError(f"{path}: label column missing from vertex element")
        has_color = any(c in props for c in ("red", "green", "blue"))
        if has_color and not all(c in props for c in ("red", "green", "blue")):
            raise CloudFormatError(f"{path}: color properties must be all of red,green,blue or none")

        # vertex rows start after any earlier elements' rows
        for name, count, _ in elements:
            if name == "vertex":
                break
            for _ in range(count):
                fh.readline()
        if n == 0:
            data = np.empty((0, len(props)))
        else:
            try:
                data = np.loadtxt(fh, dtype=np.float64, ndmin=2, max_rows=n)
            except ValueError as exc:
                raise CloudFormatError(
                    f"{path}: non-numeric field in vertex data ({exc})"
                ) from exc

    if data.shape[0] != n:
        raise CloudFormatError(f"{path}: expected {n} vertex rows, got {data.shape[0]}")
    if data.shape[1] != len(props):
        raise CloudFormatError(
            f"{path}: vertex row has {data.shape[1]} fields, header declares {len(props)}"
        )
    col = {name: data[:, i] for i, name in enumerate(props)}
    positions = np.column_stack([col["x"], col["y"], col["z"]])
    _check_finite(positions, path)
    labels = _check_labels(col["label"], path)
    colors = None
    if has_color:
        colors = _check_colors(np.column_stack([col["red"], col["green"], col["blue"]]), path)
    return LabeledCloud(positions, labels, colors, comments)


def _save_ply(cloud: LabeledCloud, path: Path) -> None:
    lines = ["ply", "format ascii 1.0"]
    for cid in sorted(cloud.category_names):
        name = cloud.category_names[cid]
        if "\n" in name:
            raise CloudFormatError(f"category name {name!r} must not contain newlines")
        lines.append(f"comment category {cid} {name}")
    lines.append(f"element vertex {cloud.n_points}")
    lines += ["property double x", "property double y", "property double z"]
    if cloud.colors is not None:
        lines += ["property uchar red", "property uchar green", "property uchar blue"]
    lines.append("property int label")
    lines.append("end_header")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        for i in range(cloud.n_points):
            x, y, z = cloud.positions[i]
            row = [format(x, ".17g"), format(y, ".17g"), format(z, ".17g")]
            if cloud.colors is not None:
                row += [str(int(v)) for v in cloud.colors[i]]
            row.append(str(int(cloud.labels[i])))
            fh.write(" ".join(row) + "\n")
