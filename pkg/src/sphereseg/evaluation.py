"""Confusion counts, the five-metric report, and the false-positive breakdown.

Undefined ratios (0/0) are reported as None and rendered "n/a" instead of
propagating NaN. Area aggregation pools raw counts (micro-average), so the
combined row is exact rather than an average of rounded rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backprojection import PredictionSet
from .cloud_io import LabeledCloud
from .errors import PredictionError

METRIC_COLUMNS = ("Accuracy", "IoU", "Precision", "Recall", "F-1")

# Non-building category order used by report tables, matching the SynthCity
# breakdown layout; categories outside this list are appended alphabetically.
FP_CATEGORY_ORDER = (
    "Car",
    "Natural Ground",
    "Ground",
    "Road",
    "Street Furniture",
    "Tree",
    "Pavement",
)


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class MetricsReport:
    area_name: str
    accuracy: float | None
    iou: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {
            "accuracy": self.accuracy,
            "iou": self.iou,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class FPBreakdown:
    """Share of false positives per non-building category; empty when fp = 0."""

    ratios: dict[str, float]


def confusion_counts(
    pred: PredictionSet, cloud: LabeledCloud, building_label: int
) -> Confusion:
    """Count tp/fp/fn/tn of a prediction against the cloud's labels."""
    if building_label not in cloud.category_names:
        raise ValueError(
            f"building label {building_label} is not in the cloud's category map"
        )
    if pred.n_points != cloud.n_points:
        raise PredictionError(
            f"prediction is over {pred.n_points} points, cloud has {cloud.n_points}"
        )
    predicted = pred.as_bool_mask()
    actual = cloud.labels == building_label
    tp = int(np.count_nonzero(predicted & actual))
    fp = int(np.count_nonzero(predicted & ~actual))
    fn = int(np.count_nonzero(~predicted & actual))
    return Confusion(tp, fp, fn, cloud.n_points - tp - fp - fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def compute_metrics(c: Confusion, area_name: str = "") -> MetricsReport:
    """Derive accuracy, IoU, precision, recall, and F-1 from raw counts."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricsReport(
        area_name=area_name,
        accuracy=_ratio(c.tp + c.tn, c.total),
        iou=_ratio(c.tp, c.tp + c.fp + c.fn),
        precision=precision,
        recall=recall,
        f1=f1,
    )


def fp_breakdown(
    pred: PredictionSet, cloud: LabeledCloud, building_label: int
) -> FPBreakdown:
    """Split false positives by the category they actually belong to.

    Every non-building category in the cloud's map gets a ratio (zeros
    included) so reports line up column-for-column across areas; the map is
    empty when there are no false positives at all.
    """
    if building_label not in cloud.category_names:
        raise ValueError(
            f"building label {building_label} is not in the cloud's category map"
        )
    if pred.n_points != cloud.n_points:
        raise PredictionError(
            f"prediction is over {pred.n_points} points, cloud has {cloud.n_points}"
        )
    fp_labels = cloud.labels[pred.indices]
    fp_labels = fp_labels[fp_labels != building_label]
    if len(fp_labels) == 0:
        return FPBreakdown({})
    values, counts = np.unique(fp_labels, return_counts=True)
    per_label = dict(zip(values.tolist(), counts.tolist()))
    total = int(len(fp_labels))
    ratios = {
        name: per_label.get(cid, 0) / total
        for cid, name in cloud.category_names.items()
        if cid != building_label
    }
    return FPBreakdown(ratios)


def aggregate(reports: list[tuple[Confusion, str]], name: str = "Total") -> MetricsReport:
    """Metrics of the pooled confusion counts of several areas."""
    if not reports:
        raise ValueError("aggregate needs at least one (confusion, area) pair")
    total = reports[0][0]
    for confusion, _ in reports[1:]:
        total = total + confusion
    return compute_metrics(total, name)


def _fmt(value: float | None, digits: int = 2) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def render_metrics_table(reports: list[MetricsReport]) -> str:
    """Plain-text table with one row per area, columns in report order."""
    header = ("Area",) + METRIC_COLUMNS
    rows = [
        (
            r.area_name,
            _fmt(r.accuracy),
            _fmt(r.iou),
            _fmt(r.precision),
            _fmt(r.recall),
            _fmt(r.f1),
        )
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def fp_category_columns(breakdowns: list[FPBreakdown]) -> list[str]:
    """Category columns: the canonical order first, then any extras sorted."""
    present = set()
    for b in breakdowns:
        present.update(b.ratios)
    ordered = [c for c in FP_CATEGORY_ORDER if c in present]
    ordered += sorted(present - set(FP_CATEGORY_ORDER))
    return ordered


def render_fp_table(named_breakdowns: list[tuple[str, FPBreakdown]]) -> str:
    """Plain-text false-positive ratio table, one row per area."""
    columns = fp_category_columns([b for _, b in named_breakdowns])
    if not columns:
        return "(no false positives)"
    header = ("Area",) + tuple(columns)
    rows = [
        (name,) + tuple(_fmt(b.ratios.get(c), 3) if b.ratios else "n/a" for c in columns)
        for name, b in named_breakdowns
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def report_json(
    area_name: str,
    confusion: Confusion,
    metrics: MetricsReport,
    breakdown: FPBreakdown | None = None,
) -> dict:
    """Machine-readable report entry for one area."""
    return {
        "area": area_name,
        "confusion": {
            "tp": confusion.tp,
            "fp": confusion.fp,
            "fn": confusion.fn,
            "tn": confusion.tn,
        },
        "metrics": metrics.as_dict(),
        "fp_breakdown": dict(breakdown.ratios) if breakdown is not None else {},
    }
