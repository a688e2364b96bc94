import numpy as np
import pytest

from oracles import confusion_by_hand
from sphereseg.backprojection import PredictionSet
from sphereseg.cloud_io import LabeledCloud
from sphereseg.evaluation import (
    FP_CATEGORY_ORDER,
    METRIC_COLUMNS,
    Confusion,
    aggregate,
    compute_metrics,
    confusion_counts,
    fp_breakdown,
    fp_category_columns,
    render_fp_table,
    render_metrics_table,
    report_json,
)


def cloud_with_labels(labels, names=None):
    labels = np.asarray(labels)
    names = names or {int(v): f"cat_{int(v)}" for v in np.unique(labels)}
    return LabeledCloud(np.zeros((len(labels), 3)), labels, None, names)


def test_confusion_perfect_prediction():
    cloud = cloud_with_labels([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], {0: "Road", 1: "Building"})
    pred = PredictionSet(10, np.array([0, 1, 2]))
    c = confusion_counts(pred, cloud, 1)
    assert (c.tp, c.fp, c.fn, c.tn) == (3, 0, 0, 7)


def test_confusion_empty_prediction():
    cloud = cloud_with_labels([1, 1, 0, 0], {0: "Road", 1: "Building"})
    c = confusion_counts(PredictionSet(4, np.array([], int)), cloud, 1)
    assert (c.tp, c.fp, c.fn, c.tn) == (0, 0, 2, 2)


def test_confusion_mixed_set_arithmetic():
    # pred={0,1,2,9}, GT={0,1,2,3}: the set oracle gives (3,1,1,5)
    labels = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    cloud = cloud_with_labels(labels, {0: "Road", 1: "Building"})
    pred_indices = [0, 1, 2, 9]
    expected = confusion_by_hand(set(pred_indices), labels, 1)
    assert expected == (3, 1, 1, 5)
    c = confusion_counts(PredictionSet(10, np.array(pred_indices)), cloud, 1)
    assert (c.tp, c.fp, c.fn, c.tn) == expected


def test_confusion_requires_known_building_label():
    cloud = cloud_with_labels([0, 0], {0: "Road"})
    with pytest.raises(ValueError, match="category map"):
        confusion_counts(PredictionSet(2, np.array([], int)), cloud, 1)


def test_metrics_formula_case():
    # (3,1,1,5): acc 8/10, iou 3/5, precision 3/4, recall 3/4, f1 0.75
    m = compute_metrics(Confusion(3, 1, 1, 5), "x")
    assert m.accuracy == pytest.approx(0.8, abs=1e-12)
    assert m.iou == pytest.approx(0.6, abs=1e-12)
    assert m.precision == pytest.approx(0.75, abs=1e-12)
    assert m.recall == pytest.approx(0.75, abs=1e-12)
    assert m.f1 == pytest.approx(0.75, abs=1e-12)


def test_metrics_perfect_and_degenerate():
    perfect = compute_metrics(Confusion(4, 0, 0, 6))
    assert (perfect.accuracy, perfect.iou, perfect.precision, perfect.recall, perfect.f1) == (
        1.0, 1.0, 1.0, 1.0, 1.0,
    )
    nothing = compute_metrics(Confusion(0, 0, 0, 10))
    assert nothing.accuracy == 1.0
    assert nothing.iou is None
    assert nothing.precision is None
    assert nothing.recall is None
    assert nothing.f1 is None


def test_metrics_match_direct_formulas_on_random_confusions(rng):
    for _ in range(300):
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 50, size=4))
        m = compute_metrics(Confusion(tp, fp, fn, tn))
        n = tp + fp + fn + tn
        if n:
            assert m.accuracy == (tp + tn) / n
        if tp + fp + fn:
            assert m.iou == tp / (tp + fp + fn)
        if tp + fp:
            assert m.precision == tp / (tp + fp)
        if tp + fn:
            assert m.recall == tp / (tp + fn)
        if m.precision is not None and m.recall is not None and m.precision + m.recall > 0:
            # harmonic mean identity: f1 * (p + r) == 2 * p * r
            assert m.f1 * (m.precision + m.recall) == pytest.approx(
                2 * m.precision * m.recall, abs=1e-12
            )


def test_fp_breakdown_even_split():
    labels = [1, 1, 0, 0, 2, 2]
    cloud = cloud_with_labels(labels, {0: "Road", 1: "Building", 2: "Tree"})
    pred = PredictionSet(6, np.array([2, 3, 4, 5]))  # 2 road + 2 tree FPs
    b = fp_breakdown(pred, cloud, 1)
    assert b.ratios == {"Road": 0.5, "Tree": 0.5}


def test_fp_breakdown_counting_case():
    labels = [1, 0, 0, 0, 2]
    cloud = cloud_with_labels(labels, {0: "Ground", 1: "Building", 2: "Pavement"})
    pred = PredictionSet(5, np.array([1, 2, 3, 4]))  # 3 ground + 1 pavement
    b = fp_breakdown(pred, cloud, 1)
    assert b.ratios == {"Ground": 0.75, "Pavement": 0.25}
    assert sum(b.ratios.values()) == pytest.approx(1.0, abs=1e-9)


def test_fp_breakdown_empty_when_no_fp():
    cloud = cloud_with_labels([1, 0], {0: "Road", 1: "Building"})
    assert fp_breakdown(PredictionSet(2, np.array([0])), cloud, 1).ratios == {}


def test_fp_breakdown_reports_zero_ratio_categories():
    cloud = cloud_with_labels([1, 0, 2], {0: "Road", 1: "Building", 2: "Tree"})
    b = fp_breakdown(PredictionSet(3, np.array([1])), cloud, 1)
    assert b.ratios == {"Road": 1.0, "Tree": 0.0}


def test_aggregate_single_and_identical():
    c = Confusion(3, 1, 1, 5)
    assert aggregate([(c, "a")]).as_dict() == compute_metrics(c).as_dict()
    doubled = aggregate([(c, "a"), (c, "b")])
    assert doubled.as_dict() == compute_metrics(c).as_dict()  # ratios scale-invariant


def test_aggregate_pools_counts():
    # (1,1,0,0) + (9,0,0,1) pools to (10,1,0,1): precision 10/11
    out = aggregate([(Confusion(1, 1, 0, 0), "a"), (Confusion(9, 0, 0, 1), "b")])
    assert out.precision == pytest.approx(10 / 11, abs=1e-12)
    assert out.area_name == "Total"
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_equals_componentwise_sum(rng):
    confusions = [
        Confusion(*(int(v) for v in rng.integers(0, 100, size=4))) for _ in range(10)
    ]
    total = Confusion(
        sum(c.tp for c in confusions), sum(c.fp for c in confusions),
        sum(c.fn for c in confusions), sum(c.tn for c in confusions),
    )
    got = aggregate([(c, f"a{i}") for i, c in enumerate(confusions)])
    assert got.as_dict() == compute_metrics(total).as_dict()


def test_metrics_table_column_order():
    table = render_metrics_table([compute_metrics(Confusion(3, 1, 1, 5), "Area 1")])
    header = table.splitlines()[0]
    assert list(METRIC_COLUMNS) == ["Accuracy", "IoU", "Precision", "Recall", "F-1"]
    for col in METRIC_COLUMNS:
        assert col in header
    assert header.index("Accuracy") < header.index("IoU") < header.index("Precision")
    assert header.index("Precision") < header.index("Recall") < header.index("F-1")
    assert "n/a" in render_metrics_table([compute_metrics(Confusion(0, 0, 0, 4), "x")])


def test_fp_table_uses_canonical_category_order():
    cloud = cloud_with_labels(
        [1, 0, 2, 3],
        {0: "Road", 1: "Building", 2: "Tree", 3: "Car"},
    )
    b = fp_breakdown(PredictionSet(4, np.array([1, 2, 3])), cloud, 1)
    columns = fp_category_columns([b])
    assert columns == ["Car", "Road", "Tree"]  # canonical order, not alphabetical
    table = render_fp_table([("Area 1", b)])
    header = table.splitlines()[0]
    assert header.index("Car") < header.index("Road") < header.index("Tree")
    assert set(FP_CATEGORY_ORDER) == {
        "Car", "Natural Ground", "Ground", "Road", "Street Furniture", "Tree", "Pavement",
    }


def test_report_json_shape():
    c = Confusion(3, 1, 1, 5)
    doc = report_json("Area 1", c, compute_metrics(c, "Area 1"), None)
    assert doc["area"] == "Area 1"
    assert doc["confusion"] == {"tp": 3, "fp": 1, "fn": 1, "tn": 5}
    assert set(doc["metrics"]) == {"accuracy", "iou", "precision", "recall", "f1"}
    assert doc["fp_breakdown"] == {}
