import numpy as np
import pytest

from sphereseg.cloud_io import LabeledCloud


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)


def make_cloud(rng, n, with_colors=True, spread=50.0, categories=None):
    positions = rng.uniform(-spread, spread, size=(n, 3))
    labels = rng.integers(0, 3, size=n)
    colors = rng.integers(0, 256, size=(n, 3), dtype=np.uint8) if with_colors else None
    names = categories or {0: "Road", 1: "Building", 2: "Tree"}
    return LabeledCloud(positions, labels, colors, names)


_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def record_criterion(name: str, outcome: str) -> None:
    _ACCEPTANCE_RESULTS.append((name, outcome))


def pytest_runtest_logreport(report):
    # one pass/fail line per acceptance criterion in the terminal summary
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    record_criterion(name, "PASSED" if report.passed else "FAILED")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome}: {name}")
