"""Shared fixtures: the tiny two-parameter space and its table evaluator."""

from __future__ import annotations

import csv
import itertools
from pathlib import Path

import pytest

from dsekit import make_space

TINY_PARAMS = [("A", [1, 2, 4]), ("B", [100, 200])]
TINY_BENCHMARK = "t"
TINY_WEIGHTS = {"power": 0.1, "time": 0.9}


def tiny_metrics(a, b) -> dict[str, float]:
    return {"power": 0.5 * a + 0.002 * b, "time": 24.0 / a + 200.0 / b}


class TinyEvaluator:
    """Direct formula evaluation of the tiny fixture; counts inner calls."""

    def __init__(self):
        self.calls = 0

    def evaluate(self, config, benchmark):
        self.calls += 1
        return tiny_metrics(config["A"], config["B"])


@pytest.fixture
def tiny_space():
    return make_space(TINY_PARAMS, [TINY_BENCHMARK])


@pytest.fixture
def tiny_evaluator():
    return TinyEvaluator()


def write_tiny_csv(path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["benchmark", "A", "B", "power", "time"])
        for a, b in itertools.product([1, 2, 4], [100, 200]):
            m = tiny_metrics(a, b)
            writer.writerow([TINY_BENCHMARK, a, b, m["power"], m["time"]])
    return path


@pytest.fixture
def tiny_csv(tmp_path):
    return write_tiny_csv(tmp_path / "tiny.csv")


@pytest.fixture
def tiny_space_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(
        '{"parameters": [{"name": "A", "settings": [1, 2, 4]},'
        ' {"name": "B", "settings": [100, 200]}],'
        ' "benchmarks": ["t"]}\n',
        encoding="utf-8",
    )
    return path


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion after the test run."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            name = nodeid.split("::")[-1]
            status = "PASS" if outcome == "passed" else "FAIL"
            # setup errors count as failures; never upgrade FAIL to PASS
            if lines.get(name) != "FAIL":
                lines[name] = status
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{lines[name]}: {name}")
