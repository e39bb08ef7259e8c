import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from dsekit import __version__
from dsekit.artifacts import (
    COMPARE_JSON_FILE,
    COMPARE_TXT_FILE,
    EVALS_FILE,
    MANIFEST_FILE,
    ORACLE_FILE,
    PARETO_FILE,
    RESULT_FILE,
    SIGNIFICANCE_FILE,
    SPACE_FILE,
    SWEEP_FILE,
    load_run,
    replay_hash,
    space_hash,
)
from dsekit.cli import main

from .conftest import write_tiny_csv

TINY_BEST_F = 0.3513986013986014


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)


def do_run(runner, tmp_path, out="run", threshold=3, **overrides):
    """A standard tiny table-backed run; returns (result, out_dir)."""
    space_file = tmp_path / "tiny.json"
    if not space_file.exists():
        space_file.write_text(
            json.dumps(
                {
                    "parameters": [
                        {"name": "A", "settings": [1, 2, 4]},
                        {"name": "B", "settings": [100, 200]},
                    ],
                    "benchmarks": ["t"],
                }
            ),
            encoding="utf-8",
        )
    csv_file = tmp_path / "tiny.csv"
    if not csv_file.exists():
        write_tiny_csv(csv_file)
    out_dir = tmp_path / out
    args = {
        "--space": space_file,
        "--threshold": threshold,
        "--weights": "power=0.1,time=0.9",
        "--evaluator": f"table:{csv_file}",
        "--out": out_dir,
        "--jobs": 1,
        **overrides,
    }
    flat = ["run"]
    for key, value in args.items():
        if value is not None:
            flat += [key, value]
    return invoke(runner, *flat), out_dir


class TestValidate:
    def test_valid_file(self, runner, tiny_space_file):
        result = invoke(runner, "validate", tiny_space_file)
        assert result.exit_code == 0
        assert "ok: 2 parameters, 1 benchmarks, 6 configurations" in result.stdout

    def test_shipped_space_by_name(self, runner):
        result = invoke(runner, "validate", "parsec-small")
        assert result.exit_code == 0
        assert "2700 configurations" in result.stdout

    def test_violations_exit_1(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(
            '{"parameters": [{"name": "A", "settings": []}], "benchmarks": []}',
            encoding="utf-8",
        )
        result = invoke(runner, "validate", bad)
        assert result.exit_code == 1
        assert "violation:" in result.stdout

    def test_missing_file_exit_3(self, runner):
        result = invoke(runner, "validate", "no-such-space")
        assert result.exit_code == 3
        assert "not found" in result.stderr

    def test_malformed_json_exit_1(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops", encoding="utf-8")
        result = invoke(runner, "validate", bad)
        assert result.exit_code == 1

    def test_descending_settings_warn_but_pass(self, runner, tmp_path):
        path = tmp_path / "desc.json"
        path.write_text(
            '{"parameters": [{"name": "A", "settings": [4, 1]}], "benchmarks": ["b"]}',
            encoding="utf-8",
        )
        result = invoke(runner, "validate", path)
        assert result.exit_code == 0
        assert "not in ascending order" in result.stderr


class TestRun:
    def test_writes_all_artifacts(self, runner, tmp_path):
        result, out_dir = do_run(runner, tmp_path)
        assert result.exit_code == 0
        for name in (
            MANIFEST_FILE,
            SPACE_FILE,
            RESULT_FILE,
            EVALS_FILE,
            SIGNIFICANCE_FILE,
            PARETO_FILE,
        ):
            assert (out_dir / name).is_file()
        assert "t: F=0.351399 [A=4 B=200] (5 unique evaluations)" in result.stdout

    def test_result_payload(self, runner, tmp_path):
        _, out_dir = do_run(runner, tmp_path)
        payload = json.loads((out_dir / RESULT_FILE).read_text(encoding="utf-8"))
        bench = payload["benchmarks"]["t"]
        assert bench["best_config"] == {"A": 4, "B": 200}
        assert bench["objective"] == pytest.approx(TINY_BEST_F, rel=1e-12)
        assert bench["partition"]["exhaustive"] == ["A"]
        assert bench["partition"]["greedy"] == ["B"]
        assert bench["unique_evaluations"] == 5
        assert bench["error"] is None
        assert payload["threshold"] == 3
        assert payload["weights"] == {"power": 0.1, "time": 0.9}

    def test_evals_csv_layout(self, runner, tmp_path):
        _, out_dir = do_run(runner, tmp_path)
        with open(out_dir / EVALS_FILE, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "benchmark", "phase", "seq", "A", "B",
            "power", "time", "norm_power", "norm_time", "objective",
        ]
        assert len(rows) == 1 + 5
        phases = [r[1] for r in rows[1:]]
        assert phases == ["oneshot", "oneshot", "oneshot", "exhaustive", "exhaustive"]
        assert [r[2] for r in rows[1:]] == ["0", "1", "2", "3", "4"]
        # first row is the all-first-settings configuration
        assert rows[1][3:5] == ["1", "100"]
        assert float(rows[1][9]) == pytest.approx(0.1 * (0.7 / 2.2) + 0.9)

    def test_significance_csv(self, runner, tmp_path):
        _, out_dir = do_run(runner, tmp_path)
        with open(out_dir / SIGNIFICANCE_FILE, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        table = {r["parameter"]: float(r["significance"]) for r in rows}
        assert all(r["benchmark"] == "t" for r in rows)
        assert table["A"] == pytest.approx(-0.554895104895105, rel=1e-12)
        assert table["B"] == pytest.approx(-0.025524475524475565, rel=1e-12)

    def test_pareto_csv(self, runner, tmp_path):
        _, out_dir = do_run(runner, tmp_path)
        with open(out_dir / PARETO_FILE, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert rows, "front must not be empty"
        assert set(rows[0]) == {
            "benchmark", "power", "time", "objective", "A", "B", "chosen",
        }
        chosen = [r for r in rows if r["chosen"] == "1"]
        assert len(chosen) == 1
        assert chosen[0]["A"] == "4" and chosen[0]["B"] == "200"
        # front members are mutually non-dominated, sorted by first metric
        powers = [float(r["power"]) for r in rows]
        times = [float(r["time"]) for r in rows]
        assert powers == sorted(powers)
        assert times == sorted(times, reverse=True)

    def test_manifest_and_replay_hash(self, runner, tmp_path):
        _, out_dir = do_run(runner, tmp_path)
        manifest = json.loads((out_dir / MANIFEST_FILE).read_text(encoding="utf-8"))
        assert manifest["tool"] == "dsekit"
        assert manifest["version"] == __version__
        assert manifest["threshold"] == 3
        assert manifest["replay_hash"] == replay_hash(manifest)
        # the replay hash ignores timestamp, jobs, and output location
        changed = dict(manifest, timestamp="2000-01-01T00:00:00", jobs=99, out_dir="x")
        assert replay_hash(changed) == manifest["replay_hash"]
        assert replay_hash(dict(manifest, threshold=4)) != manifest["replay_hash"]

    def test_load_run_round_trip(self, runner, tmp_path):
        _, out_dir = do_run(runner, tmp_path)
        manifest, run_result = load_run(out_dir)
        assert manifest["replay_hash"]
        assert space_hash(run_result.space) == manifest["space_sha256"]
        bench = run_result.benchmarks["t"]
        assert bench.best_config == {"A": 4, "B": 200}
        assert len(bench.records) == 5
        assert bench.records[0].config == {"A": 1, "B": 100}
        assert bench.records[0].normalized is not None

    def test_profile_flag(self, runner, tmp_path):
        result, out_dir = do_run(
            runner, tmp_path, **{"--weights": None, "--profile": "highperf"}
        )
        assert result.exit_code == 0
        manifest = json.loads((out_dir / MANIFEST_FILE).read_text(encoding="utf-8"))
        assert manifest["weights"] == {"power": 0.1, "time": 0.9}

    def test_weights_and_profile_conflict(self, runner, tmp_path):
        result, _ = do_run(runner, tmp_path, **{"--profile": "highperf"})
        assert result.exit_code == 1
        assert "exactly one of --weights or --profile" in result.stderr

    def test_weights_required(self, runner, tmp_path):
        result, _ = do_run(runner, tmp_path, **{"--weights": None})
        assert result.exit_code == 1

    def test_bad_threshold(self, runner, tmp_path):
        result, _ = do_run(runner, tmp_path, threshold=0)
        assert result.exit_code == 1
        assert "threshold" in result.stderr

    def test_unknown_evaluator(self, runner, tmp_path):
        result, _ = do_run(runner, tmp_path, **{"--evaluator": "quantum"})
        assert result.exit_code == 1

    def test_missing_space_file(self, runner, tmp_path):
        result = invoke(
            runner, "run", "--space", tmp_path / "nope.json", "--threshold", 3,
            "--weights", "power=1.0", "--evaluator", "sepmono",
            "--out", tmp_path / "out",
        )
        assert result.exit_code == 3

    def test_missing_table_file(self, runner, tmp_path):
        result, _ = do_run(runner, tmp_path, **{"--evaluator": "table:/no/such.csv"})
        assert result.exit_code == 3

    def test_incomplete_table_fails_with_artifacts(self, runner, tmp_path):
        short_csv = tmp_path / "short.csv"
        short_csv.write_text(
            "benchmark,A,B,power,time\n"
            "t,1,100,0.7,26.0\n"
            "t,4,100,2.2,8.0\n"
            "t,1,200,0.9,25.0\n",
            encoding="utf-8",
        )
        result, out_dir = do_run(runner, tmp_path, **{"--evaluator": f"table:{short_csv}"})
        assert result.exit_code == 2
        assert "evaluation failed for: t" in result.stderr
        payload = json.loads((out_dir / RESULT_FILE).read_text(encoding="utf-8"))
        assert payload["benchmarks"]["t"]["error"]
        assert "t: FAILED" in result.stdout

    def test_partition_warning_reaches_stderr(self, runner, tmp_path):
        result, _ = do_run(runner, tmp_path, threshold=2)
        assert result.exit_code == 0
        assert "exhaustive set is empty" in result.stderr

    def test_sepmono_needs_no_table(self, runner, tmp_path):
        result, out_dir = do_run(runner, tmp_path, **{"--evaluator": "sepmono"})
        assert result.exit_code == 0
        payload = json.loads((out_dir / RESULT_FILE).read_text(encoding="utf-8"))
        # time carries 0.9 of the weight, so the optimum is the all-last corner
        assert payload["benchmarks"]["t"]["best_config"] == {"A": 4, "B": 200}


class TestDeterminism:
    def test_identical_runs_share_bytes_and_replay_hash(self, runner, tmp_path):
        _, first = do_run(runner, tmp_path, out="run1")
        _, second = do_run(runner, tmp_path, out="run2")
        for name in (EVALS_FILE, RESULT_FILE, SIGNIFICANCE_FILE, PARETO_FILE, SPACE_FILE):
            assert (first / name).read_bytes() == (second / name).read_bytes()
        m1 = json.loads((first / MANIFEST_FILE).read_text(encoding="utf-8"))
        m2 = json.loads((second / MANIFEST_FILE).read_text(encoding="utf-8"))
        assert m1["replay_hash"] == m2["replay_hash"]
        assert m1["space_sha256"] == m2["space_sha256"]


class TestOracle:
    def test_oracle_and_compare_round_trip(self, runner, tmp_path):
        _, run_dir = do_run(runner, tmp_path)
        result = invoke(runner, "oracle", run_dir)
        assert result.exit_code == 0
        oracle_file = run_dir / "oracle" / ORACLE_FILE
        assert oracle_file.is_file()
        payload = json.loads(oracle_file.read_text(encoding="utf-8"))
        bench = payload["benchmarks"]["t"]
        assert bench["best_config"] == {"A": 4, "B": 200}
        assert bench["objective"] == pytest.approx(TINY_BEST_F, rel=1e-12)
        assert bench["evaluations"] == 6
        assert "t: F=0.351399 [A=4 B=200]" in result.stdout

        compared = invoke(runner, "compare", run_dir, run_dir / "oracle")
        assert compared.exit_code == 0
        assert (run_dir / COMPARE_JSON_FILE).is_file()
        assert (run_dir / COMPARE_TXT_FILE).is_file()
        doc = json.loads((run_dir / COMPARE_JSON_FILE).read_text(encoding="utf-8"))
        row = doc["benchmarks"]["t"]
        assert row["objective_gap_pct"] == 0.0
        assert row["unique_evaluations"] == 5
        assert row["cardinality"] == 6
        assert row["speedup"] == pytest.approx(1.2)
        text = (run_dir / COMPARE_TXT_FILE).read_text(encoding="utf-8")
        assert "benchmark: t" in text
        assert "speedup" in text
        assert compared.stdout.rstrip("\n") in text.rstrip("\n")

    def test_custom_out_dir(self, runner, tmp_path):
        _, run_dir = do_run(runner, tmp_path)
        custom = tmp_path / "elsewhere"
        result = invoke(runner, "oracle", run_dir, "--out", custom)
        assert result.exit_code == 0
        assert (custom / ORACLE_FILE).is_file()

    def test_guard_blocks_via_environment(self, runner, tmp_path):
        _, run_dir = do_run(runner, tmp_path)
        result = invoke(runner, "oracle", run_dir, env={"DSE_ORACLE_GUARD": "5"})
        assert result.exit_code == 1
        assert "enumeration guard" in result.stderr

    def test_missing_run_dir(self, runner, tmp_path):
        result = invoke(runner, "oracle", tmp_path / "absent")
        assert result.exit_code == 3


class TestCompareMismatch:
    def test_different_weights_rejected(self, runner, tmp_path):
        _, run_a = do_run(runner, tmp_path, out="a")
        invoke(runner, "oracle", run_a)
        _, run_b = do_run(
            runner, tmp_path, out="b", **{"--weights": "power=0.2,time=0.8"}
        )
        result = invoke(runner, "compare", run_b, run_a / "oracle")
        assert result.exit_code == 1
        assert "disagree on weights" in result.stderr

    def test_different_space_rejected(self, runner, tmp_path, tiny_csv):
        _, run_a = do_run(runner, tmp_path, out="a")
        invoke(runner, "oracle", run_a)
        other_space = tmp_path / "other.json"
        other_space.write_text(
            json.dumps(
                {
                    "parameters": [
                        {"name": "A", "settings": [1, 2]},
                        {"name": "B", "settings": [100, 200]},
                    ],
                    "benchmarks": ["t"],
                }
            ),
            encoding="utf-8",
        )
        result_b = invoke(
            runner, "run", "--space", other_space, "--threshold", 3,
            "--weights", "power=0.1,time=0.9", "--evaluator", f"table:{tiny_csv}",
            "--out", tmp_path / "b", "--jobs", 1,
        )
        assert result_b.exit_code == 0
        result = invoke(runner, "compare", tmp_path / "b", run_a / "oracle")
        assert result.exit_code == 1
        assert "disagree on space_sha256" in result.stderr


class TestSweep:
    def test_two_thresholds(self, runner, tmp_path, tiny_space_file, tiny_csv):
        out = tmp_path / "sweep"
        result = invoke(
            runner, "sweep", "--space", tiny_space_file, "--thresholds", "2,6",
            "--weights", "power=0.1,time=0.9", "--evaluator", f"table:{tiny_csv}",
            "--out", out, "--jobs", 1,
        )
        assert result.exit_code == 0
        assert (out / "run01-T2").is_dir()
        assert (out / "run02-T6").is_dir()
        with open(out / SWEEP_FILE, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["threshold"] for r in rows] == ["2", "6"]
        # a larger exhaustive budget never yields a worse objective
        assert float(rows[1]["objective"]) <= float(rows[0]["objective"])
        assert all(r["benchmark"] == "t" for r in rows)
        # T=6 covers the whole space exhaustively
        assert rows[1]["unique_evaluations"] == "6"
        assert float(rows[1]["explored_pct"]) == pytest.approx(100.0)

    def test_shared_memo_attributes_unique_per_run(self, runner, tmp_path, tiny_space_file, tiny_csv):
        out = tmp_path / "sweep"
        result = invoke(
            runner, "sweep", "--space", tiny_space_file, "--thresholds", "3,3",
            "--weights", "power=0.1,time=0.9", "--evaluator", f"table:{tiny_csv}",
            "--out", out, "--jobs", 1,
        )
        assert result.exit_code == 0
        with open(out / SWEEP_FILE, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        # both runs report their own unique count even though the second
        # was served entirely from the shared memo
        assert rows[0]["unique_evaluations"] == rows[1]["unique_evaluations"] == "5"
        assert rows[0]["objective"] == rows[1]["objective"]

    def test_single_threshold_rejected(self, runner, tmp_path, tiny_space_file, tiny_csv):
        result = invoke(
            runner, "sweep", "--space", tiny_space_file, "--thresholds", "3",
            "--weights", "power=0.1,time=0.9", "--evaluator", f"table:{tiny_csv}",
            "--out", tmp_path / "s",
        )
        assert result.exit_code == 1
        assert "at least two thresholds" in result.stderr

    def test_malformed_threshold_list(self, runner, tmp_path, tiny_space_file, tiny_csv):
        result = invoke(
            runner, "sweep", "--space", tiny_space_file, "--thresholds", "3,x",
            "--weights", "power=0.1,time=0.9", "--evaluator", f"table:{tiny_csv}",
            "--out", tmp_path / "s",
        )
        assert result.exit_code == 1
        assert "bad threshold list" in result.stderr


class TestExecBackend:
    def test_run_through_worker_matches_table(self, runner, tmp_path):
        import sys

        _, table_dir = do_run(runner, tmp_path, out="table-run")
        worker = f"exec:{sys.executable} -m dsekit.mock_worker"
        result, exec_dir = do_run(
            runner, tmp_path, out="exec-run", **{"--evaluator": worker}
        )
        assert result.exit_code == 0
        assert (exec_dir / EVALS_FILE).read_bytes() == (table_dir / EVALS_FILE).read_bytes()
        assert (exec_dir / RESULT_FILE).read_bytes() == (table_dir / RESULT_FILE).read_bytes()

    def test_worker_error_exits_2(self, runner, tmp_path):
        import sys

        worker = f"exec:{sys.executable} -m dsekit.mock_worker --error-on t"
        result, out_dir = do_run(runner, tmp_path, out="bad", **{"--evaluator": worker})
        assert result.exit_code == 2
        payload = json.loads((out_dir / RESULT_FILE).read_text(encoding="utf-8"))
        assert "injected failure" in payload["benchmarks"]["t"]["error"]


class TestVersion:
    def test_version_flag(self, runner):
        result = invoke(runner, "--version")
        assert result.exit_code == 0
        assert __version__ in result.stdout
