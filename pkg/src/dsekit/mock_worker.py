"""Reference worker process for the external-evaluator protocol.

Run as ``python -m dsekit.mock_worker``. Reads one JSON request per line on
stdin and writes one JSON response per line on stdout:

    request:  {"id": <int>, "benchmark": <str>, "config": {...}}
    response: {"id": <int>, "metrics": {...}}  or  {"id": <int>, "error": <str>}

Two metric models are available. ``tiny`` (the default) expects parameters
named A and B and computes power = 0.5*A + 0.002*B, time = 24/A + 200/B;
``synthetic`` runs the analytic multicore model, resolving the profile from
the benchmark name. The misbehavior flags exist so protocol error handling
can be exercised end to end: a worker can be told to answer a specific
benchmark with an error response, with a wrong response id, or with silence.
"""

from __future__ import annotations

import json
import sys
import time

import click

from .errors import EvaluationError
from .evaluators import SYNTHETIC_PROFILES, synthetic_evaluate


def _tiny_metrics(config: dict) -> dict[str, float]:
    try:
        a = float(config["A"])
        b = float(config["B"])
    except KeyError as exc:
        raise EvaluationError(f"tiny model requires parameter {exc}") from None
    return {"power": 0.5 * a + 0.002 * b, "time": 24.0 / a + 200.0 / b}


def _synthetic_metrics(config: dict, benchmark: str) -> dict[str, float]:
    profile = SYNTHETIC_PROFILES.get(benchmark)
    if profile is None:
        raise EvaluationError(f"unknown benchmark {benchmark!r}")
    return synthetic_evaluate(config, profile)


@click.command()
@click.option(
    "--model",
    type=click.Choice(["tiny", "synthetic"]),
    default="tiny",
    show_default=True,
    help="Metric model to answer with.",
)
@click.option("--error-on", default=None, help="Answer this benchmark with an error response.")
@click.option("--skew-id-on", default=None, help="Answer this benchmark with a wrong response id.")
@click.option("--hang-on", default=None, help="Never answer this benchmark.")
def main(model: str, error_on: str | None, skew_id_on: str | None, hang_on: str | None) -> None:
    """Serve evaluation requests from stdin until EOF."""
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            request_id = request["id"]
            benchmark = request["benchmark"]
            config = request["config"]
        except (json.JSONDecodeError, KeyError, TypeError):
            print(json.dumps({"id": -1, "error": "malformed request"}), flush=True)
            continue

        if hang_on is not None and benchmark == hang_on:
            time.sleep(3600)
            continue
        if error_on is not None and benchmark == error_on:
            response: dict = {"id": request_id, "error": f"injected failure for {benchmark}"}
        else:
            try:
                if model == "tiny":
                    metrics = _tiny_metrics(config)
                else:
                    metrics = _synthetic_metrics(config, benchmark)
                response = {"id": request_id, "metrics": metrics}
            except EvaluationError as exc:
                response = {"id": request_id, "error": str(exc)}
        if skew_id_on is not None and benchmark == skew_id_on:
            response["id"] = request_id + 1
        print(json.dumps(response), flush=True)


if __name__ == "__main__":
    main()
