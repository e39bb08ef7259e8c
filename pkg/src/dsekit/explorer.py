"""Four-phase search: one-shot significance, partitioning, exhaustive, greedy.

Each benchmark is optimized independently, in four phases:

1. **One-shot.** Evaluate the all-first-settings configuration, plus one
   configuration per multi-setting parameter with only that parameter moved
   to its last setting. Normalization maxima are taken from exactly these
   records. Significance is D_i = F(last_i) - F(first_i); the initial best
   setting B_i is the first setting when D_i > 0, otherwise the last one.
2. **Partition.** Parameters sorted by |D| descending (ties keep declaration
   order) are split into an exhaustive set (running product of setting counts
   capped by the threshold T), a greedy set (the upper half of the rest), and
   an untouched one-shot remainder.
3. **Exhaustive.** All combinations of the exhaustive set, other parameters
   frozen at B; the strict-minimum F wins, earliest enumeration index on ties.
4. **Greedy.** Each greedy parameter in significance order walks its settings
   starting from B_i (ascending for D_i >= 0, descending otherwise), others
   frozen at the current B; the walk stops at the first candidate that fails
   to strictly improve the best objective seen in this phase.

The evaluation log keeps one record per distinct configuration per benchmark,
tagged with the phase that first requested it, so the log length is exactly
the unique-evaluation count that percent-explored reporting is based on.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

from .design_space import Config, DesignSpace, enumerate_configs, validate
from .errors import DegenerateMetricError, EvaluationError
from .evaluators import CachedEvaluator, Evaluator
from .objective import (
    NormalizationContext,
    WeightVector,
    build_context,
    objective,
    validate_weights,
)

PHASE_ONESHOT = "oneshot"
PHASE_EXHAUSTIVE = "exhaustive"
PHASE_GREEDY = "greedy"

_T = TypeVar("_T")
_R = TypeVar("_R")


def map_ordered(
    fn: Callable[[_T], _R], items: Iterable[_T], jobs: int
) -> Iterator[_R]:
    """Apply fn with up to `jobs` concurrent calls, yielding in input order.

    Work is dispatched in bounded chunks so very large enumerations never
    queue all at once. With jobs <= 1 this is a plain serial map.
    """
    if jobs <= 1:
        for item in items:
            yield fn(item)
        return
    iterator = iter(items)
    chunk_size = max(4 * jobs, 16)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        while True:
            chunk = list(islice(iterator, chunk_size))
            if not chunk:
                return
            yield from pool.map(fn, chunk)


@dataclass
class EvalRecord:
    """One logged evaluation — the first request of a configuration in a run.

    Normalized metrics and the objective are filled in once the one-shot
    normalization context exists; phase-1 records are backfilled.
    """

    benchmark: str
    phase: str
    seq: int
    config: Config
    metrics: dict[str, float]
    normalized: dict[str, float] | None = None
    objective: float | None = None


@dataclass(frozen=True)
class Partition:
    """Threshold split of the multi-setting parameters.

    Each set holds parameter names in descending-|significance| order;
    num_exhaustive is the Cartesian-product size of the exhaustive set
    (1 when the set is empty).
    """

    exhaustive: tuple[str, ...]
    greedy: tuple[str, ...]
    oneshot: tuple[str, ...]
    num_exhaustive: int
    warnings: tuple[str, ...] = ()


@dataclass
class OneShotOutcome:
    significance: dict[str, float]
    best: Config
    ctx: NormalizationContext
    records: list[EvalRecord]


@dataclass
class BenchmarkResult:
    benchmark: str
    best_config: Config | None
    best_metrics: dict[str, float] | None
    objective: float | None
    significance: dict[str, float]
    partition: Partition | None
    maxima: dict[str, float]
    degenerate: tuple[str, ...]
    unique_evaluations: int
    total_requests: int
    records: list[EvalRecord]
    error: str | None = None


@dataclass
class RunResult:
    space: DesignSpace
    weights: dict[str, float]
    threshold: int
    benchmarks: dict[str, BenchmarkResult]

    def records(self) -> list[EvalRecord]:
        """All logs concatenated in benchmark run order."""
        out: list[EvalRecord] = []
        for result in self.benchmarks.values():
            out.extend(result.records)
        return out

    def context(self) -> NormalizationContext:
        ctx = NormalizationContext()
        for name, result in self.benchmarks.items():
            if result.maxima:
                ctx.maxima[name] = dict(result.maxima)
                ctx.degenerate.update((name, m) for m in result.degenerate)
        return ctx

    @property
    def failed(self) -> list[str]:
        return [name for name, r in self.benchmarks.items() if r.error is not None]


class _Session:
    """Per-benchmark run state: log, counters, objective plumbing."""

    def __init__(
        self,
        space: DesignSpace,
        benchmark: str,
        evaluator: Evaluator,
        weights: WeightVector,
        jobs: int,
    ):
        self.space = space
        self.benchmark = benchmark
        self.evaluator = evaluator
        self.weights = weights
        self.jobs = jobs
        self.ctx: NormalizationContext | None = None
        self.records: list[EvalRecord] = []
        self._logged: dict[tuple, EvalRecord] = {}
        self.total_requests = 0

    @property
    def unique_evaluations(self) -> int:
        return len(self.records)

    def evaluate_many(
        self, configs: Sequence[Config], phase: str
    ) -> list[tuple[dict[str, float], float | None]]:
        """Evaluate a batch in order; log each configuration's first request."""
        jobs = self.jobs if len(configs) > 1 else 1
        metrics_list = list(
            map_ordered(
                lambda c: self.evaluator.evaluate(c, self.benchmark), configs, jobs
            )
        )
        out = []
        for config, metrics in zip(configs, metrics_list):
            self.total_requests += 1
            normalized = None
            value = None
            if self.ctx is not None:
                normalized = self.ctx.normalize(self.benchmark, metrics)
                value = objective(metrics, self.ctx, self.benchmark, self.weights)
            key = self.space.config_key(config)
            if key not in self._logged:
                record = EvalRecord(
                    benchmark=self.benchmark,
                    phase=phase,
                    seq=len(self.records),
                    config=dict(config),
                    metrics=dict(metrics),
                    normalized=normalized,
                    objective=value,
                )
                self._logged[key] = record
                self.records.append(record)
            out.append((metrics, value))
        return out

    def evaluate(self, config: Config, phase: str) -> tuple[dict[str, float], float | None]:
        return self.evaluate_many([config], phase)[0]

    def logged_metrics(self, config: Config) -> dict[str, float]:
        return dict(self._logged[self.space.config_key(config)].metrics)


def _one_shot(session: _Session) -> tuple[dict[str, float], Config]:
    space = session.space
    base = {p.name: p.first for p in space.parameters}
    multi = [p for p in space.parameters if len(p) > 1]
    configs = [base] + [{**base, p.name: p.last} for p in multi]
    results = session.evaluate_many(configs, PHASE_ONESHOT)

    violations = validate_weights(session.weights, results[0][0].keys())
    if violations:
        raise ValueError("invalid weights: " + "; ".join(violations))

    session.ctx = build_context(
        (session.benchmark, metrics) for metrics, _ in results
    )
    for record in session.records:
        record.normalized = session.ctx.normalize(session.benchmark, record.metrics)
        record.objective = objective(
            record.metrics, session.ctx, session.benchmark, session.weights
        )

    f_base = session.records[0].objective
    assert f_base is not None
    significance: dict[str, float] = {}
    best: Config = dict(base)
    for p, record in zip(multi, session.records[1:]):
        f_last = record.objective
        assert f_last is not None
        d = f_last - f_base
        significance[p.name] = d
        best[p.name] = p.first if d > 0 else p.last
    return significance, {p.name: best[p.name] for p in space.parameters}


def one_shot(
    space: DesignSpace,
    benchmark: str,
    evaluator: Evaluator,
    weights: WeightVector,
    jobs: int = 1,
) -> OneShotOutcome:
    """Phase 1: endpoint evaluations, significance table, initial best settings."""
    session = _Session(space, benchmark, evaluator, weights, jobs)
    significance, best = _one_shot(session)
    assert session.ctx is not None
    return OneShotOutcome(significance, best, session.ctx, session.records)


def partition(
    significance: Mapping[str, float], space: DesignSpace, threshold: int
) -> Partition:
    """Phase 2: split parameters by significance under the exhaustive cap.

    Parameters are taken in descending |D| (declaration order on ties). The
    exhaustive set grows while the running product of setting counts stays
    within the threshold; the first rejection stops it. The next
    ceil(remaining / 2) parameters form the greedy set, the rest stay at
    their one-shot best settings.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    decl_index = {name: i for i, name in enumerate(space.names)}
    ordered = sorted(
        significance, key=lambda name: (-abs(significance[name]), decl_index[name])
    )
    exhaustive: list[str] = []
    warnings: list[str] = []
    product = 1
    for name in ordered:
        size = len(space.parameter(name))
        if product * size > threshold:
            if not exhaustive:
                warnings.append(
                    f"most significant parameter {name!r} has {size} settings, "
                    f"more than threshold {threshold}; exhaustive set is empty"
                )
            break
        exhaustive.append(name)
        product *= size
    remaining = ordered[len(exhaustive):]
    greedy_count = math.ceil(len(remaining) / 2)
    return Partition(
        exhaustive=tuple(exhaustive),
        greedy=tuple(remaining[:greedy_count]),
        oneshot=tuple(remaining[greedy_count:]),
        num_exhaustive=product,
        warnings=tuple(warnings),
    )


def _exhaustive(
    session: _Session, part: Partition, best: Config
) -> tuple[Config, float]:
    space = session.space
    if not part.exhaustive:
        # Nothing to enumerate, but the all-best configuration is evaluated
        # once so the greedy phase starts from a defined objective.
        config = dict(best)
        _, value = session.evaluate(config, PHASE_EXHAUSTIVE)
        assert value is not None
        return config, value

    members = set(part.exhaustive)
    free = [name for name in space.names if name in members]
    fixed = {name: best[name] for name in space.names if name not in members}
    candidates = list(enumerate_configs(space, free=free, fixed=fixed))
    results = session.evaluate_many(candidates, PHASE_EXHAUSTIVE)

    best_config = dict(best)
    best_value = math.inf
    for config, (_, value) in zip(candidates, results):
        assert value is not None
        if value < best_value:
            best_value = value
            best_config = dict(config)
    return best_config, best_value


def exhaustive_phase(
    space: DesignSpace,
    part: Partition,
    best: Config,
    ctx: NormalizationContext,
    weights: WeightVector,
    benchmark: str,
    evaluator: Evaluator,
    jobs: int = 1,
) -> tuple[Config, float, list[EvalRecord]]:
    """Phase 3: full scan over the exhaustive set, others frozen at best."""
    session = _Session(space, benchmark, evaluator, weights, jobs)
    session.ctx = ctx
    best_config, best_value = _exhaustive(session, part, best)
    return best_config, best_value, session.records


def _greedy(
    session: _Session,
    part: Partition,
    significance: Mapping[str, float],
    best: Config,
) -> tuple[Config, float]:
    space = session.space
    best = dict(best)
    best_value = math.inf
    for name in part.greedy:
        param = space.parameter(name)
        if significance[name] >= 0:
            walk = param.settings
        else:
            walk = tuple(reversed(param.settings))
        for setting in walk:
            config = dict(best)
            config[name] = setting
            _, value = session.evaluate(config, PHASE_GREEDY)
            assert value is not None
            if value < best_value:
                best_value = value
                best[name] = setting
            else:
                break
    return best, best_value


def greedy_phase(
    space: DesignSpace,
    part: Partition,
    significance: Mapping[str, float],
    best: Config,
    ctx: NormalizationContext,
    weights: WeightVector,
    benchmark: str,
    evaluator: Evaluator,
    jobs: int = 1,
) -> tuple[Config, float, list[EvalRecord]]:
    """Phase 4: directional per-parameter walks over the greedy set.

    The walk for each parameter starts at its current best setting and stops
    at the first candidate that does not strictly improve on the best
    objective seen so far in this phase.
    """
    session = _Session(space, benchmark, evaluator, weights, jobs)
    session.ctx = ctx
    best_config, best_value = _greedy(session, part, significance, best)
    return best_config, best_value, session.records


def run(
    space: DesignSpace,
    evaluator: Evaluator,
    weights: WeightVector,
    threshold: int,
    benchmarks: Sequence[str] | None = None,
    jobs: int = 1,
) -> RunResult:
    """Run all four phases for every benchmark.

    The evaluator is wrapped in a memoizing cache unless it already is one.
    An evaluation failure aborts only the affected benchmark — its result
    records the error and the remaining benchmarks still complete. Identical
    inputs produce identical results, including log order.
    """
    violations = validate(space)
    if violations:
        raise ValueError("invalid space: " + "; ".join(violations))
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if benchmarks is None:
        benchmarks = space.benchmarks
    cache = evaluator if isinstance(evaluator, CachedEvaluator) else CachedEvaluator(evaluator)

    results: dict[str, BenchmarkResult] = {}
    for benchmark in benchmarks:
        session = _Session(space, benchmark, cache, weights, jobs)
        significance: dict[str, float] = {}
        part: Partition | None = None
        try:
            significance, best = _one_shot(session)
            part = partition(significance, space, threshold)
            best, value = _exhaustive(session, part, best)
            if part.greedy:
                best, value = _greedy(session, part, significance, best)
            results[benchmark] = BenchmarkResult(
                benchmark=benchmark,
                best_config=best,
                best_metrics=session.logged_metrics(best),
                objective=value,
                significance=significance,
                partition=part,
                maxima=dict(session.ctx.maxima[benchmark]) if session.ctx else {},
                degenerate=_degenerate_names(session.ctx, benchmark),
                unique_evaluations=session.unique_evaluations,
                total_requests=session.total_requests,
                records=session.records,
            )
        except (EvaluationError, DegenerateMetricError) as exc:
            results[benchmark] = BenchmarkResult(
                benchmark=benchmark,
                best_config=None,
                best_metrics=None,
                objective=None,
                significance=significance,
                partition=part,
                maxima=dict(session.ctx.maxima[benchmark]) if session.ctx else {},
                degenerate=_degenerate_names(session.ctx, benchmark),
                unique_evaluations=session.unique_evaluations,
                total_requests=session.total_requests,
                records=session.records,
                error=str(exc),
            )
    return RunResult(
        space=space,
        weights=dict(weights),
        threshold=threshold,
        benchmarks=results,
    )


def _degenerate_names(ctx: NormalizationContext | None, benchmark: str) -> tuple[str, ...]:
    if ctx is None:
        return ()
    return tuple(sorted(m for (b, m) in ctx.degenerate if b == benchmark))
