"""Experiment harness: single runs, parameter sweeps, and result emission.

A sweep varies one scenario parameter (machine count, application count,
anti-affinity fraction, or alpha) over a list of points, runs each chosen
algorithm on ``repetitions`` seeded scenarios per point, and collects one
result row per run. Row seeds repeat across points so comparisons along
the sweep axis are paired.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

from .affinity import AffinityMatrix, build_final_affinity
from .costs import MetricsReport, metrics
from .model import AllocationMatrix, Scenario
from .oracle import DEFAULT_NODE_BUDGET, optimal_place
from .placement import (
    PlacementOutcome,
    aap_place,
    cpaap_place,
    first_fit_place,
    pap_place,
)
from .workload import GeneratorConfig, generate_synthetic

SWEEP_KINDS = ("machines", "applications", "anti_affinity", "alpha")
ALGORITHM_NAMES = ("pap", "aap", "cpaap", "first_fit", "oracle")

# Scale guard for selecting the exhaustive solver inside a sweep.
ORACLE_MAX_MACHINES = 4
ORACLE_MAX_INSTANCES = 8

CSV_HEADER = (
    "sweep_point,algorithm,seed,feasible,total_cost,reduced_cost,"
    "power_cost,payoff,rho,avg_util,psi,runtime_ms"
)


class HarnessError(ValueError):
    """Invalid sweep specification or run request."""


@dataclass(frozen=True)
class RunResult:
    report: MetricsReport
    outcome: PlacementOutcome


def _oracle_as_outcome(scenario: Scenario, affinity: AffinityMatrix, budget: int) -> PlacementOutcome:
    """Adapt the exhaustive solver to the placement outcome contract.

    The trace is synthesized from the optimal counts (application-major,
    machine ascending); pairs_examined carries the search node count.
    """
    result = optimal_place(scenario, affinity, budget=budget)
    if result.optimal is None:
        allocation = AllocationMatrix.zeros(scenario.num_applications, scenario.num_machines)
        return PlacementOutcome(
            allocation=allocation,
            feasible=False,
            failed_at=None,
            trace=(),
            pairs_examined=result.nodes_explored,
        )
    trace = []
    counts = result.optimal.counts
    for i in range(scenario.num_applications):
        k = 0
        for j in range(scenario.num_machines):
            for _ in range(int(counts[i, j])):
                trace.append((i, k, j))
                k += 1
    return PlacementOutcome(
        allocation=result.optimal,
        feasible=True,
        failed_at=None,
        trace=tuple(trace),
        pairs_examined=result.nodes_explored,
    )


def run_scenario(
    scenario: Scenario,
    algorithm: str,
    affinity: Optional[AffinityMatrix] = None,
    oracle_budget: int = DEFAULT_NODE_BUDGET,
) -> RunResult:
    """Run one algorithm on one scenario and evaluate the result.

    The affinity matrix is built once here when not supplied. Runtime is
    measured around the placement call only.
    """
    if algorithm not in ALGORITHM_NAMES:
        raise HarnessError(f"unknown algorithm {algorithm!r}; pick from {ALGORITHM_NAMES}")
    if affinity is None:
        affinity = build_final_affinity(scenario)
    start = time.perf_counter()
    if algorithm == "pap":
        outcome = pap_place(scenario, affinity)
    elif algorithm == "aap":
        outcome = aap_place(scenario, affinity)
    elif algorithm == "cpaap":
        outcome = cpaap_place(scenario, affinity)
    elif algorithm == "first_fit":
        outcome = first_fit_place(scenario)
    else:
        outcome = _oracle_as_outcome(scenario, affinity, oracle_budget)
    elapsed = time.perf_counter() - start
    report = metrics(scenario, outcome.allocation, affinity, runtime_s=elapsed)
    return RunResult(report=report, outcome=outcome)


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: vary ``kind`` over ``values`` for each algorithm.

    ``repetitions`` scenarios are generated per point, seeded
    base.seed + 0 .. base.seed + repetitions - 1.
    """

    kind: str
    values: tuple
    base: GeneratorConfig
    algorithms: tuple[str, ...]
    repetitions: int = 1

    def __post_init__(self) -> None:
        if self.kind not in SWEEP_KINDS:
            raise HarnessError(f"sweep kind must be one of {SWEEP_KINDS}")
        values = tuple(self.values)
        if not values:
            raise HarnessError("sweep values must be nonempty")
        diffs = [b - a for a, b in zip(values, values[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise HarnessError("sweep values must be strictly monotone")
        algorithms = tuple(self.algorithms)
        if not algorithms:
            raise HarnessError("at least one algorithm is required")
        unknown = set(algorithms) - set(ALGORITHM_NAMES)
        if unknown:
            raise HarnessError(f"unknown algorithms: {sorted(unknown)}")
        if self.repetitions < 1:
            raise HarnessError("repetitions must be >= 1")
        if "oracle" in algorithms:
            max_m = max(values) if self.kind == "machines" else self.base.machine_count
            max_n = max(values) if self.kind == "applications" else self.base.application_count
            max_i = max_n * self.base.instance_range[1]
            if max_m > ORACLE_MAX_MACHINES or max_i > ORACLE_MAX_INSTANCES:
                raise HarnessError(
                    "oracle runs are limited to "
                    f"{ORACLE_MAX_MACHINES} machines and {ORACLE_MAX_INSTANCES} instances"
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "algorithms", algorithms)


@dataclass(frozen=True)
class ResultRow:
    sweep_point: float
    algorithm: str
    seed: int
    feasible: bool
    total_cost: float
    reduced_cost: float
    power_cost: float
    payoff: float
    rho: float
    avg_util: float
    psi: float
    runtime_ms: float
    error: Optional[str] = None


@dataclass(frozen=True)
class ResultsTable:
    rows: tuple[ResultRow, ...]
    config: dict

    def mean_by_point(self) -> dict[tuple[float, str], dict[str, float]]:
        """Per (sweep point, algorithm): mean of each metric over seeds."""
        groups: dict[tuple[float, str], list[ResultRow]] = {}
        for row in self.rows:
            if row.error is None:
                groups.setdefault((row.sweep_point, row.algorithm), []).append(row)
        fields = ("total_cost", "reduced_cost", "power_cost", "payoff", "rho", "avg_util", "psi")
        out = {}
        for key, rows in sorted(groups.items()):
            out[key] = {f: sum(getattr(r, f) for r in rows) / len(rows) for f in fields}
            out[key]["feasible_rate"] = sum(r.feasible for r in rows) / len(rows)
        return out


def _config_at(spec: SweepSpec, point, rep: int) -> GeneratorConfig:
    seed = spec.base.seed + rep
    if spec.kind == "machines":
        return replace(spec.base, machine_count=int(point), seed=seed)
    if spec.kind == "applications":
        return replace(spec.base, application_count=int(point), seed=seed)
    if spec.kind == "anti_affinity":
        return replace(spec.base, anti_affinity_fraction=float(point), seed=seed)
    return replace(spec.base, alpha=float(point), seed=seed)


def run_sweep(spec: SweepSpec) -> ResultsTable:
    """Execute the full points x algorithms x repetitions grid.

    A failure in one run is recorded on its row (NaN metrics plus the
    error text) and the sweep continues.
    """
    rows: list[ResultRow] = []
    for point in spec.values:
        for rep in range(spec.repetitions):
            config = _config_at(spec, point, rep)
            seed = config.seed
            scenario = None
            affinity = None
            for algorithm in spec.algorithms:
                try:
                    if scenario is None:
                        scenario = generate_synthetic(config)
                        affinity = build_final_affinity(scenario)
                    result = run_scenario(scenario, algorithm, affinity)
                    r = result.report
                    rows.append(
                        ResultRow(
                            sweep_point=float(point),
                            algorithm=algorithm,
                            seed=seed,
                            feasible=r.feasible,
                            total_cost=r.total_cost,
                            reduced_cost=r.reduced_cost,
                            power_cost=r.power_cost,
                            payoff=r.affinity_payoff,
                            rho=r.satisfaction_ratio,
                            avg_util=r.avg_utilization,
                            psi=r.payoff_ratio,
                            runtime_ms=r.runtime_s * 1000.0,
                        )
                    )
                except Exception as exc:  # noqa: BLE001 - sweep must survive one bad run
                    nan = float("nan")
                    rows.append(
                        ResultRow(
                            sweep_point=float(point),
                            algorithm=algorithm,
                            seed=seed,
                            feasible=False,
                            total_cost=nan, reduced_cost=nan, power_cost=nan,
                            payoff=nan, rho=nan, avg_util=nan, psi=nan,
                            runtime_ms=nan,
                            error=f"{type(exc).__name__}: {exc}",
                        )
                    )
    rows.sort(key=lambda r: (r.sweep_point, r.algorithm, r.seed))
    config = {
        "kind": spec.kind,
        "values": list(spec.values),
        "algorithms": list(spec.algorithms),
        "repetitions": spec.repetitions,
        "base": _config_dict(spec.base),
    }
    return ResultsTable(rows=tuple(rows), config=config)


def _config_dict(config: GeneratorConfig) -> dict:
    d = asdict(config)
    d["weights"] = list(config.weights.as_tuple())
    return d


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return repr(float(value))


def emit_results(table: ResultsTable, path: str | Path, fmt: str = "csv") -> Path:
    """Write the result table to ``path`` as CSV or JSON.

    The CSV column set is fixed (see CSV_HEADER); the JSON document also
    carries the fully resolved configuration and per-point aggregates, so
    every results file is self-describing.
    """
    if not table.rows:
        raise HarnessError("refusing to emit an empty results table")
    if fmt not in ("csv", "json"):
        raise HarnessError(f"format must be csv or json, got {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [CSV_HEADER]
        for r in table.rows:
            lines.append(
                ",".join(
                    (
                        _fmt(r.sweep_point),
                        r.algorithm,
                        str(r.seed),
                        "true" if r.feasible else "false",
                        _fmt(r.total_cost),
                        _fmt(r.reduced_cost),
                        _fmt(r.power_cost),
                        _fmt(r.payoff),
                        _fmt(r.rho),
                        _fmt(r.avg_util),
                        _fmt(r.psi),
                        _fmt(r.runtime_ms),
                    )
                )
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        doc = {
            "config": table.config,
            "rows": [asdict(r) for r in table.rows],
            "aggregates": [
                {"sweep_point": point, "algorithm": algorithm, **means}
                for (point, algorithm), means in table.mean_by_point().items()
            ],
        }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
