"""Command-line front end.

Subcommands:
    generate   write a synthetic scenario as normalized trace CSVs
    run        run chosen algorithms on one scenario (synthetic or trace)
    sweep      run one of the four parameter sweeps
    validate   parse and validate trace files, reporting problems

Options may come from a JSON config file (--config); explicit flags win.
Exit code is 0 when every requested run completed (infeasible placements
still count as completed); structural and I/O errors exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .affinity import build_final_affinity
from .harness import (
    ALGORITHM_NAMES,
    ResultRow,
    ResultsTable,
    SweepSpec,
    emit_results,
    run_scenario,
    run_sweep,
    _config_dict,
)
from .model import AffinityWeights, ModelError
from .workload import (
    GeneratorConfig,
    WorkloadError,
    generate_synthetic,
    load_trace,
    save_trace,
)


def _parse_algorithms(raw: str) -> tuple[str, ...]:
    names = tuple(name.strip() for name in raw.split(",") if name.strip())
    unknown = set(names) - set(ALGORITHM_NAMES)
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown algorithms {sorted(unknown)}; pick from {', '.join(ALGORITHM_NAMES)}"
        )
    return names


def _parse_values(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep values {raw!r}") from None


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--machines", type=int, help="machine count for synthetic scenarios")
    parser.add_argument("--apps", type=int, help="application count for synthetic scenarios")
    parser.add_argument("--seed", type=int, help="generator seed (default 0)")
    parser.add_argument("--alpha", type=float, help="affinity cost coefficient (default 4)")
    parser.add_argument("--pi-threshold", type=float, help="utilization split point (default 0.5)")
    parser.add_argument(
        "--anti-affinity-fraction", type=float,
        help="fraction of machines forbidden per application (default 0.1)",
    )
    parser.add_argument(
        "--config", type=Path,
        help="JSON file with the same keys as the flags; flags override it",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powerplace",
        description="Power- and affinity-aware container placement experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic scenario as trace CSVs")
    _add_scenario_flags(gen)
    gen.add_argument("--out", type=Path, required=True, help="output directory")

    run = sub.add_parser("run", help="run algorithms on one scenario")
    _add_scenario_flags(run)
    run.add_argument(
        "--trace", nargs="+", type=Path, metavar="CSV",
        help="machines.csv applications.csv [affinity.csv]",
    )
    run.add_argument(
        "--algorithms", type=_parse_algorithms, default=("pap", "aap", "cpaap"),
        help="comma-separated subset of " + ",".join(ALGORITHM_NAMES),
    )
    run.add_argument("--out", type=Path, help="results file (default: stdout summary only)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    _add_scenario_flags(sweep)
    sweep.add_argument(
        "--kind", required=True, choices=("machines", "applications", "anti_affinity", "alpha"),
    )
    sweep.add_argument("--values", type=_parse_values, required=True, help="comma-separated points")
    sweep.add_argument(
        "--algorithms", type=_parse_algorithms, default=("pap", "aap", "cpaap"),
        help="comma-separated subset of " + ",".join(ALGORITHM_NAMES),
    )
    sweep.add_argument("--reps", type=int, default=1, help="seeds per sweep point")
    sweep.add_argument("--out", type=Path, required=True, help="results file")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")

    val = sub.add_parser("validate", help="check trace files")
    val.add_argument(
        "--trace", nargs="+", type=Path, required=True, metavar="CSV",
        help="machines.csv applications.csv [affinity.csv]",
    )
    return parser


def _load_config_file(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise WorkloadError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise WorkloadError(f"config {path} must hold a JSON object")
    return data


def _setting(args: argparse.Namespace, file_config: dict, flag: str, key: str, default):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    if key in file_config:
        return file_config[key]
    return default


def _generator_config(args: argparse.Namespace) -> GeneratorConfig:
    file_config = _load_config_file(getattr(args, "config", None))
    machines = _setting(args, file_config, "machines", "machines", None)
    apps = _setting(args, file_config, "apps", "apps", None)
    if machines is None or apps is None:
        raise WorkloadError("synthetic scenarios need --machines and --apps (or config keys)")
    weights = file_config.get("weights")
    return GeneratorConfig(
        machine_count=int(machines),
        application_count=int(apps),
        seed=int(_setting(args, file_config, "seed", "seed", 0)),
        anti_affinity_fraction=float(
            _setting(args, file_config, "anti_affinity_fraction", "anti_affinity_fraction", 0.1)
        ),
        alpha=float(_setting(args, file_config, "alpha", "alpha", 4.0)),
        pi_threshold=float(_setting(args, file_config, "pi_threshold", "pi_threshold", 0.5)),
        weights=AffinityWeights(*weights) if weights else AffinityWeights(0.4, 0.2, 0.2, 0.2),
        user_affinity_density=float(
            file_config.get("user_affinity_density", 0.2)
        ),
    )


def _scenario_from_args(args: argparse.Namespace):
    """Build (scenario, config-dict) from --trace or synthetic flags."""
    trace = getattr(args, "trace", None)
    file_config = _load_config_file(getattr(args, "config", None))
    if trace:
        if len(trace) not in (2, 3):
            raise WorkloadError("--trace takes machines.csv applications.csv [affinity.csv]")
        alpha = float(_setting(args, file_config, "alpha", "alpha", 4.0))
        pi_t = float(_setting(args, file_config, "pi_threshold", "pi_threshold", 0.5))
        seed = int(_setting(args, file_config, "seed", "seed", 0))
        scenario = load_trace(
            trace[0], trace[1], trace[2] if len(trace) == 3 else None,
            alpha=alpha, pi_threshold=pi_t, seed=seed,
        )
        resolved = {
            "trace": [str(p) for p in trace],
            "alpha": alpha,
            "pi_threshold": pi_t,
            "seed": seed,
        }
        return scenario, resolved
    config = _generator_config(args)
    return generate_synthetic(config), _config_dict(config)


def _cmd_generate(args: argparse.Namespace) -> int:
    config = _generator_config(args)
    scenario = generate_synthetic(config)
    paths = save_trace(scenario, args.out)
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    scenario, resolved = _scenario_from_args(args)
    affinity = build_final_affinity(scenario)
    rows = []
    for algorithm in args.algorithms:
        result = run_scenario(scenario, algorithm, affinity)
        r = result.report
        rows.append(
            ResultRow(
                sweep_point=0.0,
                algorithm=algorithm,
                seed=int(resolved.get("seed", 0)),
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
        print(
            f"{algorithm}: feasible={r.feasible} total={r.total_cost:.3f} "
            f"power={r.power_cost:.3f} payoff={r.affinity_payoff:.3f} "
            f"rho={r.satisfaction_ratio:.3f}"
        )
    if args.out is not None:
        table = ResultsTable(rows=tuple(rows), config=resolved)
        emit_results(table, args.out, args.format)
        print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    base = _generator_config(args)
    spec = SweepSpec(
        kind=args.kind,
        values=args.values,
        base=base,
        algorithms=args.algorithms,
        repetitions=args.reps,
    )
    table = run_sweep(spec)
    emit_results(table, args.out, args.format)
    failures = [r for r in table.rows if r.error is not None]
    print(f"{len(table.rows)} rows ({len(failures)} failed) -> {args.out}")
    for row in failures:
        print(f"  point {row.sweep_point} seed {row.seed} {row.algorithm}: {row.error}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    trace = args.trace
    if len(trace) not in (2, 3):
        raise WorkloadError("--trace takes machines.csv applications.csv [affinity.csv]")
    scenario = load_trace(trace[0], trace[1], trace[2] if len(trace) == 3 else None)
    print(
        f"ok: {scenario.num_machines} machines, {scenario.num_applications} applications, "
        f"{scenario.total_instances} instances"
    )
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": _cmd_generate,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ModelError, WorkloadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
