"""Power- and affinity-aware container placement.

Domain model, greedy placement heuristics, an exhaustive exact solver for
tiny instances, synthetic and trace-based workloads, and an experiment
harness with a CLI.
"""

from .affinity import (
    AffinityMatrix,
    build_final_affinity,
    final_affinity,
    system_affinity,
    system_affinity_matrix,
    validate_user_anti_consistency,
)
from .costs import (
    CostBreakdown,
    MetricsReport,
    delta_cost,
    machine_power,
    metrics,
    total_cost,
    utilization,
)
from .harness import (
    ResultRow,
    ResultsTable,
    RunResult,
    SweepSpec,
    emit_results,
    run_scenario,
    run_sweep,
)
from .model import (
    AffinityWeights,
    AllocationMatrix,
    Application,
    ConstraintResult,
    Machine,
    ModelError,
    ResourceVector,
    Scenario,
    ValidationReport,
    fits,
    remaining_capacity,
    validate_allocation,
)
from .oracle import OracleResult, feasibility_check, optimal_place
from .placement import (
    PapPriorityState,
    PlacementOutcome,
    aap_place,
    cpaap_place,
    first_fit_place,
    pap_place,
    sort_applications,
)
from .workload import (
    BackfillParams,
    GeneratorConfig,
    ResourceRanges,
    WorkloadError,
    generate_synthetic,
    load_trace,
    save_trace,
)

__all__ = [
    "AffinityMatrix",
    "AffinityWeights",
    "AllocationMatrix",
    "Application",
    "BackfillParams",
    "ConstraintResult",
    "CostBreakdown",
    "GeneratorConfig",
    "Machine",
    "MetricsReport",
    "ModelError",
    "OracleResult",
    "PapPriorityState",
    "PlacementOutcome",
    "ResourceRanges",
    "ResourceVector",
    "ResultRow",
    "ResultsTable",
    "RunResult",
    "Scenario",
    "SweepSpec",
    "ValidationReport",
    "WorkloadError",
    "aap_place",
    "build_final_affinity",
    "cpaap_place",
    "delta_cost",
    "emit_results",
    "feasibility_check",
    "final_affinity",
    "first_fit_place",
    "fits",
    "generate_synthetic",
    "load_trace",
    "machine_power",
    "metrics",
    "optimal_place",
    "pap_place",
    "remaining_capacity",
    "run_scenario",
    "run_sweep",
    "save_trace",
    "sort_applications",
    "system_affinity",
    "system_affinity_matrix",
    "total_cost",
    "utilization",
    "validate_allocation",
    "validate_user_anti_consistency",
]
