"""Greedy placement algorithms.

Four single-pass strategies share the same skeleton: sort applications by
decreasing demand, then place instances one at a time on a machine that is
not forbidden and has room. They differ only in how the machine is chosen:

  pap        lowest priority parameter first; the parameter tracks
             utilization below a threshold, then escalates (1, then
             doubling) so hot machines drop out of rotation
  aap        highest final affinity first
  cpaap      evaluates the lowest-utilization machine and the
             highest-affinity machine and takes the cheaper step
             by the objective delta
  first_fit  lowest machine id first (baseline)

All are deterministic: every tie falls back to machine id. Infeasibility
is an outcome, not an exception; the partial allocation and trace are
returned for diagnosis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .affinity import FINAL, AffinityMatrix
from .costs import delta_cost
from .model import (
    CAPACITY_SLACK,
    AllocationMatrix,
    Application,
    ModelError,
    Scenario,
)

PlacementEvent = tuple[int, int, int]  # (application id, instance index, machine id)


@dataclass(frozen=True)
class PlacementOutcome:
    """Result of one placement run.

    ``trace`` lists placements in execution order. ``failed_at`` names the
    first (application id, instance index) that could not be placed; the
    allocation then holds everything placed up to that point.
    ``pairs_examined`` counts (candidate machine, instance) feasibility
    probes, the work unit of these algorithms.
    """

    allocation: AllocationMatrix
    feasible: bool
    failed_at: Optional[tuple[int, int]]
    trace: tuple[PlacementEvent, ...]
    pairs_examined: int


@dataclass
class PapPriorityState:
    """Per-machine priority parameters for the power-aware strategy.

    omega starts at 0 for every machine. After a placement on machine j:
    below the utilization threshold omega tracks the machine's utilization;
    at or above it omega jumps to 1; from 1 on it doubles on every further
    placement. omega never decreases.
    """

    omega: list[float]
    thresholds: list[float]

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> "PapPriorityState":
        m = scenario.num_machines
        return cls(
            omega=[0.0] * m,
            thresholds=[scenario.effective_pi_threshold(j) for j in range(m)],
        )

    def after_placement(self, j: int, pi: float) -> None:
        w = self.omega[j]
        if w < self.thresholds[j]:
            self.omega[j] = pi
        elif w < 1.0:
            self.omega[j] = 1.0
        else:
            self.omega[j] = 2.0 * w


def sort_applications(applications: Sequence[Application]) -> list[Application]:
    """Applications in decreasing demand order (cpu, io, nw, mem), id tiebreak."""
    return sorted(
        applications,
        key=lambda a: (-a.demand.cpu, -a.demand.io, -a.demand.nw, -a.demand.mem, a.id),
    )


class _RunState:
    """Mutable bookkeeping for one placement run."""

    __slots__ = (
        "scenario", "m", "n", "remaining", "caps", "cpu_cap", "used_cpu",
        "pi", "counts", "trace", "pairs", "anti", "demands",
    )

    def __init__(self, scenario: Scenario):
        machines = scenario.machines
        self.scenario = scenario
        self.m = len(machines)
        self.n = len(scenario.applications)
        self.caps = [mach.capacity.as_tuple() for mach in machines]
        self.remaining = [list(cap) for cap in self.caps]
        self.cpu_cap = [mach.capacity.cpu for mach in machines]
        self.used_cpu = [0.0] * self.m
        self.pi = [0.0] * self.m
        self.counts = np.zeros((self.n, self.m), dtype=np.int64)
        self.trace: list[PlacementEvent] = []
        self.pairs = 0
        self.anti = scenario.anti_affinity.tolist()
        self.demands = [app.demand.as_tuple() for app in scenario.applications]

    def admissible(self, i: int, d: tuple, j: int) -> bool:
        """Not forbidden and fits; counts one examined pair."""
        self.pairs += 1
        if self.anti[i][j]:
            return False
        r = self.remaining[j]
        return d[0] <= r[0] and d[1] <= r[1] and d[2] <= r[2] and d[3] <= r[3]

    def pi_after(self, i: int, j: int) -> float:
        pi = (self.used_cpu[j] + self.demands[i][0]) / self.cpu_cap[j]
        return 1.0 if 1.0 < pi <= 1.0 + CAPACITY_SLACK else pi

    def place(self, i: int, k: int, j: int) -> None:
        d = self.demands[i]
        r = self.remaining[j]
        for c in range(4):
            nr = r[c] - d[c]
            if nr < 0 and nr >= -CAPACITY_SLACK * max(self.caps[j][c], 1.0):
                nr = 0.0
            r[c] = nr
        self.used_cpu[j] += d[0]
        pi = self.used_cpu[j] / self.cpu_cap[j]
        self.pi[j] = 1.0 if 1.0 < pi <= 1.0 + CAPACITY_SLACK else pi
        self.counts[i, j] += 1
        self.trace.append((i, k, j))

    def outcome(self, feasible: bool, failed_at: Optional[tuple[int, int]]) -> PlacementOutcome:
        return PlacementOutcome(
            allocation=AllocationMatrix(self.counts),
            feasible=feasible,
            failed_at=failed_at,
            trace=tuple(self.trace),
            pairs_examined=self.pairs,
        )


def _require_final(scenario: Scenario, affinity: AffinityMatrix) -> None:
    if affinity.kind != FINAL:
        raise ModelError("placement expects the final affinity matrix")
    shape = (scenario.num_applications, scenario.num_machines)
    if affinity.shape != shape:
        raise ModelError(f"affinity shape {affinity.shape} does not match scenario {shape}")


def pap_place(scenario: Scenario, affinity: AffinityMatrix) -> PlacementOutcome:
    """Power-aware placement: first admissible machine in priority order."""
    _require_final(scenario, affinity)
    run = _RunState(scenario)
    state = PapPriorityState.for_scenario(scenario)
    for app in sort_applications(scenario.applications):
        i = app.id
        d = run.demands[i]
        for k in range(app.instances):
            order = sorted(range(run.m), key=lambda j: (state.omega[j], j))
            chosen = -1
            for j in order:
                if run.admissible(i, d, j):
                    chosen = j
                    break
            if chosen < 0:
                return run.outcome(feasible=False, failed_at=(i, k))
            run.place(i, k, chosen)
            state.after_placement(chosen, run.pi[chosen])
    return run.outcome(feasible=True, failed_at=None)


def aap_place(scenario: Scenario, affinity: AffinityMatrix) -> PlacementOutcome:
    """Affinity-aware placement: admissible machine with the highest affinity.

    Ties go to the lower current utilization, then the lower machine id.
    """
    _require_final(scenario, affinity)
    run = _RunState(scenario)
    f = affinity.values.tolist()
    for app in sort_applications(scenario.applications):
        i = app.id
        d = run.demands[i]
        fi = f[i]
        for k in range(app.instances):
            best = -1
            best_key = None
            for j in range(run.m):
                if run.admissible(i, d, j):
                    key = (-fi[j], run.pi[j], j)
                    if best < 0 or key < best_key:
                        best, best_key = j, key
            if best < 0:
                return run.outcome(feasible=False, failed_at=(i, k))
            run.place(i, k, best)
    return run.outcome(feasible=True, failed_at=None)


def cpaap_place(scenario: Scenario, affinity: AffinityMatrix) -> PlacementOutcome:
    """Combined placement: cheaper of the two candidate machines per step.

    Candidate one is the admissible machine with the lowest utilization
    (id tiebreak); candidate two has the highest affinity (utilization,
    then id tiebreak). The objective delta of placing on each decides,
    with candidate one winning ties. The candidates may coincide.
    """
    _require_final(scenario, affinity)
    run = _RunState(scenario)
    f = affinity.values.tolist()
    machines = scenario.machines
    alpha = scenario.alpha
    for app in sort_applications(scenario.applications):
        i = app.id
        d = run.demands[i]
        fi = f[i]
        for k in range(app.instances):
            j1 = j2 = -1
            key1 = key2 = None
            for j in range(run.m):
                if run.admissible(i, d, j):
                    k1 = (run.pi[j], j)
                    if j1 < 0 or k1 < key1:
                        j1, key1 = j, k1
                    k2 = (-fi[j], run.pi[j], j)
                    if j2 < 0 or k2 < key2:
                        j2, key2 = j, k2
            if j1 < 0:
                return run.outcome(feasible=False, failed_at=(i, k))
            if j1 == j2:
                chosen = j1
            else:
                cost1 = delta_cost(machines[j1], run.pi[j1], run.pi_after(i, j1), fi[j1], alpha)
                cost2 = delta_cost(machines[j2], run.pi[j2], run.pi_after(i, j2), fi[j2], alpha)
                chosen = j1 if cost1 <= cost2 else j2
            run.place(i, k, chosen)
    return run.outcome(feasible=True, failed_at=None)


def first_fit_place(scenario: Scenario) -> PlacementOutcome:
    """Baseline: lowest-id admissible machine for every instance."""
    run = _RunState(scenario)
    for app in sort_applications(scenario.applications):
        i = app.id
        d = run.demands[i]
        for k in range(app.instances):
            chosen = -1
            for j in range(run.m):
                if run.admissible(i, d, j):
                    chosen = j
                    break
            if chosen < 0:
                return run.outcome(feasible=False, failed_at=(i, k))
            run.place(i, k, chosen)
    return run.outcome(feasible=True, failed_at=None)
