"""Domain model: machines, applications, scenarios, allocations, and the
constraint checks every placement must satisfy.

All quantities are nonnegative reals; integer inputs stay exact. A machine
hosts instances of applications subject to three constraints: forbidden
(app, machine) pairs stay empty, every requested instance is placed, and
per-machine resource capacities are never exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# Relative slack for capacity arithmetic. Sums of float demands computed as
# products (count * demand) and as chains of subtractions can disagree by a
# few ulps; anything within this band counts as "fits exactly".
CAPACITY_SLACK = 1e-9

RESOURCE_NAMES = ("cpu", "io", "nw", "mem")


class ModelError(ValueError):
    """Malformed model input: bad dimensions, negative quantities, id gaps."""


@dataclass(frozen=True)
class ResourceVector:
    """Quantities of the four modeled resources.

    Serves both as a machine capacity and as a per-instance application
    demand. Components: cpu (cores), io (I/O bandwidth), nw (network
    bandwidth), mem (memory).
    """

    cpu: float
    io: float
    nw: float
    mem: float

    def __post_init__(self) -> None:
        for name in RESOURCE_NAMES:
            if getattr(self, name) < 0:
                raise ModelError(f"resource component {name!r} must be >= 0")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cpu, self.io, self.nw, self.mem)


@dataclass(frozen=True)
class AffinityWeights:
    """Convex weights for cpu, io, nw and mem headroom in resource affinity.

    The four weights must sum to 1 (checked to 1e-9; user-supplied decimal
    weights rarely sum exactly in binary floating point).
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float

    def __post_init__(self) -> None:
        for b in self.as_tuple():
            if b < 0:
                raise ModelError("affinity weights must be >= 0")
        total = self.beta1 + self.beta2 + self.beta3 + self.beta4
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"affinity weights must sum to 1, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.beta1, self.beta2, self.beta3, self.beta4)


@dataclass(frozen=True)
class Machine:
    """A machine node: resource capacity plus idle and maximum power draw.

    ``pi_threshold``, when set, overrides the scenario-wide utilization
    split point used by the power-aware heuristic's priority updates.
    """

    id: int
    capacity: ResourceVector
    p_idle: float
    p_max: float
    pi_threshold: Optional[float] = None

    def __post_init__(self) -> None:
        if self.p_idle < 0 or self.p_max < self.p_idle:
            raise ModelError(f"machine {self.id}: need 0 <= p_idle <= p_max")
        if self.capacity.cpu <= 0:
            raise ModelError(f"machine {self.id}: cpu capacity must be > 0")
        if self.pi_threshold is not None and not (0.0 < self.pi_threshold <= 1.0):
            raise ModelError(f"machine {self.id}: pi_threshold must be in (0, 1]")


@dataclass(frozen=True)
class Application:
    """An application request: per-instance demand and an instance count.

    Zero-CPU demands are rejected: an instance that consumes no CPU would
    never change machine utilization, which degenerates the priority logic
    of the placement heuristics.
    """

    id: int
    demand: ResourceVector
    instances: int

    def __post_init__(self) -> None:
        if self.instances < 1:
            raise ModelError(f"application {self.id}: instances must be >= 1")
        if self.demand.cpu <= 0:
            raise ModelError(f"application {self.id}: cpu demand must be > 0")


@dataclass(frozen=True)
class Scenario:
    """A complete placement problem instance.

    Holds the machine fleet, the application requests, the binary user
    affinity and anti-affinity matrices (N applications x M machines), the
    resource-affinity weights, the affinity cost coefficient alpha, and the
    utilization threshold used by the power-aware heuristic.

    A cell may not be both user-affine and anti-affine: both matrices are
    user-supplied and must not contradict each other.
    """

    machines: tuple[Machine, ...]
    applications: tuple[Application, ...]
    user_affinity: np.ndarray
    anti_affinity: np.ndarray
    weights: AffinityWeights
    alpha: float
    pi_threshold: float = 0.5

    def __post_init__(self) -> None:
        machines = tuple(self.machines)
        applications = tuple(self.applications)
        if not machines or not applications:
            raise ModelError("need at least one machine and one application")
        for j, m in enumerate(machines):
            if m.id != j:
                raise ModelError(f"machine ids must be 0..M-1 in order, got {m.id} at {j}")
        for i, a in enumerate(applications):
            if a.id != i:
                raise ModelError(f"application ids must be 0..N-1 in order, got {a.id} at {i}")
        shape = (len(applications), len(machines))
        user = np.array(self.user_affinity, dtype=np.int64)
        anti = np.array(self.anti_affinity, dtype=np.int64)
        if user.shape != shape or anti.shape != shape:
            raise ModelError(f"affinity matrices must have shape {shape}")
        for name, mat in (("user_affinity", user), ("anti_affinity", anti)):
            if not np.isin(mat, (0, 1)).all():
                raise ModelError(f"{name} must be binary")
        clash = np.argwhere((user == 1) & (anti == 1))
        if clash.size:
            i, j = (int(v) for v in clash[0])
            raise ModelError(
                f"user affinity and anti-affinity both set for app {i}, machine {j}"
            )
        if self.alpha < 0:
            raise ModelError("alpha must be >= 0")
        if not (0.0 < self.pi_threshold <= 1.0):
            raise ModelError("pi_threshold must be in (0, 1]")
        user.setflags(write=False)
        anti.setflags(write=False)
        object.__setattr__(self, "machines", machines)
        object.__setattr__(self, "applications", applications)
        object.__setattr__(self, "user_affinity", user)
        object.__setattr__(self, "anti_affinity", anti)

    @property
    def num_machines(self) -> int:
        return len(self.machines)

    @property
    def num_applications(self) -> int:
        return len(self.applications)

    @property
    def total_instances(self) -> int:
        return sum(a.instances for a in self.applications)

    def effective_pi_threshold(self, j: int) -> float:
        override = self.machines[j].pi_threshold
        return self.pi_threshold if override is None else override


@dataclass
class AllocationMatrix:
    """Instance counts per (application, machine) cell.

    The one mutable structure in the model; placement algorithms own their
    copy for the duration of a run.
    """

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ModelError("allocation counts must be a 2-D matrix")
        if not np.issubdtype(counts.dtype, np.integer):
            raise ModelError("allocation counts must be integers")
        if (counts < 0).any():
            raise ModelError("allocation counts must be >= 0")
        self.counts = counts.astype(np.int64, copy=False)

    @classmethod
    def zeros(cls, num_applications: int, num_machines: int) -> "AllocationMatrix":
        return cls(np.zeros((num_applications, num_machines), dtype=np.int64))

    def copy(self) -> "AllocationMatrix":
        return AllocationMatrix(self.counts.copy())

    def total_placed(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ConstraintResult:
    """Outcome of a single constraint check with a diagnosable witness.

    Witness conventions: anti-affinity and user/anti consistency use
    (application, machine); completeness uses (application, -1); capacity
    uses (-1, machine). ``detail`` carries a human-readable account.
    """

    ok: bool
    witness: Optional[tuple[int, int]] = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail per placement constraint, with first-violation witnesses."""

    anti_affinity: ConstraintResult
    completeness: ConstraintResult
    capacity: ConstraintResult

    @property
    def feasible_complete(self) -> bool:
        return self.anti_affinity.ok and self.completeness.ok and self.capacity.ok


def fits(demand: ResourceVector, remaining: ResourceVector) -> bool:
    """True iff the demand fits in the remaining capacity in all components."""
    return (
        demand.cpu <= remaining.cpu
        and demand.io <= remaining.io
        and demand.nw <= remaining.nw
        and demand.mem <= remaining.mem
    )


def remaining_capacity(
    machine: Machine,
    allocation: AllocationMatrix,
    applications: Sequence[Application],
) -> ResourceVector:
    """Capacity of ``machine`` left over after the allocated instances.

    Only meaningful for allocations that respect the machine's capacity;
    negative float residue within CAPACITY_SLACK of zero is clamped to 0.
    """
    counts = allocation.counts
    if counts.shape[0] != len(applications):
        raise ModelError(
            f"allocation has {counts.shape[0]} application rows, "
            f"got {len(applications)} applications"
        )
    if not (0 <= machine.id < counts.shape[1]):
        raise ModelError(f"machine id {machine.id} out of range for allocation")
    cap = machine.capacity.as_tuple()
    used = [0.0, 0.0, 0.0, 0.0]
    for app in applications:
        b = int(counts[app.id, machine.id])
        if b:
            d = app.demand.as_tuple()
            for c in range(4):
                used[c] += b * d[c]
    left = []
    for c in range(4):
        r = cap[c] - used[c]
        if r < 0 and r >= -CAPACITY_SLACK * max(cap[c], 1.0):
            r = 0.0
        left.append(r)
    return ResourceVector(*left)


def validate_allocation(scenario: Scenario, allocation: AllocationMatrix) -> ValidationReport:
    """Check an allocation against the three placement constraints.

    Violations are reported, not raised; only a dimension mismatch is a
    structural error. Capacity sums tolerate CAPACITY_SLACK relative float
    jitter so that repeated-subtraction and product-form accounting agree.
    """
    counts = allocation.counts
    n, m = scenario.num_applications, scenario.num_machines
    if counts.shape != (n, m):
        raise ModelError(f"allocation shape {counts.shape} does not match scenario ({n}, {m})")

    hits = np.argwhere((scenario.anti_affinity == 1) & (counts > 0))
    if hits.size:
        i, j = (int(v) for v in hits[0])
        anti = ConstraintResult(False, (i, j), f"app {i} has {int(counts[i, j])} instance(s) on forbidden machine {j}")
    else:
        anti = ConstraintResult(True)

    placed = counts.sum(axis=1)
    wanted = np.array([a.instances for a in scenario.applications], dtype=np.int64)
    short = np.nonzero(placed != wanted)[0]
    if short.size:
        i = int(short[0])
        completeness = ConstraintResult(
            False, (i, -1), f"app {i} placed {int(placed[i])} of {int(wanted[i])} instances"
        )
    else:
        completeness = ConstraintResult(True)

    caps = np.array([mach.capacity.as_tuple() for mach in scenario.machines])
    reqs = np.array([app.demand.as_tuple() for app in scenario.applications])
    usage = counts.T.astype(float) @ reqs  # (M, 4)
    limit = caps * (1.0 + CAPACITY_SLACK) + 1e-12
    over = np.argwhere(usage > limit)
    if over.size:
        j, c = (int(v) for v in over[0])
        capacity = ConstraintResult(
            False,
            (-1, j),
            f"machine {j} over {RESOURCE_NAMES[c]}: used {usage[j, c]!r} > cap {caps[j, c]!r}",
        )
    else:
        capacity = ConstraintResult(True)

    return ValidationReport(anti_affinity=anti, completeness=completeness, capacity=capacity)
