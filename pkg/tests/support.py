"""Shared test helpers: scenario builders and independent re-checkers.

The replay validators re-simulate a placement trace with their own
bookkeeping and verify the per-step selection rule of each algorithm, so
they stay independent of the implementation they check. The brute-force
optimum enumerates labeled instances (not count vectors) and computes the
objective with plain Python arithmetic.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from powerplace import (
    AffinityWeights,
    Application,
    Machine,
    ResourceVector,
    Scenario,
)
from powerplace.affinity import FINAL, AffinityMatrix

WEIGHTS = AffinityWeights(0.4, 0.2, 0.2, 0.2)


def machine(j, cpu=10.0, io=100.0, nw=100.0, mem=16.0, p_idle=100.0, p_max=200.0, pi_threshold=None):
    return Machine(j, ResourceVector(cpu, io, nw, mem), p_idle, p_max, pi_threshold)


def app(i, cpu=5.0, io=0.0, nw=0.0, mem=0.0, instances=1):
    return Application(i, ResourceVector(cpu, io, nw, mem), instances)


def scenario(machines, applications, user=None, anti=None, weights=WEIGHTS,
             alpha=4.0, pi_threshold=0.5):
    n, m = len(applications), len(machines)
    if user is None:
        user = np.zeros((n, m), dtype=int)
    if anti is None:
        anti = np.zeros((n, m), dtype=int)
    return Scenario(
        machines=tuple(machines),
        applications=tuple(applications),
        user_affinity=np.asarray(user),
        anti_affinity=np.asarray(anti),
        weights=weights,
        alpha=alpha,
        pi_threshold=pi_threshold,
    )


def final_matrix(values) -> AffinityMatrix:
    return AffinityMatrix(values=np.asarray(values, dtype=float), kind=FINAL)


class Replay:
    """Step-by-step re-simulation of a trace with independent bookkeeping."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.m = scn.num_machines
        self.caps = [mach.capacity.as_tuple() for mach in scn.machines]
        self.used = [[0.0] * 4 for _ in range(self.m)]
        self.counts = np.zeros((scn.num_applications, self.m), dtype=int)

    def pi(self, j):
        return self.used[j][0] / self.caps[j][0]

    def admissible(self, i, j, slack=1e-9):
        if self.scn.anti_affinity[i, j]:
            return False
        d = self.scn.applications[i].demand.as_tuple()
        return all(
            self.used[j][c] + d[c] <= self.caps[j][c] * (1 + slack) + 1e-12
            for c in range(4)
        )

    def apply(self, i, j):
        d = self.scn.applications[i].demand.as_tuple()
        for c in range(4):
            self.used[j][c] += d[c]
        self.counts[i, j] += 1


def check_trace_shape(scn, outcome):
    """Trace/allocation agreement plus per-app contiguous instance indexing."""
    counts = np.zeros_like(outcome.allocation.counts)
    seen = {}
    for i, k, j in outcome.trace:
        assert k == seen.get(i, 0), "instance indices must be contiguous per app"
        seen[i] = k + 1
        counts[i, j] += 1
    assert (counts == outcome.allocation.counts).all()
    if outcome.feasible:
        assert len(outcome.trace) == scn.total_instances


def replay_pap(scn, affinity, outcome):
    """Each step must pick the first admissible machine in (omega, id) order."""
    rep = Replay(scn)
    omega = [0.0] * rep.m
    for i, k, j in outcome.trace:
        for cand in sorted(range(rep.m), key=lambda c: (omega[c], c)):
            if rep.admissible(i, cand):
                assert cand == j, f"pap picked {j}, scan order says {cand}"
                break
        else:
            raise AssertionError("trace places an instance no machine could take")
        rep.apply(i, j)
        pi = rep.pi(j)
        threshold = scn.effective_pi_threshold(j)
        prev = omega[j]
        if prev < threshold:
            omega[j] = pi
        elif prev < 1.0:
            omega[j] = 1.0
        else:
            omega[j] = 2.0 * prev
        assert omega[j] >= prev, "omega must never decrease"


def replay_aap(scn, affinity, outcome):
    """No admissible machine may beat the chosen one on affinity."""
    f = affinity.values
    rep = Replay(scn)
    for i, k, j in outcome.trace:
        assert rep.admissible(i, j)
        for cand in range(rep.m):
            if cand != j and rep.admissible(i, cand):
                assert f[i, cand] <= f[i, j] + 1e-12, (
                    f"aap chose f={f[i, j]} over admissible f={f[i, cand]}"
                )
        rep.apply(i, j)


def replay_cpaap(scn, affinity, outcome):
    """The chosen machine's cost delta must not exceed the alternative's."""
    from powerplace import delta_cost

    f = affinity.values
    rep = Replay(scn)
    for i, k, j in outcome.trace:
        cands = [c for c in range(rep.m) if rep.admissible(i, c)]
        assert j in cands
        j1 = min(cands, key=lambda c: (rep.pi(c), c))
        j2 = min(cands, key=lambda c: (-f[i, c], rep.pi(c), c))
        cpu = scn.applications[i].demand.cpu

        def step_cost(c):
            old = rep.pi(c)
            new = min((rep.used[c][0] + cpu) / rep.caps[c][0], 1.0)
            return delta_cost(scn.machines[c], old, new, float(f[i, c]), scn.alpha)

        assert j in (j1, j2), f"cpaap chose {j}, candidates were {j1}, {j2}"
        chosen_cost = step_cost(j)
        other = j2 if j == j1 else j1
        assert chosen_cost <= step_cost(other) + 1e-9
        rep.apply(i, j)


def brute_force_reduced_cost(scn, affinity, counts) -> float:
    """Objective from scratch in plain Python (math.fsum, no numpy)."""
    f = affinity.values
    dynamic = []
    for j, mach in enumerate(scn.machines):
        used = math.fsum(
            scn.applications[i].demand.cpu * int(counts[i][j])
            for i in range(scn.num_applications)
        )
        pi = min(used / mach.capacity.cpu, 1.0)
        dynamic.append((mach.p_max - mach.p_idle) * pi**3)
    payoff = math.fsum(
        float(f[i, j]) * int(counts[i][j])
        for i in range(scn.num_applications)
        for j in range(scn.num_machines)
    )
    return math.fsum(dynamic) - scn.alpha * payoff


def brute_force_optimal(scn, affinity):
    """Labeled-instance enumeration: every machine tuple per instance.

    Returns (best_counts, best_cost) or (None, None) when nothing feasible.
    Exponential; keep instances few.
    """
    labels = [i for i, a in enumerate(scn.applications) for _ in range(a.instances)]
    m = scn.num_machines
    best_counts, best_cost = None, None
    for assignment in itertools.product(range(m), repeat=len(labels)):
        counts = [[0] * m for _ in range(scn.num_applications)]
        for inst, j in zip(labels, assignment):
            counts[inst][j] += 1
        ok = True
        for i in range(scn.num_applications):
            for j in range(m):
                if counts[i][j] and scn.anti_affinity[i, j]:
                    ok = False
        if not ok:
            continue
        for j, mach in enumerate(scn.machines):
            cap = mach.capacity.as_tuple()
            for c in range(4):
                used = math.fsum(
                    scn.applications[i].demand.as_tuple()[c] * counts[i][j]
                    for i in range(scn.num_applications)
                )
                if used > cap[c] * (1 + 1e-9) + 1e-12:
                    ok = False
        if not ok:
            continue
        cost = brute_force_reduced_cost(scn, affinity, counts)
        key = (cost, tuple(v for row in counts for v in row))
        if best_cost is None or key < (best_cost, tuple(v for row in best_counts for v in row)):
            best_counts, best_cost = counts, cost
    return best_counts, best_cost
