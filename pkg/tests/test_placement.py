import numpy as np
import pytest

from powerplace import (
    ModelError,
    aap_place,
    cpaap_place,
    first_fit_place,
    pap_place,
    sort_applications,
    validate_allocation,
)
from powerplace.affinity import build_final_affinity
from powerplace.placement import PapPriorityState
from powerplace.workload import GeneratorConfig, generate_synthetic

from support import (
    app,
    check_trace_shape,
    final_matrix,
    machine,
    replay_aap,
    replay_cpaap,
    replay_pap,
    scenario,
)

ALGOS = {
    "pap": lambda scn, f: pap_place(scn, f),
    "aap": lambda scn, f: aap_place(scn, f),
    "cpaap": lambda scn, f: cpaap_place(scn, f),
    "first_fit": lambda scn, f: first_fit_place(scn),
}


class TestSortApplications:
    def test_decreasing_cpu(self):
        apps = [app(0, cpu=2), app(1, cpu=4)]
        assert [a.id for a in sort_applications(apps)] == [1, 0]

    def test_lexicographic_second_key(self):
        apps = [app(0, cpu=4, io=10), app(1, cpu=4, io=20)]
        assert [a.id for a in sort_applications(apps)] == [1, 0]

    def test_identical_demands_keep_id_order(self):
        apps = [app(0, cpu=4, io=7, nw=3, mem=2), app(1, cpu=4, io=7, nw=3, mem=2)]
        assert [a.id for a in sort_applications(apps)] == [0, 1]


class TestPap:
    def test_balances_two_identical_machines(self):
        scn = scenario([machine(0, cpu=10), machine(1, cpu=10)], [app(0, cpu=5, instances=2)])
        out = pap_place(scn, build_final_affinity(scn))
        assert out.feasible
        assert out.allocation.counts.tolist() == [[1, 1]]
        assert out.trace == ((0, 0, 0), (0, 1, 1))

    def test_anti_affinity_blocks_only_machine(self):
        scn = scenario([machine(0)], [app(0)], anti=[[1]])
        out = pap_place(scn, build_final_affinity(scn))
        assert not out.feasible
        assert out.failed_at == (0, 0)
        assert out.allocation.total_placed() == 0

    def test_capacity_exhaustion_mid_application(self):
        scn = scenario([machine(0, cpu=10)], [app(0, cpu=5, instances=3)])
        out = pap_place(scn, build_final_affinity(scn))
        assert not out.feasible
        assert out.failed_at == (0, 2)
        assert out.allocation.counts.tolist() == [[2]]
        assert len(out.trace) == 2

    def test_priority_update_rule(self):
        state = PapPriorityState(omega=[0.0], thresholds=[0.5])
        state.after_placement(0, 0.3)
        assert state.omega[0] == 0.3
        state.after_placement(0, 0.6)   # 0.3 < threshold: tracks utilization
        assert state.omega[0] == 0.6
        state.after_placement(0, 0.9)   # at/above threshold, below 1: jumps to 1
        assert state.omega[0] == 1.0
        state.after_placement(0, 0.95)  # from 1 on: doubles
        assert state.omega[0] == 2.0
        state.after_placement(0, 1.0)
        assert state.omega[0] == 4.0

    def test_per_machine_threshold_override(self):
        # machine 0's tiny threshold kicks its priority to 1 after the
        # second visit, so machine 1 absorbs the rest; with the shared
        # default threshold the same workload alternates evenly
        apps = [app(0, cpu=5, instances=6)]
        overridden = scenario(
            [machine(0, cpu=100, pi_threshold=0.01), machine(1, cpu=100)], apps
        )
        out = pap_place(overridden, build_final_affinity(overridden))
        assert out.allocation.counts.tolist() == [[2, 4]]
        plain = scenario([machine(0, cpu=100), machine(1, cpu=100)], apps)
        out = pap_place(plain, build_final_affinity(plain))
        assert out.allocation.counts.tolist() == [[3, 3]]

    def test_replayed_choices_and_omega_monotone(self):
        for seed in range(12):
            scn = generate_synthetic(GeneratorConfig(8, 7, seed=seed, anti_affinity_fraction=0.3))
            f = build_final_affinity(scn)
            out = pap_place(scn, f)
            if out.feasible:
                replay_pap(scn, f, out)
                check_trace_shape(scn, out)


class TestAap:
    def test_argmax_selection(self):
        scn = scenario([machine(j) for j in range(3)], [app(0)])
        out = aap_place(scn, final_matrix([[0.2, 0.9, 0.5]]))
        assert out.allocation.counts.tolist() == [[0, 1, 0]]

    def test_tie_breaks_by_lower_utilization(self):
        scn = scenario(
            [machine(0, cpu=10), machine(1, cpu=10)],
            [app(0, cpu=5), app(1, cpu=2)],
            anti=[[0, 1], [0, 0]],
        )
        # app 0 (larger) forced to machine 0 first; app 1 sees equal
        # affinity and goes to the emptier machine 1
        out = aap_place(scn, final_matrix([[0.5, 0.5], [0.5, 0.5]]))
        assert out.allocation.counts.tolist() == [[1, 0], [0, 1]]

    def test_feasibility_filter_precedes_argmax(self):
        scn = scenario(
            [machine(0, cpu=4), machine(1, cpu=10)],
            [app(0, cpu=5)],
        )
        out = aap_place(scn, final_matrix([[0.9, 0.1]]))
        assert out.allocation.counts.tolist() == [[0, 1]]

    def test_replayed_per_step_optimality(self):
        for seed in range(12):
            scn = generate_synthetic(GeneratorConfig(8, 7, seed=seed, anti_affinity_fraction=0.3))
            f = build_final_affinity(scn)
            out = aap_place(scn, f)
            if out.feasible:
                replay_aap(scn, f, out)
                check_trace_shape(scn, out)


class TestCpaap:
    def worked_example(self, alpha):
        # filler app is anti-affined to machine 1, pinning pi = 0.5 onto
        # machine 0 before the probe app places
        scn = scenario(
            [machine(0, cpu=10), machine(1, cpu=10)],
            [app(0, cpu=5), app(1, cpu=5)],
            anti=[[0, 1], [0, 0]],
            alpha=alpha,
        )
        f = final_matrix([[0.0, 0.0], [0.9, 0.1]])
        return scn, f

    def test_power_term_wins_at_low_alpha(self):
        scn, f = self.worked_example(alpha=4.0)
        out = cpaap_place(scn, f)
        assert out.allocation.counts.tolist() == [[1, 0], [0, 1]]

    def test_affinity_term_wins_at_high_alpha(self):
        scn, f = self.worked_example(alpha=1000.0)
        out = cpaap_place(scn, f)
        assert out.allocation.counts.tolist() == [[1, 0], [1, 0]]

    def test_alpha_zero_balances_identical_machines(self):
        scn = scenario(
            [machine(0, cpu=10), machine(1, cpu=10)],
            [app(0, cpu=2, instances=4)],
            alpha=0.0,
        )
        out = cpaap_place(scn, final_matrix([[0.1, 0.9]]))
        assert out.allocation.counts.tolist() == [[2, 2]]

    def test_single_feasible_machine_degenerate(self):
        scn = scenario([machine(0), machine(1)], [app(0)], anti=[[0, 1]])
        out = cpaap_place(scn, final_matrix([[0.0, 1.0]]))
        assert out.feasible
        assert out.allocation.counts.tolist() == [[1, 0]]

    def test_replayed_step_dominance(self):
        for seed in range(12):
            scn = generate_synthetic(GeneratorConfig(8, 7, seed=seed, anti_affinity_fraction=0.3))
            f = build_final_affinity(scn)
            out = cpaap_place(scn, f)
            if out.feasible:
                replay_cpaap(scn, f, out)
                check_trace_shape(scn, out)


class TestFirstFit:
    def test_everything_on_machine_zero_until_full(self):
        scn = scenario([machine(0, cpu=10), machine(1, cpu=10)], [app(0, cpu=4, instances=3)])
        out = first_fit_place(scn)
        assert out.allocation.counts.tolist() == [[2, 1]]

    def test_anti_affine_machine_skipped(self):
        scn = scenario([machine(0), machine(1)], [app(0)], anti=[[1, 0]])
        out = first_fit_place(scn)
        assert out.allocation.counts.tolist() == [[0, 1]]

    def test_no_feasible_machine(self):
        scn = scenario([machine(0, cpu=2)], [app(0, cpu=5)])
        out = first_fit_place(scn)
        assert not out.feasible
        assert out.failed_at == (0, 0)


class TestSharedContracts:
    def test_requires_final_affinity(self):
        scn = scenario([machine(0)], [app(0)])
        from powerplace.affinity import system_affinity_matrix
        s = system_affinity_matrix(scn)
        for place in (pap_place, aap_place, cpaap_place):
            with pytest.raises(ModelError):
                place(scn, s)

    def test_determinism(self):
        scn = generate_synthetic(GeneratorConfig(12, 10, seed=42, anti_affinity_fraction=0.2))
        f = build_final_affinity(scn)
        for name, place in ALGOS.items():
            a = place(scn, f)
            b = place(scn, f)
            assert a.trace == b.trace, name
            assert np.array_equal(a.allocation.counts, b.allocation.counts)
            assert a.pairs_examined == b.pairs_examined

    def test_successful_outcomes_pass_validation(self):
        for seed in range(15):
            scn = generate_synthetic(
                GeneratorConfig(9, 8, seed=seed, anti_affinity_fraction=(seed % 3) * 0.2)
            )
            f = build_final_affinity(scn)
            for name, place in ALGOS.items():
                out = place(scn, f)
                if out.feasible:
                    assert validate_allocation(scn, out.allocation).feasible_complete, (name, seed)

    def test_work_bound(self):
        for seed in range(5):
            scn = generate_synthetic(GeneratorConfig(10, 8, seed=seed))
            f = build_final_affinity(scn)
            bound = 4 * scn.total_instances * scn.num_machines
            for name, place in ALGOS.items():
                out = place(scn, f)
                assert out.pairs_examined <= bound, name

    def test_scenario_not_mutated(self):
        scn = generate_synthetic(GeneratorConfig(6, 5, seed=1))
        f = build_final_affinity(scn)
        before = scn.anti_affinity.copy()
        pap_place(scn, f)
        cpaap_place(scn, f)
        assert np.array_equal(scn.anti_affinity, before)
