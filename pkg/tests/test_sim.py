"""Trajectory engine, measurement, and generator tests.

Expected timelines for the toy runs were derived by hand from the stage
semantics: branch exits at generation + scheduled delay, first replicate wins
at the eliminator, in-order release (with flush-before on timeout) at the
re-sequencer, and token-bucket release at the regulators.
"""

import random
from fractions import Fraction

import pytest

from redcalc.minplus import ConcaveCurve
from redcalc.sim import (
    DROP,
    PEF_EXIT,
    POF_EXIT,
    REG_EXIT,
    PathSpec,
    Pipeline,
    PofSpec,
    RegSpec,
    Scenario,
    ScenarioError,
    SourceUnit,
    check_compliance,
    gen_adversarial_ir,
    gen_tightness_trajectory,
    is_fifo_per_flow,
    load_scenario,
    measure_reordering,
    run_scenario,
    toy_scenario,
)
from redcalc.sim.engine import scenario_to_json
from redcalc.topology import DelayInterval

from oracles import compliance_violations

F = Fraction
TOY_PEF_OUT = ConcaveCurve([(2, 4), (1, 8)])


def one_flow(units, paths, pipeline, **kw):
    return Scenario("t", units, paths, pipeline, **kw)


def unit_delays(trace):
    return {int(u): d for (_f, u), d in trace.delays().items()}


class TestEngineValidation:
    def test_delay_outside_declared_bounds(self):
        sc = one_flow(
            [SourceUnit("f", "1", 0, 1)],
            [PathSpec("p", DelayInterval(0, 1), {("f", "1"): F(2)})],
            Pipeline(),
        )
        with pytest.raises(ScenarioError, match="outside declared bounds"):
            run_scenario(sc)

    def test_path_fifo_violation(self):
        sc = one_flow(
            [SourceUnit("f", "1", 0, 1), SourceUnit("f", "2", 1, 1)],
            [PathSpec("p", DelayInterval(0, 5), {("f", "1"): F(4), ("f", "2"): F(0)})],
            Pipeline(),
        )
        with pytest.raises(ScenarioError, match="FIFO"):
            run_scenario(sc)

    def test_drop_on_lossless_path(self):
        sc = one_flow(
            [SourceUnit("f", "1", 0, 1)],
            [PathSpec("p", DelayInterval(0, 1), {("f", "1"): DROP}, lossy=False)],
            Pipeline(),
        )
        with pytest.raises(ScenarioError, match="lossless"):
            run_scenario(sc)

    def test_zero_size_needs_flag(self):
        mk = lambda flag: one_flow(
            [SourceUnit("f", "1", 0, 0)],
            [PathSpec("p", DelayInterval(0, 1), {("f", "1"): F(0)})],
            Pipeline(),
            allow_zero_size=flag,
        )
        with pytest.raises(ScenarioError, match="zero size"):
            run_scenario(mk(False))
        run_scenario(mk(True))

    def test_missing_action_without_default(self):
        sc = one_flow(
            [SourceUnit("f", "1", 0, 1)],
            [PathSpec("p", DelayInterval(0, 1), {})],
            Pipeline(),
        )
        with pytest.raises(ScenarioError, match="no action"):
            run_scenario(sc)

    def test_resequencer_deadlock_without_timeout(self):
        # unit 1 lost on the only path: unit 2 can never be released
        sc = one_flow(
            [SourceUnit("f", "1", 0, 1), SourceUnit("f", "2", 1, 1)],
            [PathSpec("p", DelayInterval(0, 1), {("f", "1"): DROP, ("f", "2"): F(0)})],
            Pipeline(pof=PofSpec()),
        )
        with pytest.raises(ScenarioError, match="stuck"):
            run_scenario(sc)

    def test_unit_bigger_than_shaping_burst(self):
        sc = one_flow(
            [SourceUnit("f", "1", 0, 3)],
            [PathSpec("p", DelayInterval(0, 1), {("f", "1"): F(0)})],
            Pipeline(reg=RegSpec("per-flow", {"f": ConcaveCurve([(1, 2)])})),
        )
        with pytest.raises(ScenarioError, match="shaping burst"):
            run_scenario(sc)


class TestToyRuns:
    def test_double_rate_output(self):
        trace = run_scenario(toy_scenario("double-rate"))
        delays = unit_delays(trace)
        assert delays == {k: 7 for k in range(1, 7)} | {k: 1 for k in range(7, 15)}
        pef = [(e.time, e.size) for e in trace.of_kind(PEF_EXIT)]
        # six instants carry two units each: double the source rate
        per_instant = {}
        for t, sz in pef:
            per_instant[t] = per_instant.get(t, 0) + sz
        assert {t: v for t, v in per_instant.items() if v == 2} == {
            F(t): F(2) for t in range(8, 14)
        }
        assert check_compliance(pef, TOY_PEF_OUT) is None
        assert compliance_violations(pef, TOY_PEF_OUT) == []

    def test_rto_run_measures_four(self):
        trace = run_scenario(toy_scenario("rto"))
        delays = unit_delays(trace)
        assert delays[1] == 7 and delays[7] == 1 and delays[14] == 0
        exits = trace.times(PEF_EXIT)
        arrived = [(int(u) - 1, t, F(1)) for (_f, u), t in exits.items()]
        rto, rbo = measure_reordering(arrived)
        assert rto == 4  # unit 6 lands at 12, unit 7 landed at 8
        assert rbo == 5  # units 7..11 are already in when unit 6 lands
        assert check_compliance([(t, F(1)) for t in exits.values()], TOY_PEF_OUT) is None

    def test_resequencer_restores_order(self):
        trace = run_scenario(toy_scenario("pof"))
        out = trace.times(POF_EXIT)
        expected = {1: 8, 2: 8, 3: 9, 4: 10, 5: 11, 13: 13, 14: 14}
        expected.update({k: 12 for k in range(6, 13)})
        assert {int(u): t for (_f, u), t in out.items()} == expected
        assert is_fifo_per_flow(trace, POF_EXIT)
        assert measure_reordering(
            [(int(u), t, F(1)) for (_f, u), t in out.items()]
        ) == (0, 0)
        assert max(unit_delays(trace).values()) == 7
        assert check_compliance(
            [(t, F(1)) for t in out.values()], ConcaveCurve([(1, 8)])
        ) is None

    def test_per_flow_regulator_worst_delay(self):
        trace = run_scenario(toy_scenario("pfr"))
        out = {int(u): t for (_f, u), t in trace.times(REG_EXIT).items()}
        assert out == {
            7: 8, 8: 9, 1: 10, 9: 11, 2: 12, 10: 13, 3: 14,
            11: 15, 4: 16, 12: 17, 5: 18, 13: 19, 6: 20, 14: 21,
        }
        delays = unit_delays(trace)
        assert max(delays.values()) == 14 and delays[6] == 14
        rto, _rbo = measure_reordering(
            [(int(u) - 1, t, F(1)) for u, t in ((str(k), out[k]) for k in out)]
        )
        assert rto == 12  # unit 6 leaves 12 after unit 7 did
        assert check_compliance(
            [(t, F(1)) for t in out.values()], ConcaveCurve([(1, 1)])
        ) is None

    @pytest.mark.parametrize("timeout", [None, 6])
    def test_resequencer_before_regulator_cancels_reordering(self, timeout):
        trace = run_scenario(toy_scenario("pof-pfr", timeout=timeout))
        delays = unit_delays(trace)
        assert set(delays.values()) == {7}
        assert is_fifo_per_flow(trace, REG_EXIT)

    def test_lossy_run_with_timeout(self):
        trace = run_scenario(toy_scenario("lossy"))
        assert trace.lost_units() == [("f", "3")]
        delays = unit_delays(trace)
        assert delays == {1: 7, 2: 7} | {k: 10 for k in range(4, 15)}
        assert max(delays.values()) <= 13
        # nothing sits in the re-sequencer longer than the timeout
        pef = trace.times(PEF_EXIT)
        pof = trace.times(POF_EXIT)
        assert all(pof[k] - pef[k] <= 6 for k in pof)
        assert is_fifo_per_flow(trace, POF_EXIT)

    def test_late_replicate_after_timeout_is_forwarded_as_is(self):
        sc = one_flow(
            [SourceUnit("f", "1", 0, 1), SourceUnit("f", "2", 0, 1)],
            [
                PathSpec("fast", DelayInterval(0, 1), {("f", "1"): DROP, ("f", "2"): F(0)}),
                PathSpec("slow", DelayInterval(0, 10), {("f", "1"): F(9), ("f", "2"): DROP}),
            ],
            Pipeline(pof=PofSpec(timeout=2)),
        )
        trace = run_scenario(sc)
        out = trace.times(POF_EXIT)
        assert out[("f", "2")] == 2  # waited the full timeout for unit 1
        assert out[("f", "1")] == 9  # released on arrival, slot already passed


class TestMeasures:
    def test_reordering_basic(self):
        rto, rbo = measure_reordering([(0, 10, 1), (1, 8, 2)])
        assert (rto, rbo) == (2, 2)
        assert measure_reordering([(0, 1, 5), (1, 2, 5), (2, 2, 5)]) == (0, 0)
        assert measure_reordering([(3, 4, 2)]) == (0, 0)

    def test_reordering_byte_offset_counts_strictly_earlier(self):
        # unit 0 arrives last; units 2 and 3 are strictly earlier, unit 1 ties
        units = [(0, 5, 1), (1, 5, 7), (2, 3, 2), (3, 4, 4)]
        rto, rbo = measure_reordering(units)
        assert rto == 2 and rbo == 6

    def test_compliance_exact_envelope_passes(self):
        curve = ConcaveCurve([(2, 3)])
        events = [(0, 3), (1, 2), (2, 2), (F(5, 2), 1)]
        assert check_compliance(events, curve) is None
        assert compliance_violations(events, curve) == []

    def test_compliance_reports_first_violation(self):
        curve = ConcaveCurve([(1, 2)])
        events = [(0, 2), (3, 2), (F(7, 2), 2)]
        report = check_compliance(events, curve)
        assert report is not None
        assert (report["window_start"], report["window_end"]) == (3, F(7, 2))
        assert report["observed"] == 4 and report["allowed"] == F(5, 2)
        assert compliance_violations(events, curve)

    def test_compliance_matches_oracle_randomized(self):
        rng = random.Random(4242)
        for _ in range(150):
            curve = ConcaveCurve(
                [
                    (F(rng.randint(1, 4)), F(rng.randint(1, 6)))
                    for _ in range(rng.randint(1, 3))
                ]
            )
            events = []
            t = F(0)
            for _ in range(rng.randint(1, 12)):
                t += F(rng.randint(0, 5), 2)
                events.append((t, F(rng.randint(0, 4))))
            got = check_compliance(events, curve)
            oracle = compliance_violations(events, curve)
            assert (got is None) == (oracle == [])


class TestTightnessGenerator:
    def run_and_check(self, params):
        sc = gen_tightness_trajectory(*params)
        trace = run_scenario(sc)
        curve = sc.flows["f"].arrival
        gen = [(e.time, e.size) for e in trace.of_kind("generated")]
        assert check_compliance(gen, curve) is None
        instant = sc.meta["burst_instant"]
        landed = sum(e.size for e in trace.of_kind(PEF_EXIT) if e.time == instant)
        assert landed == sc.meta["expected_burst"]
        assert trace.lost_units() == []
        return sc, trace

    def test_toy_branches_land_the_analyzer_burst(self):
        sc, trace = self.run_and_check((1, 1, 0, 1, 6, 7))
        assert sc.meta["case"] == 1
        assert sc.meta["expected_burst"] == 4  # burst of the eliminator output curve
        pef = [(e.time, e.size) for e in trace.of_kind(PEF_EXIT)]
        assert check_compliance(pef, TOY_PEF_OUT) is None

    def test_case_two_without_bridge(self):
        sc, trace = self.run_and_check((1, 2, 1, 3, 2, 4))
        assert sc.meta["case"] == 2
        assert sc.meta["expected_burst"] == 5

    def test_case_two_with_bridge(self):
        sc, _ = self.run_and_check((1, 1, 0, 1, F(3, 2), 5))
        assert sc.meta["case"] == 2
        assert sc.meta["expected_burst"] == 6
        assert any(u.unit == "bridge" for u in sc.sources)

    def test_degenerate_constant_branches(self):
        sc, _ = self.run_and_check((1, 1, 2, 2, 2, 2))
        assert sc.meta["expected_burst"] == 1

    def test_randomized_schedules_comply_and_land(self):
        rng = random.Random(7)
        for _ in range(25):
            r = F(rng.randint(1, 4))
            b = F(rng.randint(1, 5))
            lo1, lo2 = (F(rng.randint(0, 6), 2) for _ in range(2))
            hi1 = lo1 + F(rng.randint(0, 8), 2)
            hi2 = lo2 + F(rng.randint(0, 8), 2)
            self.run_and_check((r, b, lo1, hi1, lo2, hi2))


class TestAdversarialGenerator:
    def test_small_q_rejected(self):
        with pytest.raises(ValueError, match="at least 13 flows"):
            gen_adversarial_ir(1, 1, 0, 1, 6, 7, q=12)

    def test_identical_constant_branches_rejected(self):
        with pytest.raises(ValueError, match="same constant delay"):
            gen_adversarial_ir(1, 1, 2, 2, 2, 2, q=5)

    def test_backlog_diverges_at_the_threshold(self):
        sc = gen_adversarial_ir(1, 2, 0, 0, 1, 1, q=4, periods=8)
        assert sc.meta["q_min"] == 4
        step = sc.meta["divergence_step"]
        assert step > 0
        trace = run_scenario(sc)
        delays = trace.delays()
        for k in range(8):
            assert delays[("f1", f"m1_{k}")] >= -sc.meta["D"] + k * step
        assert trace.lost_units() == []
        # sources comply per flow with the regulator curve
        gen = {}
        for e in trace.of_kind("generated"):
            gen.setdefault(e.flow, []).append((e.time, e.size))
        for fid, events in gen.items():
            assert check_compliance(events, sc.flows[fid].arrival) is None

    def test_overlapping_bounds_still_diverge(self):
        # second branch starts below the first one's maximum: d2 < D1
        sc = gen_adversarial_ir(1, 2, 0, 5, 1, 6, q=4, periods=6)
        trace = run_scenario(sc)
        delays = trace.delays()
        step = sc.meta["divergence_step"]
        assert step > 0
        assert delays[("f1", "m1_5")] >= -sc.meta["D"] + 5 * step
        assert delays[("f1", "m1_5")] > delays[("f1", "m1_0")]

    def test_touching_bounds_perturb_the_forward_delay(self):
        # d2 == D1 exactly: the divergence needs a slightly later forwarding
        sc = gen_adversarial_ir(1, 2, 0, 2, 2, 3, q=4, periods=6)
        trace = run_scenario(sc)
        assert trace.lost_units() == []
        assert sc.meta["divergence_step"] > 0
        assert trace.delays()[("f1", "m1_5")] >= -sc.meta["D"] + 5 * sc.meta["divergence_step"]

    def test_single_point_slow_branch(self):
        # d2 == D2 == D1 with jitter only on the fast branch
        sc = gen_adversarial_ir(1, 2, 0, 2, 2, 2, q=4, periods=6)
        trace = run_scenario(sc)
        assert sc.meta["divergence_step"] > 0
        assert trace.delays()[("f1", "m1_5")] >= -sc.meta["D"] + 5 * sc.meta["divergence_step"]


class TestSerialization:
    def test_scenario_json_round_trip(self):
        sc = toy_scenario("lossy")
        doc = scenario_to_json(sc)
        back = load_scenario(doc)
        t1 = run_scenario(sc)
        t2 = run_scenario(back)
        assert [
            (e.time, e.kind, e.flow, e.unit, e.size, e.branch) for e in t1.events
        ] == [(e.time, e.kind, e.flow, e.unit, e.size, e.branch) for e in t2.events]

    def test_trace_csv_shape(self):
        trace = run_scenario(toy_scenario("rto"))
        lines = trace.to_csv().strip().splitlines()
        assert lines[0] == "time,kind,branch,flow,unit,size"
        assert len(lines) == 1 + len(trace.events)
