import copy

import numpy as np
import pytest

from conftest import scenario, solved
from msrestore.model import assemble
from msrestore.validate import (NonRadialError, PFResult, PlanError, RestorationPlan, check_operational_limits,
                                extract_plan, radial_power_flow, soc_gap, validate_plan)
from oracle import ConicForm, tier_vector


def test_zero_load_is_flat():
    sl = radial_power_flow(["S", "a", "b"], [("1", "S", "a", 0.01, 0.02), ("2", "a", "b", 0.01, 0.02)],
                           {}, {}, {"S": 1.02})
    assert sl.converged
    assert sl.voltage == pytest.approx({"S": 1.02, "a": 1.02, "b": 1.02})
    assert sl.current == pytest.approx({"1": 0.0, "2": 0.0})
    assert sl.slack_injection["S"] == pytest.approx((0.0, 0.0))


def test_one_line_fixed_point():
    sl = radial_power_flow(["S", "a"], [("L", "S", "a", 0.01, 0.01)], {"a": (0.1, 0.05)}, {}, {"S": 1.0})
    P, Q, F = 0.1, 0.05, 0.0
    for _ in range(60):
        P, Q = 0.1 + 0.01 * F, 0.05 + 0.01 * F
        F = P * P + Q * Q
    V2 = 1.0 - 2 * (0.01 * P + 0.01 * Q) + 2e-4 * F
    assert sl.converged and sl.sweeps < 10
    assert sl.current["L"] ** 2 == pytest.approx(F, abs=1e-12)
    assert sl.voltage["a"] ** 2 == pytest.approx(V2, abs=1e-12)
    assert sl.mismatch <= 1e-8


def test_dead_island_with_dg():
    sl = radial_power_flow(["S", "a", "x", "y"], [("1", "S", "a", 0.01, 0.02), ("2", "x", "y", 0.01, 0.02)],
                           {"a": (0.1, 0.0), "y": (0.1, 0.0)}, {"x": (0.2, 0.0)}, {"S": 1.0})
    assert sl.voltage["x"] == 0.0 and sl.voltage["y"] == 0.0 and sl.current["2"] == 0.0
    assert "x" not in sl.slack_injection


def test_loop_is_rejected():
    lines = [("1", "S", "a", 0.01, 0.02), ("2", "a", "b", 0.01, 0.02), ("3", "b", "S", 0.01, 0.02)]
    with pytest.raises(NonRadialError):
        radial_power_flow(["S", "a", "b"], lines, {}, {}, {"S": 1.0})


def test_two_substations_in_one_component_rejected():
    with pytest.raises(NonRadialError):
        radial_power_flow(["S", "T"], [("1", "S", "T", 0.01, 0.02)], {}, {}, {"S": 1.0, "T": 1.0})


def test_flat_case_limits():
    s = scenario("no_fault")
    buses = [b.id for b in s.buses]
    lines = [(ln.id, ln.from_bus, ln.to_bus, ln.r, ln.x) for ln in s.lines if ln.id != "T1"]
    sl = radial_power_flow(buses, lines, {}, {}, {"SA": 1.0, "SB": 1.0})
    rep = check_operational_limits(PFResult([sl]), s)
    assert rep.violations == []
    assert rep.min_current_margin == pytest.approx(min(ln.ampacity for ln in s.lines if ln.id != "T1"))


def test_overload_flags_exactly_that_line():
    s = scenario("overloaded_feeder")
    sl = radial_power_flow(["SA", "a1"], [("SA-a1", "SA", "a1", 0.01, 0.02)], {"a1": (1.2, 0.0)}, {},
                           {"SA": 1.0}, slot=1)
    rep = check_operational_limits(PFResult([sl]), s)
    assert len(rep.violations) == 1 and "SA-a1" in rep.violations[0]
    assert sl.current["SA-a1"] == pytest.approx(1.2, rel=0.05)


def _pf_point(model):
    """Model point built from an exact power flow on the healthy no-fault network."""
    s = model.scenario
    x = np.zeros(len(model.idx))
    col = model.idx.col
    for t in range(1, s.T + 1):
        loads = {b.id: (b.demand_p[t - 1], b.demand_q[t - 1]) for b in s.buses}
        lines = [(ln.id, ln.from_bus, ln.to_bus, ln.r, ln.x) for ln in s.lines if ln.switch is None or
                 not ln.switch.is_tie]
        sl = radial_power_flow([b.id for b in s.buses], lines, loads, {}, {"SA": 1.0, "SB": 1.0})
        for b, v in sl.voltage.items():
            x[col("V", (b, t))] = v * v
        for ln in model.lines:
            if ln.id in sl.flow:
                u, P, Q = sl.flow[ln.id]
                assert u == ln.frm
                x[col("p", (ln.id, t))], x[col("q", (ln.id, t))] = P, Q
                x[col("F", (ln.id, t))] = sl.current[ln.id] ** 2
    return x


def test_soc_gap_of_exact_flow_and_inflation():
    m = assemble(scenario("no_fault"))
    x = _pf_point(m)
    gap, _ = soc_gap(x, m)
    assert gap <= 1e-8
    x[m.idx.col("F", ("a1-a2", 2))] += 0.1
    gap, where = soc_gap(x, m)
    v_from = x[m.idx.col("V", ("a1", 2))]
    assert where == ["a1-a2", 2] and gap == pytest.approx(0.1 * v_from, rel=1e-6)


def test_untouched_post_fault_state_gives_empty_plan():
    m = assemble(scenario("two_feeder_dg"), steps=1)
    fix = {j: 0 for j in m.binaries}
    for t in (1, 2):
        fix[m.idx.col("K", (t, 1))] = 1
    x = ConicForm(m).solve(fix, tier_vector(m, 2))
    plan = extract_plan(m, x)
    assert plan.steps[0].actions == []
    assert all(v == [0, 0] for v in plan.load_schedule.values())
    assert validate_plan(plan, m.scenario).ok


def test_two_feeder_plan_actions():
    plan = solved("two_feeder_dg", 2).plan
    acts = [[(a["action"], a["device"]) for a in st.actions] for st in plan.steps]
    assert acts == [[("close", "T3")], [("close", "T5"), ("close", "load breaker 6")]]
    assert plan.slot_step == [1, 2]
    assert plan.steps[0].start_time_min <= plan.steps[1].start_time_min


def test_opens_precede_closes():
    plan = solved("sectionalizer_single_step").plan
    acts = [(a["action"], a["device"]) for a in plan.steps[0].actions]
    assert acts == [("open", "SW2"), ("close", "TB"), ("close", "TC")]


def test_plan_round_trip():
    plan = solved("two_feeder_dg", 2).plan
    again = RestorationPlan.from_json(plan.to_json())
    assert again.to_json() == plan.to_json()
    with pytest.raises(PlanError):
        RestorationPlan.from_json("[]")
    with pytest.raises(PlanError):
        RestorationPlan.from_json('{"steps": 3}')


def _edit(plan):
    return RestorationPlan.from_dict(copy.deepcopy(plan.to_dict()))


def test_reservoir_audit():
    s = scenario("startup_delay")
    plan = _edit(solved("startup_delay").plan)
    plan.dg_dispatch["DG1"]["p"][3] = 0.5  # 0.25 h at full output drains more than the reservoir holds
    assert any("reservoir" in v for v in validate_plan(plan, s).violations)


def test_startup_audit():
    s = scenario("startup_delay")
    plan = _edit(solved("startup_delay").plan)
    plan.dg_dispatch["DG1"]["p"][1] = 0.05
    assert any("start-up audit" in v for v in validate_plan(plan, s).violations)


def test_reinterruption_audit():
    s = scenario("two_feeder_dg")
    plan = _edit(solved("two_feeder_dg", 2).plan)
    plan.load_schedule["d"] = [1, 0]
    assert any("interrupted again" in v for v in validate_plan(plan, s).violations)


def test_supply_to_dead_bus_audit():
    s = scenario("two_feeder_dg")
    plan = _edit(solved("two_feeder_dg", 2).plan)
    plan.load_schedule["8"] = [1, 1]
    assert any("de-energized" in v for v in validate_plan(plan, s).violations)


def test_all_fixture_plans_pass():
    for name, steps in [("two_feeder_dg", 2), ("two_feeder_dg", 1), ("sectionalizer_single_step", None),
                        ("startup_delay", None), ("no_fault", None)]:
        out = solved(name, steps)
        rep = validate_plan(out.plan, scenario(name))
        assert rep.ok, (name, rep.violations)
        assert all(sl.converged and sl.mismatch <= 1e-8 for sl in rep.pf.slices)
