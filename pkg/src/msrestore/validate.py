"""Plan extraction, exact radial power flow and post-solve audits."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional

import networkx as nx
import numpy as np

from .model import MISOCPModel, tau
from .scenario import Scenario, normally_closed
from .zones import locate_off_outage, off_outage_graph, partition_zones

SOC_GAP_LIMIT = 1e-5
LIMIT_TOL = 1e-6
ACTIVE = 1e-6
MAX_SWEEPS = 100
PF_TOL = 1e-8


class NonRadialError(ValueError):
    pass


class PlanError(ValueError):
    """Malformed plan document."""


# -- restoration plan ------------------------------------------------------

@dataclass
class StepPlan:
    step: int
    start_time_min: float
    slots: list
    actions: list  # [{"device", "action", "kind", "op_time", ["slot"]}]
    switch_states: dict  # line id -> "open" | "closed"
    energized_buses: list
    action_time_min: float
    model_switch_time_min: float


@dataclass
class RestorationPlan:
    scenario: str
    steps: list
    slot_step: list
    slot_minutes: float
    load_schedule: dict
    dg_dispatch: dict
    slack_voltage: dict
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_dict(d: dict) -> "RestorationPlan":
        try:
            steps = [StepPlan(**st) for st in d["steps"]]
            return RestorationPlan(
                scenario=d.get("scenario", ""), steps=steps, slot_step=[int(v) for v in d["slot_step"]],
                slot_minutes=float(d["slot_minutes"]), load_schedule=d["load_schedule"],
                dg_dispatch=d["dg_dispatch"], slack_voltage=d["slack_voltage"], metrics=d.get("metrics", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanError(f"malformed plan: {exc}") from None

    @staticmethod
    def from_json(text: str) -> "RestorationPlan":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(d, dict):
            raise PlanError("plan must be a JSON object")
        return RestorationPlan.from_dict(d)


def _r(v: float, nd: int = 10) -> float:
    v = round(float(v), nd)
    return 0.0 if v == 0 else v


def extract_plan(model: MISOCPModel, x, metrics: Optional[dict] = None) -> RestorationPlan:
    """Timed switching plan from an integral model solution."""
    s = model.scenario
    idx = model.idx
    x = np.asarray(x, dtype=float)
    T, S = model.slots, model.steps
    ag = model.area_graph
    nstar = model.area.nodes

    def val(fam, key):
        return float(x[idx.col(fam, key)])

    if ag is None:
        slot_step = [1] * T
    else:
        slot_step = [1 + int(np.argmax([val("K", (t, st)) for st in range(1, S + 1)])) for t in range(1, T + 1)]

    healthy = [b for b in model.buses if b not in set(nstar)]
    prev_state = {}
    if ag is not None:
        prev_state = {e.line: ("open" if e.is_tie else "closed") for e in ag.edges}
    op_time = {e.line: e.op_time for e in ag.edges} if ag is not None else {}
    energized_at = {}
    steps = []
    for st in range(1, S + 1):
        state, energized = {}, set(healthy)
        model_time = 0.0
        if ag is not None:
            for e in ag.edges:
                y = val("Y", (e.line, st)) > 0.5
                if e.is_tie:
                    state[e.line] = "closed" if y else "open"
                    model_time += e.op_time * y
                else:
                    op = val("Sop", (e.line, st))
                    state[e.line] = "open" if (not y and op > 0.5) else "closed"
                    model_time += e.op_time * op
            for k in ag.inner_zones:
                if val("X", (k, st)) > 0.5:
                    energized.update(ag.zone(k).buses)
        slots = [t for t in range(1, T + 1) if slot_step[t - 1] == st]
        for t in slots:
            energized_at[t] = energized
        actions = []
        for ln in sorted(ln for ln, v in state.items() if v == "open" and prev_state.get(ln) == "closed"):
            actions.append({"device": ln, "action": "open", "kind": "switch", "op_time": op_time[ln]})
        for ln in sorted(ln for ln, v in state.items() if v == "closed" and prev_state.get(ln) == "open"):
            actions.append({"device": ln, "action": "close", "kind": "switch", "op_time": op_time[ln]})
        # a breaker is listed when a load that stayed energized but shed is picked up
        for t in slots:
            if t == 1:
                continue
            for b in nstar:
                if (s.bus(b).has_load_breaker and b in energized_at[t - 1]
                        and val("L", (b, t - 1)) < 0.5 and val("L", (b, t)) > 0.5):
                    actions.append({"device": f"load breaker {b}", "action": "close", "kind": "load_breaker",
                                    "op_time": 0.0, "slot": t})
        steps.append(StepPlan(
            step=st, start_time_min=0.0, slots=slots, actions=actions, switch_states=dict(sorted(state.items())),
            energized_buses=sorted(energized, key=[b.id for b in s.buses].index),
            action_time_min=_r(sum(a["op_time"] for a in actions), 6), model_switch_time_min=_r(model_time, 6),
        ))
        prev_state = state
    # earliest completion times consistent with the slot assignment
    prev = 0.0
    for i, st in enumerate(steps):
        earliest = prev + st.model_switch_time_min
        if i > 0 and steps[i - 1].slots:
            earliest = max(earliest, tau(steps[i - 1].slots[-1], s.slot_minutes))
        st.start_time_min = _r(earliest, 6)
        prev = earliest

    load_schedule = {b: [int(round(val("L", (b, t)))) for t in range(1, T + 1)] for b in nstar}
    dispatch = {}
    slack_v = {}
    for g in model.generators:
        entry = {
            "node": g.node, "kind": g.kind,
            "p": [_r(val("Pinj", (g.id, t))) for t in range(1, T + 1)],
            "q": [_r(val("Qinj", (g.id, t))) for t in range(1, T + 1)],
        }
        if idx.has("E", (g.id, 1)):
            entry["energy"] = [_r(val("E", (g.id, t))) for t in range(1, T + 1)]
        dispatch[g.id] = entry
        if g.is_substation:
            slack_v[g.node] = [_r(math.sqrt(max(val("V", (g.node, t)), 0.0))) for t in range(1, T + 1)]
    tiers = model.tiers
    m = {
        "F_re": _r(tiers[0].raw(x), 9), "F_sw": _r(tiers[1].raw(x), 9), "F_op": _r(tiers[2].raw(x), 9),
        "F_re_normalized": _r(tiers[0].value(x), 9), "F_sw_normalized": _r(tiers[1].value(x), 9),
        "F_op_normalized": _r(tiers[2].value(x), 9),
    }
    gap, where = soc_gap(x, model)
    m["soc_gap"] = float(f"{gap:.3e}")
    m["soc_gap_location"] = where
    m["soc_gap_flag"] = bool(gap > SOC_GAP_LIMIT)
    if metrics:
        m.update(metrics)
    return RestorationPlan(s.name, steps, slot_step, s.slot_minutes, load_schedule, dispatch, slack_v, m)


def soc_gap(x, model: MISOCPModel):
    """Largest |F*V_from - (p^2 + q^2)| over line-slots, with its location."""
    idx = model.idx
    worst, where = 0.0, None
    for t in range(1, model.slots + 1):
        for ln in model.lines:
            F = x[idx.col("F", (ln.id, t))]
            p = x[idx.col("p", (ln.id, t))]
            q = x[idx.col("q", (ln.id, t))]
            V = x[idx.col("V", (ln.frm, t))]
            g = abs(F * V - (p * p + q * q))
            if g > worst:
                worst, where = g, [ln.id, t]
    return float(worst), where


# -- exact power flow ------------------------------------------------------

@dataclass
class PFSlice:
    slot: int
    voltage: dict  # bus -> |V| (0 when de-energized)
    current: dict  # line -> |I|
    flow: dict  # line -> (sending bus, P, Q)
    slack_injection: dict  # bus -> (P, Q)
    converged: bool
    mismatch: float
    sweeps: int


@dataclass
class PFResult:
    slices: list

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.slices)


def radial_power_flow(buses, lines, loads: dict, injections: dict, slack: dict, slot: int = 0) -> PFSlice:
    """Backward-forward sweep on the exact branch-flow equations.

    ``lines`` holds in-service closed lines as (id, a, b, r, x); ``loads`` and
    ``injections`` map bus -> (P, Q); ``slack`` maps substation bus -> |V|.
    """
    g = nx.MultiGraph()
    g.add_nodes_from(buses)
    for lid, a, b, r, x in lines:
        g.add_edge(a, b, key=lid, r=r, x=x)
    volt = {b: 0.0 for b in buses}
    current, flow, slack_inj = {}, {}, {}
    worst, sweeps_used = 0.0, 0
    converged = True
    for comp in nx.connected_components(g):
        sub = g.subgraph(comp)
        roots = [b for b in comp if b in slack]
        if sub.number_of_edges() != len(comp) - 1:
            raise NonRadialError(f"closed lines form a loop among buses {sorted(comp)[:6]}")
        if len(roots) > 1:
            raise NonRadialError(f"buses {sorted(roots)} are substations in one energized component")
        if not roots:
            for u, v, lid in sub.edges(keys=True):
                current[lid] = 0.0
            continue
        root = roots[0]
        order, parent = [root], {root: None}
        dq = deque([root])
        while dq:
            u = dq.popleft()
            for v in sorted(sub.neighbors(u)):
                if v not in parent:
                    lid = next(iter(sub.get_edge_data(u, v)))
                    d = sub.get_edge_data(u, v)[lid]
                    parent[v] = (u, lid, d["r"], d["x"])
                    order.append(v)
                    dq.append(v)
        net = {b: (loads.get(b, (0.0, 0.0))[0] - injections.get(b, (0.0, 0.0))[0],
                   loads.get(b, (0.0, 0.0))[1] - injections.get(b, (0.0, 0.0))[1]) for b in order}
        V2 = {b: slack[root] ** 2 for b in order}
        F = {b: 0.0 for b in order[1:]}
        P, Q = {}, {}
        ok = False
        for sweep in range(1, MAX_SWEEPS + 1):
            sweeps_used = max(sweeps_used, sweep)
            accP = {b: net[b][0] for b in order}
            accQ = {b: net[b][1] for b in order}
            for b in reversed(order[1:]):
                u, lid, r, x = parent[b]
                P[b] = accP[b] + r * F[b]
                Q[b] = accQ[b] + x * F[b]
                accP[u] += P[b]
                accQ[u] += Q[b]
            change = 0.0
            for b in order[1:]:
                u, lid, r, x = parent[b]
                if V2[u] <= 0:
                    raise FloatingPointError("voltage collapse during sweep")
                Fn = (P[b] ** 2 + Q[b] ** 2) / V2[u]
                V2n = V2[u] - 2 * (r * P[b] + x * Q[b]) + (r * r + x * x) * Fn
                change = max(change, abs(Fn - F[b]), abs(V2n - V2[b]))
                F[b], V2[b] = Fn, V2n
            if change <= PF_TOL * 1e-2:
                ok = True
                break
        # nodal mismatch recomputed from the final state
        mis = 0.0
        bal = {b: [-net[b][0], -net[b][1]] for b in order}
        for b in order[1:]:
            u, lid, r, x = parent[b]
            Fx = (P[b] ** 2 + Q[b] ** 2) / V2[u]
            bal[b][0] += P[b] - r * Fx
            bal[b][1] += Q[b] - x * Fx
            bal[u][0] -= P[b]
            bal[u][1] -= Q[b]
        for b in order[1:]:
            mis = max(mis, abs(bal[b][0]), abs(bal[b][1]))
        worst = max(worst, mis)
        converged = converged and ok and mis <= PF_TOL
        slack_inj[root] = (-bal[root][0], -bal[root][1])
        for b in order:
            volt[b] = math.sqrt(max(V2[b], 0.0))
        for b in order[1:]:
            u, lid, r, x = parent[b]
            current[lid] = math.sqrt(max(F[b], 0.0))
            flow[lid] = (u, P[b], Q[b])
    return PFSlice(slot, volt, current, flow, slack_inj, converged, worst, sweeps_used)


@dataclass
class LimitReport:
    violations: list
    min_voltage: float
    min_voltage_at: Optional[list]
    max_voltage: float
    max_voltage_at: Optional[list]
    min_current_margin: float
    min_margin_at: Optional[list]


def check_operational_limits(pf: PFResult, s: Scenario, tol: float = LIMIT_TOL) -> LimitReport:
    viol = []
    vmin, vmax, margin = math.inf, -math.inf, math.inf
    vmin_at = vmax_at = margin_at = None
    amp = {ln.id: ln.ampacity for ln in s.lines}
    for sl in pf.slices:
        for b, v in sl.voltage.items():
            if v <= 0:
                continue
            if v < vmin:
                vmin, vmin_at = v, [b, sl.slot]
            if v > vmax:
                vmax, vmax_at = v, [b, sl.slot]
            if v < s.v_min - tol or v > s.v_max + tol:
                viol.append(f"voltage {v:.6f} p.u. at bus {b}, slot {sl.slot}")
        for lid, i in sl.current.items():
            m = amp[lid] - i
            if m < margin:
                margin, margin_at = m, [lid, sl.slot]
            if i > amp[lid] + tol:
                viol.append(f"current {i:.6f} p.u. exceeds ampacity {amp[lid]:g} on line {lid}, slot {sl.slot}")
    if not math.isfinite(vmin):
        vmin = vmax = 0.0
    if not math.isfinite(margin):
        margin = 0.0
    return LimitReport(viol, vmin, vmin_at, vmax, vmax_at, margin, margin_at)


# -- full plan audit -------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list
    pf: Optional[PFResult]
    limits: Optional[LimitReport]
    per_slot: list

    @property
    def ok(self) -> bool:
        return not self.violations


def _physical_lines(s: Scenario, removed: set, states: dict):
    out = []
    for ln in s.lines:
        if ln.id in removed:
            continue
        if ln.id in states:
            closed = states[ln.id] == "closed"
        else:
            closed = normally_closed(ln)
        if closed:
            out.append((ln.id, ln.from_bus, ln.to_bus, ln.r, ln.x))
    return out


def validate_plan(plan: RestorationPlan, s: Scenario) -> ValidationReport:
    viol = []
    T = s.T
    if len(plan.slot_step) != T:
        raise PlanError(f"slot_step has {len(plan.slot_step)} entries, horizon has {T} slots")
    zg = partition_zones(s)
    if s.has_fault:
        area = locate_off_outage(s, zg)
        dead, removed = set(area.faulted_buses), set(area.removed_lines)
        ag = off_outage_graph(s, zg, area)
        switchable = {e.line for e in ag.edges}
        nstar = set(area.nodes)
    else:
        dead, removed, switchable, nstar = set(), set(), set(), set()
    buses = [b.id for b in s.buses if b.id not in dead]
    subs = {g.node for g in s.generators if g.is_substation and g.node not in dead}
    gen_by_id = {g.id: g for g in s.generators}
    step_of = {st.step: st for st in plan.steps}

    energized_by_step = {}
    lines_by_step = {}
    for st in plan.steps:
        unknown = set(st.switch_states) - switchable
        if unknown:
            viol.append(f"step {st.step}: switch states given for non-switchable lines {sorted(unknown)}")
        lines = _physical_lines(s, removed, st.switch_states)
        g = nx.MultiGraph()
        g.add_nodes_from(buses)
        for lid, a, b, _, _ in lines:
            g.add_edge(a, b, key=lid)
        energized = set()
        radial = True
        for comp in nx.connected_components(g):
            if g.subgraph(comp).number_of_edges() != len(comp) - 1:
                radial = False
            if comp & subs:
                if len(comp & subs) > 1:
                    radial = False
                energized |= comp
        if not radial:
            viol.append(f"non-radial configuration at step {st.step}")
        energized_by_step[st.step] = energized
        lines_by_step[st.step] = lines

    # timing
    prev = 0.0
    for st in sorted(plan.steps, key=lambda z: z.step):
        if st.start_time_min + 1e-6 < prev + st.action_time_min:
            viol.append(f"step {st.step} starts at {st.start_time_min} min before its switching completes")
        prev = st.start_time_min
    for t in range(1, T + 1):
        st = step_of.get(plan.slot_step[t - 1])
        if st is None:
            raise PlanError(f"slot {t} refers to unknown step {plan.slot_step[t - 1]}")
        if st.start_time_min > tau(t, s.slot_minutes) + 1e-6:
            viol.append(f"slot {t} is assigned to step {st.step}, which starts at {st.start_time_min} min")

    # pickup monotonicity and supply
    for b, sched in plan.load_schedule.items():
        if any(sched[t] > sched[t + 1] for t in range(len(sched) - 1)):
            viol.append(f"load at bus {b} is interrupted again after pickup")
    served = {}
    for t in range(1, T + 1):
        en = energized_by_step[plan.slot_step[t - 1]]
        for b in buses:
            on = plan.load_schedule[b][t - 1] if b in plan.load_schedule else 1
            if on and b not in en and (s.bus(b).demand_p[t - 1] > 0 or s.bus(b).demand_q[t - 1] > 0):
                viol.append(f"load at bus {b} is scheduled in slot {t} but the bus is de-energized")
                on = 0
            if b in nstar and b in en and not on and not s.bus(b).has_load_breaker:
                viol.append(f"bus {b} has no load breaker but is energized without its load in slot {t}")
            served[(b, t)] = on

    # dispatch audits
    for gid, d in plan.dg_dispatch.items():
        g = gen_by_id.get(gid)
        if g is None:
            raise PlanError(f"unknown generator {gid!r} in dg_dispatch")
        p = d["p"]
        if g.is_dg and math.isfinite(g.initial_energy):
            used = sum(p) * s.dt_hours
            if used > g.initial_energy + 1e-6:
                viol.append(f"reservoir of {gid}: {used:.6f} p.u.h used, {g.initial_energy:g} available")
        if g.is_dg and g.node in nstar:
            en = [g.node in energized_by_step[plan.slot_step[t - 1]] for t in range(1, T + 1)]
            for t in range(1, T + 1):
                active = p[t - 1] > ACTIVE or abs(d["q"][t - 1]) > ACTIVE
                if not active:
                    continue
                window = range(t - g.startup_slots, t + 1)
                if t <= g.startup_slots or not all(en[k - 1] for k in window):
                    first_en = next((k for k in range(1, T + 1) if en[k - 1]), None)
                    viol.append(f"start-up audit: {gid} injects in slot {t} but its node was energized "
                                f"at slot {first_en} with a start-up of {g.startup_slots} slots")
                    break

    # exact power flow per slot
    slices = []
    for t in range(1, T + 1):
        stn = plan.slot_step[t - 1]
        en = energized_by_step[stn]
        loads = {b: (served[(b, t)] * s.bus(b).demand_p[t - 1], served[(b, t)] * s.bus(b).demand_q[t - 1])
                 for b in buses}
        inj = {}
        for gid, d in plan.dg_dispatch.items():
            g = gen_by_id[gid]
            if g.is_substation:
                continue
            if g.node not in en:
                if abs(d["p"][t - 1]) > ACTIVE or abs(d["q"][t - 1]) > ACTIVE:
                    viol.append(f"{gid} injects in slot {t} inside a de-energized island")
                continue
            a, b = inj.get(g.node, (0.0, 0.0))
            inj[g.node] = (a + d["p"][t - 1], b + d["q"][t - 1])
        slack = {}
        for b in subs:
            vs = plan.slack_voltage.get(b)
            slack[b] = float(vs[t - 1]) if vs else 1.0
        try:
            sl = radial_power_flow(buses, lines_by_step[stn], loads, inj, slack, slot=t)
        except NonRadialError:
            continue  # already reported per step
        except FloatingPointError as exc:
            viol.append(f"power flow failed in slot {t}: {exc}")
            continue
        if not sl.converged:
            viol.append(f"power flow did not converge in slot {t} (mismatch {sl.mismatch:.2e})")
        for b, (pp, qq) in sl.slack_injection.items():
            for g in s.generators:
                if g.is_substation and g.node == b:
                    if math.hypot(pp, qq) > g.s_max + LIMIT_TOL or pp < -LIMIT_TOL:
                        viol.append(f"substation {g.id} injection ({pp:.4f}, {qq:.4f}) outside its capability "
                                    f"in slot {t}")
        slices.append(sl)
    pf = PFResult(slices)
    limits = check_operational_limits(pf, s)
    viol.extend(limits.violations)
    per_slot = []
    for sl in slices:
        vs = [v for v in sl.voltage.values() if v > 0]
        margins = [next(ln.ampacity for ln in s.lines if ln.id == lid) - i for lid, i in sl.current.items()]
        per_slot.append({"slot": sl.slot, "min_voltage": min(vs, default=0.0), "max_voltage": max(vs, default=0.0),
                         "min_current_margin": min(margins, default=0.0), "mismatch": sl.mismatch})
    return ValidationReport(viol, pf, limits, per_slot)
