"""Assembly of the multi-step restoration MISOCP.

Variables live in one VariableIndex; constraints are collected in named
ConstraintBlocks; three objective tiers are kept separate so the solver can
optimize them lexicographically.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .conic import ConicProgram
from .linexpr import ConstraintBlock, Expr, Row, VariableIndex
from .radiality import (
    declare_topology_vars,
    emit_radiality_constraints,
    emit_sectionalizer_constraints,
    line_energization,
    zone_energization,
)
from .scenario import Scenario, normally_closed
from .zones import EMPTY_AREA, OffOutageArea, ZoneGraph, locate_off_outage, off_outage_graph, partition_zones

VOLTAGE_MARGIN = 0.1


@dataclass(frozen=True)
class ModelOptions:
    voltage_drop: str = "full"  # full | as_printed
    restart_clock: str = "energization"  # energization | step

    def __post_init__(self):
        if self.voltage_drop not in ("full", "as_printed"):
            raise ValueError(f"voltage_drop must be full or as_printed, got {self.voltage_drop!r}")
        if self.restart_clock not in ("energization", "step"):
            raise ValueError(f"restart_clock must be energization or step, got {self.restart_clock!r}")


@dataclass(frozen=True)
class NetLine:
    id: str
    frm: str  # sending end used by the branch-flow variables
    to: str
    r: float
    x: float
    fmax: float
    in_area: bool


@dataclass
class ObjectiveTier:
    rank: int
    name: str
    coeffs: dict
    const: float
    norm: float
    weight: float = 1.0

    def value(self, x) -> float:
        """Normalized, unweighted value."""
        return (self.const + sum(c * x[j] for j, c in self.coeffs.items())) / self.norm

    def raw(self, x) -> float:
        return self.value(x) * self.norm

    def row(self, bound: float, tag: str) -> Row:
        """Row ``value(x) <= bound`` in normalized units."""
        e = Expr({j: c / self.norm for j, c in self.coeffs.items()})
        return Row(e, -math.inf, bound - self.const / self.norm, tag)


@dataclass
class MISOCPModel:
    scenario: Scenario
    options: ModelOptions
    idx: VariableIndex
    blocks: dict
    tiers: list
    steps: int
    slots: int
    zone_graph: ZoneGraph
    area: OffOutageArea
    area_graph: Optional[ZoneGraph]
    buses: list
    lines: list
    generators: list
    meta: dict = field(default_factory=dict)

    @property
    def binaries(self) -> list[int]:
        return self.idx.binaries

    @property
    def nstar(self) -> set:
        return set(self.area.nodes)

    def all_rows(self) -> list[Row]:
        return [r for b in self.blocks.values() for r in b.rows]

    def all_cones(self):
        return [k for b in self.blocks.values() for k in b.cones]

    def violation(self, x) -> float:
        v = max((b.violation(x) for b in self.blocks.values()), default=0.0)
        lb, ub = np.asarray(self.idx.lb), np.asarray(self.idx.ub)
        x = np.asarray(x)
        return max(v, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))

    def dump(self) -> str:
        """Deterministic text listing of variables, rows and cones sorted by tag."""
        name = self.idx.name
        out = [f"model steps={self.steps} slots={self.slots} vars={len(self.idx)} "
               f"binaries={len(self.binaries)}"]
        for j in range(len(self.idx)):
            kind = "bin" if self.idx.is_binary[j] else "cont"
            out.append(f"var {name(j)} {kind} [{self.idx.lb[j]:.12g}, {self.idx.ub[j]:.12g}]")
        for t in self.tiers:
            terms = " ".join(f"{c:+.12g}*{name(j)}" for j, c in sorted(t.coeffs.items()))
            out.append(f"tier {t.rank} {t.name} norm={t.norm:.12g} const={t.const:.12g} {terms}")

        def fmt(e: Expr) -> str:
            body = " ".join(f"{c:+.12g}*{name(j)}" for j, c in sorted(e.terms.items(), key=lambda kv: name(kv[0])))
            return (body + (f" {e.const:+.12g}" if e.const else "")) or "0"

        rows = sorted((r.tag, fmt(r.expr), r.lo, r.hi) for r in self.all_rows())
        for tag, body, lo, hi in rows:
            out.append(f"row {tag}: {lo:.12g} <= {body} <= {hi:.12g}")
        cones = sorted((k.tag, fmt(k.head), " | ".join(fmt(m) for m in k.members)) for k in self.all_cones())
        for tag, head, mem in cones:
            out.append(f"cone {tag}: ||{mem}|| <= {head}")
        return "\n".join(out) + "\n"


# -- helpers ---------------------------------------------------------------

def tau(t: int, slot_minutes: float) -> float:
    """Time coordinate of slot t used by the step mapping: the end of the slot."""
    return t * slot_minutes


def _orient(s: Scenario, buses: list, raw_lines: list) -> dict:
    """Sending end per line from a BFS over the model network rooted at the substations."""
    adj = {b: [] for b in buses}
    for ln in raw_lines:
        adj[ln.from_bus].append((ln.to_bus, ln.id))
        adj[ln.to_bus].append((ln.from_bus, ln.id))
    dist = {}
    q = deque()
    for g in s.generators:
        if g.is_substation and g.node in adj and g.node not in dist:
            dist[g.node] = 0
            q.append(g.node)
    while q:
        u = q.popleft()
        for v, _ in sorted(adj[u]):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    out = {}
    for ln in raw_lines:
        da, db = dist.get(ln.from_bus, math.inf), dist.get(ln.to_bus, math.inf)
        out[ln.id] = (ln.to_bus, ln.from_bus) if db < da else (ln.from_bus, ln.to_bus)
    return out


def build_network(s: Scenario, zg: ZoneGraph, area: OffOutageArea, agraph: Optional[ZoneGraph]):
    dead = set(area.faulted_buses)
    removed = set(area.removed_lines)
    nstar = set(area.nodes)
    buses = [b.id for b in s.buses if b.id not in dead]
    edge_lines = {e.line for e in agraph.edges} if agraph is not None else set()
    raw = []
    for ln in s.lines:
        if ln.id in removed:
            continue
        touches = ln.from_bus in nstar or ln.to_bus in nstar
        if touches:
            if ln.switch is None or ln.id in edge_lines:
                raw.append((ln, True))
        elif normally_closed(ln):
            raw.append((ln, False))
    orient = _orient(s, buses, [ln for ln, _ in raw])
    lines = [NetLine(ln.id, *orient[ln.id], ln.r, ln.x, ln.ampacity, in_area) for ln, in_area in raw]
    gens = [g for g in s.generators if g.node not in dead]
    return buses, lines, gens


# -- emitters --------------------------------------------------------------

def build_objective(s: Scenario, idx: VariableIndex, *, steps: int = 1, buses=None, lines=None,
                    area_graph: Optional[ZoneGraph] = None, nstar=()) -> list[ObjectiveTier]:
    T, dt = s.T, s.dt_hours
    buses = buses if buses is not None else [b.id for b in s.buses]
    nstar = set(nstar)
    coeffs, const, norm = {}, 0.0, 0.0
    for bid in buses:
        b = s.bus(bid)
        for t in range(1, T + 1):
            w = b.importance * b.demand_p[t - 1] * dt
            norm += w
            if bid in nstar:
                const += w
                j = idx.col("L", (bid, t))
                coeffs[j] = coeffs.get(j, 0.0) - w
    tier1 = ObjectiveTier(1, "F_re", coeffs, const, norm if norm > 0 else 1.0, s.weights.get("w_re", 1.0))

    coeffs, norm = {}, 0.0
    if area_graph is not None:
        for e in area_graph.edges:
            norm += e.op_time * steps
            for st in range(1, steps + 1):
                fam = "Y" if e.is_tie else "Sop"
                coeffs[idx.col(fam, (e.line, st))] = e.op_time
    tier2 = ObjectiveTier(2, "F_sw", coeffs, 0.0, norm if norm > 0 else 1.0, s.weights.get("w_sw", 1.0))

    coeffs, norm = {}, 0.0
    for ln in lines or []:
        norm += ln.r * ln.fmax**2 * T
        for t in range(1, T + 1):
            coeffs[idx.col("F", (ln.id, t))] = ln.r
    tier3 = ObjectiveTier(3, "F_op", coeffs, 0.0, norm if norm > 0 else 1.0, s.weights.get("w_op", 1.0))
    return [tier1, tier2, tier3]


def emit_time_mapping(S: int, T: int, idx: VariableIndex, *, slot_minutes: float = 15.0,
                      area_graph: Optional[ZoneGraph] = None) -> ConstraintBlock:
    horizon = T * slot_minutes
    M = horizon
    for t in range(1, T + 1):
        for st in range(1, S + 1):
            if not idx.has("K", (t, st)):
                idx.add("K", (t, st), 0.0, 1.0, binary=True)
    for st in range(1, S + 1):
        if not idx.has("Tm", st):
            idx.add("Tm", st, 0.0, horizon)
    blk = ConstraintBlock()
    for t in range(1, T + 1):
        blk.eq(Expr.total(idx.var("K", (t, st)) for st in range(1, S + 1)), 1.0, "one_step_per_slot")
        for st in range(1, S + 1):
            k = idx.var("K", (t, st))
            blk.le(idx.var("Tm", st) - M * (1 - k), tau(t, slot_minutes), "step_started")
            nxt = idx.var("Tm", st + 1) if st < S else Expr(const=horizon)
            blk.le(tau(t, slot_minutes), nxt + M * (1 - k), "next_step_not_started")
    for st in range(1, S + 1):
        prev = idx.var("Tm", st - 1) if st > 1 else Expr(const=0.0)
        work = Expr()
        if area_graph is not None:
            for e in area_graph.edges:
                fam = "Y" if e.is_tie else "Sop"
                work = work + e.op_time * idx.var(fam, (e.line, st))
        blk.le(prev + work, idx.var("Tm", st), "step_duration")
    return blk


def emit_load_pickup(s: Scenario, idx: VariableIndex, *, steps: int, area_graph: ZoneGraph,
                     nstar) -> ConstraintBlock:
    blk = ConstraintBlock()
    T = s.T
    for bid in [b.id for b in s.buses if b.id in set(nstar)]:
        bus = s.bus(bid)
        k = area_graph.zone_of[bid]
        for t in range(1, T + 1):
            if not idx.has("L", (bid, t)):
                idx.add("L", (bid, t), 0.0, 1.0, binary=True)
        for t in range(1, T + 1):
            lv = idx.var("L", (bid, t))
            for st in range(1, steps + 1):
                x = zone_energization(area_graph, idx, k, st)
                kk = idx.var("K", (t, st))
                blk.le(lv, x + 1 - kk, "pickup_needs_energy")
                if not bus.has_load_breaker:
                    blk.ge(lv, x - 1 + kk, "pickup_without_breaker")
            if t > 1:
                blk.le(idx.var("L", (bid, t - 1)), lv, "no_reinterruption")
    return blk


def _declare_opf_vars(s: Scenario, idx: VariableIndex, buses, lines, gens, nstar, opts: ModelOptions,
                      steps: int, has_area: bool) -> None:
    T = s.T
    vmin2, vmax2 = s.v_min**2, s.v_max**2
    vset = {g.node: g.v_set for g in gens if g.is_substation and g.v_set is not None}
    for t in range(1, T + 1):
        for ln in lines:
            mp = s.v_max * ln.fmax
            idx.add("F", (ln.id, t), 0.0, ln.fmax**2)
            idx.add("p", (ln.id, t), -mp, mp)
            idx.add("q", (ln.id, t), -mp, mp)
        for b in buses:
            if b in vset:
                idx.add("V", (b, t), vset[b] ** 2, vset[b] ** 2)
            elif b in nstar:
                idx.add("V", (b, t), 0.0, vmax2)
            else:
                idx.add("V", (b, t), vmin2, vmax2)
        for g in gens:
            inside = g.node in nstar
            if g.kind == "intermittent":
                f = g.forecast_p[t - 1]
                idx.add("Pinj", (g.id, t), 0.0 if inside else f, f)
                idx.add("Qinj", (g.id, t), 0.0, 0.0)
                continue
            lo_p = 0.0
            hi_p = g.p_max
            lo_q, hi_q = g.q_min, g.q_max
            if g.is_dg and inside and t <= g.startup_slots:
                hi_p, lo_q, hi_q = 0.0, 0.0, 0.0
            idx.add("Pinj", (g.id, t), lo_p, hi_p)
            idx.add("Qinj", (g.id, t), lo_q, hi_q)
            if g.is_dg and math.isfinite(g.initial_energy):
                idx.add("E", (g.id, t), 0.0, g.initial_energy)
            if g.is_dg and inside and opts.restart_clock == "energization" and has_area:
                idx.add("e", (g.id, t), 0.0, 1.0)


def emit_opf_constraints(s: Scenario, idx: VariableIndex, *, buses, lines, gens, steps: int,
                         area_graph: Optional[ZoneGraph], nstar, opts: ModelOptions) -> ConstraintBlock:
    T = s.T
    nstar = set(nstar)
    has_area = area_graph is not None and bool(nstar)
    _declare_opf_vars(s, idx, buses, lines, gens, nstar, opts, steps, has_area)
    blk = ConstraintBlock()
    vmin2, vmax2 = s.v_min**2, s.v_max**2
    Mv = (1.0 + VOLTAGE_MARGIN) * vmax2
    full = opts.voltage_drop == "full"
    zone = area_graph.zone_of if has_area else {}

    def K(t, st):
        return idx.var("K", (t, st))

    for t in range(1, T + 1):
        F = {ln.id: idx.var("F", (ln.id, t)) for ln in lines}
        p = {ln.id: idx.var("p", (ln.id, t)) for ln in lines}
        q = {ln.id: idx.var("q", (ln.id, t)) for ln in lines}
        V = {b: idx.var("V", (b, t)) for b in buses}

        for ln in lines:
            drop = V[ln.frm] - V[ln.to] - 2 * (ln.r * p[ln.id] + ln.x * q[ln.id])
            if full:
                drop = drop + (ln.r**2 + ln.x**2) * F[ln.id]
            if ln.in_area and has_area:
                mp = s.v_max * ln.fmax
                for st in range(1, steps + 1):
                    xl = line_energization(area_graph, idx, ln.id, st)
                    on = xl + 1 - K(t, st)
                    blk.le(F[ln.id], ln.fmax**2 * on, "current_off")
                    blk.le(p[ln.id], mp * on, "flow_off")
                    blk.ge(p[ln.id], -mp * on, "flow_off")
                    blk.le(q[ln.id], mp * on, "flow_off")
                    blk.ge(q[ln.id], -mp * on, "flow_off")
                    slack = Mv * (2 - xl - K(t, st))
                    blk.le(drop, slack, "voltage_drop")
                    blk.ge(drop, -slack, "voltage_drop")
            else:
                blk.eq(drop, 0.0, "voltage_drop")
            blk.cone(F[ln.id] + V[ln.frm], [2 * p[ln.id], 2 * q[ln.id], F[ln.id] - V[ln.frm]], "branch_cone")

        if has_area:
            for b in buses:
                if b not in nstar:
                    continue
                for st in range(1, steps + 1):
                    x = zone_energization(area_graph, idx, zone[b], st)
                    blk.ge(V[b], vmin2 * (x - 1 + K(t, st)), "voltage_on")
                    blk.le(V[b], vmax2 * (x + 1 - K(t, st)), "voltage_off")

        inflow_p = {b: Expr() for b in buses}
        inflow_q = {b: Expr() for b in buses}
        for ln in lines:
            inflow_p[ln.to] = inflow_p[ln.to] + p[ln.id] - ln.r * F[ln.id]
            inflow_q[ln.to] = inflow_q[ln.to] + q[ln.id] - ln.x * F[ln.id]
            inflow_p[ln.frm] = inflow_p[ln.frm] - p[ln.id]
            inflow_q[ln.frm] = inflow_q[ln.frm] - q[ln.id]
        for g in gens:
            inflow_p[g.node] = inflow_p[g.node] + idx.var("Pinj", (g.id, t))
            inflow_q[g.node] = inflow_q[g.node] + idx.var("Qinj", (g.id, t))
        for b in buses:
            bus = s.bus(b)
            served = idx.var("L", (b, t)) if b in nstar and has_area else Expr(const=1.0)
            blk.eq(inflow_p[b], bus.demand_p[t - 1] * served, "active_balance")
            blk.eq(inflow_q[b], bus.demand_q[t - 1] * served, "reactive_balance")

        for g in gens:
            P, Q = idx.var("Pinj", (g.id, t)), idx.var("Qinj", (g.id, t))
            if g.kind != "intermittent":
                blk.cone(g.s_max, [P, Q], "apparent_power")
            if g.is_dg and math.isfinite(g.initial_energy):
                prev = idx.var("E", (g.id, t - 1)) if t > 1 else Expr(const=g.initial_energy)
                blk.eq(idx.var("E", (g.id, t)), prev - s.dt_hours * P, "reservoir")
            if not (has_area and g.node in nstar):
                continue
            k = zone[g.node]
            for st in range(1, steps + 1):
                x = zone_energization(area_graph, idx, k, st)
                on = x + 1 - K(t, st)
                if g.kind == "intermittent":
                    f = g.forecast_p[t - 1]
                    blk.le(P, f * on, "intermittent_off")
                    blk.ge(P, f * (x - 1 + K(t, st)), "intermittent_on")
                    continue
                Mg = g.s_max
                blk.le(P, Mg * on, "injection_off")
                blk.le(Q, Mg * on, "injection_off")
                blk.ge(Q, -Mg * on, "injection_off")
            if not g.is_dg:
                continue
            d = g.startup_slots
            if t <= d or d == 0:
                continue  # t <= d handled by bounds; d == 0 needs no clock
            if opts.restart_clock == "step":
                for st in range(1, steps + 1):
                    x = zone_energization(area_graph, idx, k, st)
                    gate = 2 - x - K(t, st) + K(t - d, st)
                    blk.le(P, g.p_max * gate, "startup_delay")
                    blk.le(Q, g.q_max * gate, "startup_delay")
                    blk.ge(Q, g.q_min * gate, "startup_delay")
            else:
                for tp in range(t - d, t + 1):
                    ev = idx.var("e", (g.id, tp))
                    blk.le(P, g.p_max * ev, "startup_delay")
                    blk.le(Q, g.q_max * ev, "startup_delay")
                    blk.ge(Q, g.q_min * ev, "startup_delay")
        if has_area and opts.restart_clock == "energization":
            for g in gens:
                if g.is_dg and g.node in nstar:
                    for st in range(1, steps + 1):
                        x = zone_energization(area_graph, idx, zone[g.node], st)
                        blk.le(idx.var("e", (g.id, t)), x + 1 - K(t, st), "energization_clock")
    return blk


def assemble(s: Scenario, zg: Optional[ZoneGraph] = None, area: Optional[OffOutageArea] = None,
             options: Optional[ModelOptions] = None, steps: Optional[int] = None) -> MISOCPModel:
    """Build the complete model; a scenario without faults yields a pure OPF."""
    opts = options or ModelOptions()
    zg = zg or partition_zones(s)
    if area is None:
        area = locate_off_outage(s, zg) if s.has_fault else EMPTY_AREA
    S = int(steps if steps is not None else s.max_steps)
    agraph = off_outage_graph(s, zg, area) if not area.is_empty else None
    buses, lines, gens = build_network(s, zg, area, agraph)
    idx = VariableIndex()
    blocks = {}
    nstar = area.nodes
    if agraph is not None:
        declare_topology_vars(agraph, S, idx)
        blocks["radiality"] = emit_radiality_constraints(agraph, S, idx)
        blocks["sectionalizer"] = emit_sectionalizer_constraints(agraph, S, idx)
        blocks["time_mapping"] = emit_time_mapping(S, s.T, idx, slot_minutes=s.slot_minutes, area_graph=agraph)
        blocks["load_pickup"] = emit_load_pickup(s, idx, steps=S, area_graph=agraph, nstar=nstar)
    blocks["opf"] = emit_opf_constraints(s, idx, buses=buses, lines=lines, gens=gens, steps=S,
                                         area_graph=agraph, nstar=nstar, opts=opts)
    tiers = build_objective(s, idx, steps=S, buses=buses, lines=lines, area_graph=agraph, nstar=nstar)
    for b in blocks.values():
        b.check(len(idx))
    m = MISOCPModel(s, opts, idx, blocks, tiers, S, s.T, zg, area, agraph, buses, lines, gens)
    m.meta = binary_breakdown(m)
    return m


# -- binary counts ---------------------------------------------------------

def reconfiguration_instants(T: int, slots_per_instant: int = 2) -> int:
    return -(-T // slots_per_instant)


def count_binaries(model: MISOCPModel, mode: str = "multi_step") -> int:
    """Switching binaries: one per switch and step, or per switch and reconfiguration instant."""
    n_sw = len(model.area_graph.edges) if model.area_graph is not None else 0
    if mode in ("multi_step", "multi"):
        return n_sw * model.steps
    if mode == "dynamic":
        return n_sw * reconfiguration_instants(model.slots)
    raise ValueError(f"unknown mode {mode!r}")


def binary_breakdown(model: MISOCPModel) -> dict:
    n_sw = len(model.area_graph.edges) if model.area_graph is not None else 0
    S, T = model.steps, model.slots
    n_star = len(model.area.nodes)
    has = model.area_graph is not None
    inst = reconfiguration_instants(T)
    return {
        "switches": n_sw, "steps": S, "slots": T, "off_outage_buses": n_star, "instants": inst,
        "switching_multi_step": n_sw * S,
        "time_mapping": T * S if has else 0,
        "load_pickup": n_star * T,
        "total_multi_step": (n_sw * S + T * S + n_star * T) if has else 0,
        "switching_dynamic": n_sw * inst,
        "total_dynamic": n_sw * inst + n_star * T,
    }


# -- conversion to the conic solver's standard form ------------------------

@dataclass
class CompiledProgram:
    program: ConicProgram
    n_model: int
    binaries: np.ndarray

    def model_part(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v[: self.n_model])


def compile_program(model: MISOCPModel, objective: np.ndarray, extra_rows=()) -> CompiledProgram:
    """Linear rows become equalities (slacks for ranges, bounds for singletons); every
    cone gets auxiliary columns so that cones act on plain variables."""
    n = len(model.idx)
    lb = list(model.idx.lb)
    ub = list(model.idx.ub)
    c = list(objective) + []
    rows_i, rows_j, vals, b = [], [], [], []

    def new_col(lo, hi):
        lb.append(lo)
        ub.append(hi)
        c.append(0.0)
        return len(lb) - 1

    def add_eq(terms: dict, rhs: float):
        r = len(b)
        for j, v in terms.items():
            rows_i.append(r)
            rows_j.append(j)
            vals.append(v)
        b.append(rhs)

    for r in [*model.all_rows(), *extra_rows]:
        terms = {j: v for j, v in r.expr.terms.items() if v != 0.0}
        if not terms:
            continue
        if len(terms) == 1:
            (j, a), = terms.items()
            lo, hi = (r.lo / a, r.hi / a) if a > 0 else (r.hi / a, r.lo / a)
            lb[j] = max(lb[j], lo)
            ub[j] = min(ub[j], hi)
            if lb[j] > ub[j]:
                if lb[j] - ub[j] <= 1e-12 * (1 + abs(lb[j])):
                    lb[j] = ub[j]
                else:
                    raise InfeasibleBounds(f"row {r.tag} empties the domain of {model.idx.name(j)}")
            continue
        if r.lo == r.hi:
            add_eq(terms, r.lo)
        else:
            sl = new_col(r.lo, r.hi)
            add_eq({**terms, sl: -1.0}, 0.0)

    cones = []
    used_heads = set()
    for k in model.all_cones():
        members = []
        for pos, e in enumerate([k.head, *k.members]):
            e = e.cleaned()
            plain = len(e.terms) == 1 and e.const == 0.0 and next(iter(e.terms.values())) == 1.0
            j = next(iter(e.terms)) if plain else None
            if plain and not (pos == 0 and j in used_heads) and j not in members:
                members.append(j)
                continue
            if not e.terms:
                members.append(new_col(e.const, e.const))
                continue
            aux = new_col(-math.inf, math.inf)
            add_eq({**e.terms, aux: -1.0}, -e.const)
            members.append(aux)
        used_heads.add(members[0])
        cones.append(tuple(members))

    A = sp.csr_matrix((vals, (rows_i, rows_j)), shape=(len(b), len(lb)))
    prog = ConicProgram(np.asarray(c), A, np.asarray(b, dtype=float), np.asarray(lb), np.asarray(ub), cones)
    return CompiledProgram(prog, n, np.asarray(model.binaries, dtype=int))


class InfeasibleBounds(ValueError):
    pass


def objective_vector(model: MISOCPModel, tier: ObjectiveTier, scale: float = 1.0) -> np.ndarray:
    c = np.zeros(len(model.idx))
    for j, v in tier.coeffs.items():
        c[j] += scale * tier.weight * v / tier.norm
    return c
