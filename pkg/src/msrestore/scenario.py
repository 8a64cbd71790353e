"""Scenario types, JSON ingestion and static diagnostics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import jsonschema
import networkx as nx

DEFAULT_SLOT_MINUTES = 15.0
REMOTE_OP_TIME = 0.5
MANUAL_OP_TIME = 30.0
CRITICAL_IMPORTANCE = 100.0


class ScenarioError(ValueError):
    """Raised for unreadable or inconsistent scenario documents.

    ``location`` names the offending element, e.g. ``lines[2] (id 'L3')``.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class SwitchSpec:
    kind: str  # "tie" | "sectionalizing"
    op_time: float
    remote: bool

    @property
    def is_tie(self) -> bool:
        return self.kind == "tie"


@dataclass(frozen=True)
class Bus:
    id: str
    demand_p: tuple[float, ...]
    demand_q: tuple[float, ...]
    importance: float = 1.0
    has_load_breaker: bool = True
    is_critical: bool = False


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    r: float
    x: float
    ampacity: float
    switch: Optional[SwitchSpec] = None

    @property
    def ends(self) -> tuple[str, str]:
        return self.from_bus, self.to_bus


@dataclass(frozen=True)
class Generator:
    id: str
    node: str
    kind: str  # "substation" | "dispatchable_dg" | "intermittent"
    p_max: float
    q_min: float
    q_max: float
    s_max: float
    startup_slots: int = 0
    initial_energy: float = math.inf
    forecast_p: Optional[tuple[float, ...]] = None
    v_set: Optional[float] = None

    @property
    def is_substation(self) -> bool:
        return self.kind == "substation"

    @property
    def is_dg(self) -> bool:
        return self.kind == "dispatchable_dg"


@dataclass(frozen=True)
class Scenario:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    fault_buses: tuple[str, ...] = ()
    fault_lines: tuple[str, ...] = ()
    horizon_slots: int = 1
    slot_minutes: float = DEFAULT_SLOT_MINUTES
    v_min: float = 0.9
    v_max: float = 1.1
    weights: dict = field(default_factory=lambda: {"w_re": 1.0, "w_sw": 1.0, "w_op": 1.0})
    max_steps: int = 1
    big_m_policy: str = "structural"
    name: str = ""

    @property
    def T(self) -> int:
        return self.horizon_slots

    @property
    def dt_hours(self) -> float:
        return self.slot_minutes / 60.0

    @property
    def horizon_minutes(self) -> float:
        return self.horizon_slots * self.slot_minutes

    @property
    def has_fault(self) -> bool:
        return bool(self.fault_buses or self.fault_lines)

    def bus(self, bus_id: str) -> Bus:
        return self._bus_map()[bus_id]

    def line(self, line_id: str) -> Line:
        return self._line_map()[line_id]

    def _bus_map(self) -> dict:
        return {b.id: b for b in self.buses}

    def _line_map(self) -> dict:
        return {ln.id: ln for ln in self.lines}

    def generators_at(self, bus_id: str) -> list[Generator]:
        return [g for g in self.generators if g.node == bus_id]

    def with_steps(self, steps: int) -> "Scenario":
        return replace(self, max_steps=int(steps))

    def with_weights(self, **w) -> "Scenario":
        return replace(self, weights={**self.weights, **w})


def load_schema() -> dict:
    text = resources.files("msrestore").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


def _locate(doc: dict, path) -> str:
    parts, node = [], doc
    for p in path:
        if isinstance(p, int):
            parts[-1] = f"{parts[-1]}[{p}]" if parts else f"[{p}]"
            try:
                node = node[p]
            except (IndexError, KeyError, TypeError):
                node = None
            if isinstance(node, dict) and "id" in node:
                parts[-1] += f" (id {str(node['id'])!r})"
            elif isinstance(node, dict) and "from" in node and "to" in node:
                parts[-1] += f" (id '{node['from']}-{node['to']}')"
        else:
            parts.append(str(p))
            node = node.get(p) if isinstance(node, dict) else None
    return ".".join(parts) or "<document>"


def _profile(value, T: int, where: str) -> tuple[float, ...]:
    if value is None:
        return (0.0,) * T
    if isinstance(value, (int, float)):
        return (float(value),) * T
    if len(value) == 1:
        return (float(value[0]),) * T
    if len(value) != T:
        raise ScenarioError(f"profile has {len(value)} entries, horizon has {T} slots", where)
    return tuple(float(v) for v in value)


def parse_scenario(text: str) -> Scenario:
    """Parse and check a scenario document; profiles are expanded to T entries."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, _locate(doc, err.absolute_path))
    return _build(doc)


def _build(doc: dict) -> Scenario:
    T = int(doc["horizon"]["slots"])
    buses = []
    for k, b in enumerate(doc["buses"]):
        where = f"buses[{k}] (id {str(b['id'])!r})"
        crit = bool(b.get("critical", False))
        imp = float(b.get("importance", CRITICAL_IMPORTANCE if crit else 1.0))
        buses.append(Bus(
            id=str(b["id"]),
            demand_p=_profile(b.get("demand_p"), T, where + ".demand_p"),
            demand_q=_profile(b.get("demand_q"), T, where + ".demand_q"),
            importance=imp,
            has_load_breaker=bool(b.get("load_breaker", True)),
            is_critical=crit,
        ))
    lines = []
    for k, ln in enumerate(doc["lines"]):
        lid = str(ln.get("id", f"{ln['from']}-{ln['to']}"))
        sw = None
        if "switch" in ln:
            s = ln["switch"]
            remote = bool(s.get("remote", True))
            sw = SwitchSpec(s["kind"], float(s.get("op_time", REMOTE_OP_TIME if remote else MANUAL_OP_TIME)), remote)
        lines.append(Line(lid, str(ln["from"]), str(ln["to"]), float(ln["r"]), float(ln["x"]),
                          float(ln["ampacity"]), sw))
    gens = []
    for k, g in enumerate(doc["generators"]):
        where = f"generators[{k}] (id {str(g['id'])!r})"
        kind = g["kind"]
        if "p_max" not in g and "s_max" not in g and kind != "intermittent":
            raise ScenarioError("needs p_max or s_max", where)
        forecast = None
        if kind == "intermittent":
            if "forecast_p" not in g:
                raise ScenarioError("intermittent unit needs forecast_p", where)
            forecast = _profile(g["forecast_p"], T, where + ".forecast_p")
        if kind == "dispatchable_dg" and "initial_energy" not in g:
            raise ScenarioError("dispatchable DG needs initial_energy", where)
        p_max = float(g.get("p_max", g.get("s_max", max(forecast) if forecast else 0.0)))
        s_max = float(g.get("s_max", p_max))
        q_lim = 0.0 if kind == "intermittent" else s_max
        gens.append(Generator(
            id=str(g["id"]), node=str(g["node"]), kind=kind, p_max=p_max,
            q_min=0.0 if kind == "intermittent" else float(g.get("q_min", -q_lim)),
            q_max=0.0 if kind == "intermittent" else float(g.get("q_max", q_lim)),
            s_max=s_max, startup_slots=int(g.get("startup_slots", 0)),
            initial_energy=float(g.get("initial_energy", math.inf)),
            forecast_p=forecast, v_set=float(g["v_set"]) if "v_set" in g else None,
        ))
    fault = doc.get("fault", {})
    w = {"w_re": 1.0, "w_sw": 1.0, "w_op": 1.0, **doc.get("weights", {})}
    s = Scenario(
        buses=tuple(buses), lines=tuple(lines), generators=tuple(gens),
        fault_buses=tuple(str(b) for b in fault.get("buses", [])),
        fault_lines=tuple(str(x) for x in fault.get("lines", [])),
        horizon_slots=T,
        slot_minutes=float(doc["horizon"].get("slot_minutes", DEFAULT_SLOT_MINUTES)),
        v_min=float(doc["limits"]["v_min"]), v_max=float(doc["limits"]["v_max"]),
        weights={k: float(v) for k, v in w.items()},
        max_steps=int(doc["max_steps"]), big_m_policy=doc.get("big_m_policy", "structural"),
        name=str(doc.get("name", "")),
    )
    check_invariants(s)
    return s


def check_invariants(s: Scenario) -> None:
    """Raise ScenarioError naming the first element that breaks a type invariant."""
    T = s.T
    ids = set()
    for k, b in enumerate(s.buses):
        where = f"buses[{k}] (id {b.id!r})"
        if b.id in ids:
            raise ScenarioError("duplicate bus id", where)
        ids.add(b.id)
        if len(b.demand_p) != T or len(b.demand_q) != T:
            raise ScenarioError(f"demand profiles must have {T} entries", where)
        if min(b.demand_p) < 0:
            raise ScenarioError("demand_p must be non-negative", where)
        if b.importance <= 0:
            raise ScenarioError("importance must be positive", where)
    line_ids = set()
    for k, ln in enumerate(s.lines):
        where = f"lines[{k}] (id {ln.id!r})"
        if ln.id in line_ids:
            raise ScenarioError("duplicate line id", where)
        line_ids.add(ln.id)
        if ln.from_bus == ln.to_bus:
            raise ScenarioError("line endpoints must differ", where)
        for end in ln.ends:
            if end not in ids:
                raise ScenarioError(f"unknown bus {end!r}", where)
        if ln.r < 0 or ln.x < 0 or (ln.r == 0 and ln.x == 0):
            raise ScenarioError("r and x must be non-negative and not both zero", where)
        if ln.ampacity <= 0:
            raise ScenarioError("ampacity must be positive", where)
        if ln.switch is not None and ln.switch.op_time <= 0:
            raise ScenarioError("op_time must be positive", where)
    gen_ids = set()
    for k, g in enumerate(s.generators):
        where = f"generators[{k}] (id {g.id!r})"
        if g.id in gen_ids:
            raise ScenarioError("duplicate generator id", where)
        gen_ids.add(g.id)
        if g.node not in ids:
            raise ScenarioError(f"unknown bus {g.node!r}", where)
        if not (g.q_min <= 0 <= g.q_max):
            raise ScenarioError("need q_min <= 0 <= q_max", where)
        if g.p_max > g.s_max + 1e-12:
            raise ScenarioError("p_max exceeds s_max", where)
        if g.startup_slots < 0 or g.initial_energy < 0:
            raise ScenarioError("startup_slots and initial_energy must be non-negative", where)
        if g.forecast_p is not None and len(g.forecast_p) != T:
            raise ScenarioError(f"forecast must have {T} entries", where)
    for b in s.fault_buses:
        if b not in ids:
            raise ScenarioError(f"unknown faulted bus {b!r}", "fault.buses")
    for ln in s.fault_lines:
        if ln not in line_ids:
            raise ScenarioError(f"unknown faulted line {ln!r}", "fault.lines")
    if not s.v_min < s.v_max:
        raise ScenarioError("v_min must be below v_max", "limits")
    if s.max_steps < 1:
        raise ScenarioError("max_steps must be at least 1", "max_steps")


def normally_closed(ln: Line) -> bool:
    return ln.switch is None or not ln.switch.is_tie


def validate_scenario(s: Scenario) -> list[str]:
    """Static diagnostics; an empty list means the scenario is usable."""
    out = []
    try:
        check_invariants(s)
    except ScenarioError as exc:
        out.append(f"invariant violated: {exc}")
        return out

    g = nx.MultiGraph()
    g.add_nodes_from(b.id for b in s.buses)
    for ln in s.lines:
        if normally_closed(ln):
            g.add_edge(ln.from_bus, ln.to_bus, key=ln.id)
    subs = {gen.node for gen in s.generators if gen.is_substation}
    if not subs:
        out.append("no substation in the network")
    for comp in nx.connected_components(g):
        sub_g = g.subgraph(comp)
        if sub_g.number_of_edges() != len(comp) - 1:
            out.append(f"non-radial pre-fault topology in the feeder containing {sorted(comp)[0]!r}")
        n_sub = len(comp & subs)
        if n_sub == 0:
            out.append(f"buses {sorted(comp)} are not connected to any substation before the fault")
        elif n_sub > 1:
            out.append(f"feeder containing {sorted(comp)[0]!r} is fed by {n_sub} substations")

    if s.has_fault:
        from .zones import locate_off_outage, partition_zones

        try:
            area = locate_off_outage(s, partition_zones(s))
            n_dg = sum(1 for gen in s.generators if gen.is_dg and gen.node in area.nodes)
            if s.max_steps > n_dg + 1:
                out.append(f"max_steps={s.max_steps} exceeds the step bound of {n_dg + 1} "
                           f"(dispatchable DGs in the off-outage area plus one)")
        except ValueError as exc:
            out.append(str(exc))
    elif s.max_steps > 1:
        n_dg = sum(1 for gen in s.generators if gen.is_dg)
        if s.max_steps > n_dg + 1:
            out.append(f"max_steps={s.max_steps} exceeds the step bound of {n_dg + 1} "
                       f"(dispatchable DGs plus one)")
    return out


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
