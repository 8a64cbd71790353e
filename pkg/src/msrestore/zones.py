"""Zone partition, fault isolation and the off-outage zone graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .scenario import Scenario, normally_closed


@dataclass(frozen=True)
class Zone:
    id: int
    buses: tuple[str, ...]
    lines: tuple[str, ...]  # switchless lines lying wholly inside the zone


@dataclass(frozen=True)
class ZoneEdge:
    line: str
    a: int
    b: int
    kind: str  # "tie" | "sectionalizing"
    op_time: float = 0.5

    @property
    def is_tie(self) -> bool:
        return self.kind == "tie"


@dataclass
class ZoneGraph:
    """Zones as vertices, switch-equipped lines as edges.

    Zones listed in ``virtual_sources`` stand for the healthy side of an
    available tie; every other zone is a decision zone.
    """

    zones: tuple[Zone, ...]
    edges: tuple[ZoneEdge, ...]
    virtual_sources: frozenset = frozenset()
    dg_zones: frozenset = frozenset()
    zone_of: dict = field(default_factory=dict)
    membership: dict = field(default_factory=dict)  # switchless line -> zone id
    internal_switches: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.zone_of:
            self.zone_of = {b: z.id for z in self.zones for b in z.buses}
        if not self.membership:
            self.membership = {ln: z.id for z in self.zones for ln in z.lines}

    @property
    def zone_ids(self) -> list[int]:
        return [z.id for z in self.zones]

    @property
    def inner_zones(self) -> list[int]:
        return [z.id for z in self.zones if z.id not in self.virtual_sources]

    def zone(self, zid: int) -> Zone:
        for z in self.zones:
            if z.id == zid:
                return z
        raise KeyError(zid)

    def A(self, line: str, k: int) -> int:
        """1 if switchless ``line`` lies wholly in zone ``k``."""
        return int(self.membership.get(line) == k)

    def edge(self, line: str) -> ZoneEdge:
        for e in self.edges:
            if e.line == line:
                return e
        raise KeyError(line)

    def is_available_tie(self, e: ZoneEdge) -> bool:
        return (e.a in self.virtual_sources) != (e.b in self.virtual_sources)


def partition_zones(s: Scenario) -> ZoneGraph:
    """Connected components after deleting every switch-equipped line."""
    g = nx.Graph()
    order = {b.id: k for k, b in enumerate(s.buses)}
    g.add_nodes_from(order)
    for ln in s.lines:
        if ln.switch is None:
            g.add_edge(ln.from_bus, ln.to_bus)
    comps = sorted((sorted(c, key=order.get) for c in nx.connected_components(g)), key=lambda c: order[c[0]])
    zone_of = {b: k for k, comp in enumerate(comps) for b in comp}
    zone_lines = [[] for _ in comps]
    for ln in s.lines:
        if ln.switch is None:
            zone_lines[zone_of[ln.from_bus]].append(ln.id)
    zones = tuple(Zone(k, tuple(c), tuple(zone_lines[k])) for k, c in enumerate(comps))
    edges, internal = [], []
    for ln in s.lines:
        if ln.switch is None:
            continue
        a, b = zone_of[ln.from_bus], zone_of[ln.to_bus]
        if a == b:
            internal.append(ln.id)
            continue
        edges.append(ZoneEdge(ln.id, a, b, ln.switch.kind, ln.switch.op_time))
    dg = frozenset(zone_of[gen.node] for gen in s.generators if gen.is_dg)
    return ZoneGraph(zones, tuple(edges), frozenset(), dg, zone_of, internal_switches=tuple(internal))


@dataclass(frozen=True)
class OffOutageArea:
    nodes: tuple[str, ...]  # N*
    lines: tuple[str, ...]  # W*, including the available ties
    zones: tuple[int, ...]  # Z*
    available_ties: tuple[str, ...]
    available_feeders: tuple[str, ...]  # substation bus behind each available tie
    faulted_buses: tuple[str, ...] = ()
    removed_lines: tuple[str, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.nodes


EMPTY_AREA = OffOutageArea((), (), (), (), ())


def isolate_fault(s: Scenario, zg: ZoneGraph) -> tuple[set, set]:
    """Buses and lines taken out of service by nearest-switch isolation."""
    dead_zones = {zg.zone_of[b] for b in s.fault_buses}
    removed_lines = set()
    for lid in s.fault_lines:
        ln = s.line(lid)
        if ln.switch is None:
            dead_zones.add(zg.zone_of[ln.from_bus])
        else:
            removed_lines.add(lid)
    dead = {b for k in dead_zones for b in zg.zone(k).buses}
    for ln in s.lines:
        if ln.from_bus in dead or ln.to_bus in dead:
            removed_lines.add(ln.id)
    return dead, removed_lines


def energized_buses(s: Scenario, dead: set, removed_lines: set, closed_extra=()) -> set:
    """Buses reachable from an in-service substation over normally-closed lines."""
    g = nx.Graph()
    g.add_nodes_from(b.id for b in s.buses if b.id not in dead)
    extra = set(closed_extra)
    for ln in s.lines:
        if ln.id in removed_lines:
            continue
        if normally_closed(ln) or ln.id in extra:
            g.add_edge(ln.from_bus, ln.to_bus)
    out = set()
    for gen in s.generators:
        if gen.is_substation and gen.node in g:
            out |= nx.node_connected_component(g, gen.node)
    return out


def locate_off_outage(s: Scenario, zg: ZoneGraph) -> OffOutageArea:
    """De-energized area downstream of the isolated fault."""
    if not s.has_fault:
        raise ValueError("scenario has no faulted elements")
    dead, removed = isolate_fault(s, zg)
    live = energized_buses(s, dead, removed)
    order = [b.id for b in s.buses]
    nstar = [b for b in order if b not in dead and b not in live]
    if not nstar:
        raise ValueError("the fault leaves nothing de-energized; there is nothing to restore")
    nset = set(nstar)
    zstar = sorted({zg.zone_of[b] for b in nstar})

    g = nx.Graph()
    for ln in s.lines:
        if ln.id not in removed and normally_closed(ln):
            g.add_edge(ln.from_bus, ln.to_bus)
    subs = {gen.node for gen in s.generators if gen.is_substation}

    wstar, ties, feeders = [], [], []
    for ln in s.lines:
        if ln.id in removed:
            continue
        inside = (ln.from_bus in nset) + (ln.to_bus in nset)
        if inside == 2:
            wstar.append(ln.id)
        elif inside == 1 and ln.switch is not None and ln.switch.is_tie:
            wstar.append(ln.id)
            ties.append(ln.id)
            healthy = ln.to_bus if ln.from_bus in nset else ln.from_bus
            comp = nx.node_connected_component(g, healthy) if healthy in g else {healthy}
            feeders.append(sorted(comp & subs)[0] if comp & subs else healthy)
    return OffOutageArea(
        nodes=tuple(nstar), lines=tuple(wstar), zones=tuple(zstar), available_ties=tuple(ties),
        available_feeders=tuple(feeders), faulted_buses=tuple(b for b in order if b in dead),
        removed_lines=tuple(ln.id for ln in s.lines if ln.id in removed),
    )


def off_outage_graph(s: Scenario, zg: ZoneGraph, area: OffOutageArea) -> ZoneGraph:
    """Zone graph over Z* plus one virtual source per available tie."""
    zset = set(area.zones)
    zones = [zg.zone(k) for k in area.zones]
    edges = []
    nset = set(area.nodes)
    next_id = max(z.id for z in zg.zones) + 1
    sources = []
    for e in zg.edges:
        if e.a in zset and e.b in zset and e.line in area.lines:
            edges.append(e)
    for lid in area.available_ties:
        ln = s.line(lid)
        healthy, inner = (ln.to_bus, ln.from_bus) if ln.from_bus in nset else (ln.from_bus, ln.to_bus)
        vs = next_id
        next_id += 1
        sources.append(vs)
        zones.append(Zone(vs, (healthy,), ()))
        edges.append(ZoneEdge(lid, vs, zg.zone_of[inner], "tie", ln.switch.op_time))
    zone_of = {b: z.id for z in zones[: len(area.zones)] for b in z.buses}
    membership = {ln: z.id for z in zones[: len(area.zones)] for ln in z.lines}
    return ZoneGraph(tuple(zones), tuple(edges), frozenset(sources), zg.dg_zones & zset, zone_of, membership)
