"""Single-commodity-flow radiality rows over the zone graph, plus a brute-force oracle.

Each decision zone consumes one unit of auxiliary flow that must originate at
a virtual source; with at most one parent per zone this admits exactly the
configurations whose closed switches form one tree per available tie.
"""

from __future__ import annotations

import itertools

from .linexpr import ConstraintBlock, Expr, VariableIndex
from .zones import ZoneEdge, ZoneGraph

MAX_ENUM_EDGES = 20


def flow_big_m(zg: ZoneGraph) -> float:
    return float(len(zg.inner_zones) + 1)


def declare_topology_vars(zg: ZoneGraph, steps: int, idx: VariableIndex) -> None:
    """Y, Z, Psi, zone X and sectionalizer S_op columns; idempotent."""
    for s in range(1, steps + 1):
        for e in zg.edges:
            if idx.has("Y", (e.line, s)):
                continue
            idx.add("Y", (e.line, s), 0.0, 1.0, binary=True)
            for d in ("ab", "ba"):
                idx.add("Z", (e.line, d, s), 0.0, 1.0)
                idx.add("Psi", (e.line, d, s), 0.0, flow_big_m(zg))
            if not e.is_tie:
                idx.add("Sop", (e.line, s), 0.0, 1.0)
        for k in zg.inner_zones:
            if not idx.has("X", (k, s)):
                idx.add("X", (k, s), 0.0, 1.0)


def zone_energization(zg: ZoneGraph, idx: VariableIndex, k: int, s: int) -> Expr:
    """X_{k,s}; virtual sources are permanently energized."""
    if k in zg.virtual_sources:
        return Expr(const=1.0)
    return idx.var("X", (k, s))


def line_energization(zg: ZoneGraph, idx: VariableIndex, line: str, s: int) -> Expr:
    """X_{ij,s}: zone state for switchless lines, Y for switched lines."""
    if line in zg.membership:
        return Expr.total(zone_energization(zg, idx, k, s) for k in zg.inner_zones if zg.A(line, k))
    for e in zg.edges:
        if e.line == line:
            return idx.var("Y", (line, s))
    return Expr(const=1.0)


def _into(e: ZoneEdge, k: int) -> str:
    return "ab" if e.b == k else "ba"


def emit_radiality_constraints(zg: ZoneGraph, steps: int, idx: VariableIndex) -> ConstraintBlock:
    if zg.inner_zones and not any(zg.is_available_tie(e) for e in zg.edges):
        raise ValueError("no available tie-switch reaches the off-outage area")
    if zg.inner_zones and not zg.virtual_sources:
        raise ValueError("zone graph has no virtual source")
    declare_topology_vars(zg, steps, idx)
    blk = ConstraintBlock()
    M = flow_big_m(zg)
    inner = zg.inner_zones
    for s in range(1, steps + 1):
        for e in zg.edges:
            y = idx.var("Y", (e.line, s))
            zab, zba = idx.var("Z", (e.line, "ab", s)), idx.var("Z", (e.line, "ba", s))
            pab, pba = idx.var("Psi", (e.line, "ab", s)), idx.var("Psi", (e.line, "ba", s))
            if zg.is_available_tie(e):
                out_dir = "ab" if e.a in zg.virtual_sources else "ba"
                zout, zin = (zab, zba) if out_dir == "ab" else (zba, zab)
                blk.eq(zout, y, "tie_orientation")
                blk.eq(zin, 0.0, "tie_orientation")
            else:
                # for available ties the two orientation rows already fix the sum
                blk.eq(zab + zba, y, "orientation_sum")
            blk.le(y, M * (pab + pba), "closed_carries_flow")
            blk.le(pab, M * zab, "flow_orientation")
            blk.le(pba, M * zba, "flow_orientation")
        for k in inner:
            parents = Expr.total(idx.var("Z", (e.line, _into(e, k), s)) for e in zg.edges if k in (e.a, e.b))
            blk.eq(idx.var("X", (k, s)), parents, "single_parent")
            inflow = Expr.total(idx.var("Psi", (e.line, _into(e, k), s)) for e in zg.edges if k in (e.a, e.b))
            outflow = Expr.total(idx.var("Psi", (e.line, "ba" if e.b == k else "ab", s))
                                 for e in zg.edges if k in (e.a, e.b))
            blk.eq(inflow, outflow + idx.var("X", (k, s)), "unit_consumption")
        tie_flow = Expr.total(
            idx.var("Psi", (e.line, "ab" if e.a in zg.virtual_sources else "ba", s))
            for e in zg.edges if zg.is_available_tie(e)
        )
        blk.eq(tie_flow, Expr.total(idx.var("X", (k, s)) for k in inner), "total_flow")
    return blk


def emit_sectionalizer_constraints(zg: ZoneGraph, steps: int, idx: VariableIndex) -> ConstraintBlock:
    declare_topology_vars(zg, steps, idx)
    blk = ConstraintBlock()
    for s in range(1, steps + 1):
        for e in zg.edges:
            if e.is_tie:
                continue
            sop, y = idx.var("Sop", (e.line, s)), idx.var("Y", (e.line, s))
            for k in (e.a, e.b):
                blk.ge(sop, (1 - y) + zone_energization(zg, idx, k, s) - 1, "sectionalizer")
    return blk


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


_ROOT = "__root__"


def is_radial_no_island(zg: ZoneGraph, closed_edges, energized_zones) -> bool:
    """Closed switches form a single tree hanging off the (merged) virtual sources.

    Equivalently: the energized part is a forest, each tree is fed by exactly
    one available tie, no energized component lacks a source (no DG islands),
    and no closed switch sits idle between de-energized zones.
    """
    by_line = {e.line: e for e in zg.edges}
    closed = set(closed_edges)
    if not closed <= set(by_line):
        raise ValueError("closed_edges must be edges of the zone graph")
    uf = _UnionFind()

    def node(k):
        return _ROOT if k in zg.virtual_sources else k

    uf.find(_ROOT)
    for line in closed:
        e = by_line[line]
        if not uf.union(node(e.a), node(e.b)):
            return False
    root = uf.find(_ROOT)
    for line in closed:
        if uf.find(node(by_line[line].a)) != root:
            return False
    reach = {k for k in zg.inner_zones if uf.find(k) == root}
    return reach == set(energized_zones)


def enumerate_feasible_configs(zg: ZoneGraph) -> set:
    """All (closed_edges, energized_zones) pairs accepted by is_radial_no_island."""
    edges = [e.line for e in zg.edges]
    if len(edges) > MAX_ENUM_EDGES:
        raise ValueError(f"{len(edges)} edges exceed the enumeration guard of {MAX_ENUM_EDGES}")
    by_line = {e.line: e for e in zg.edges}
    out = set()
    for mask in itertools.product((0, 1), repeat=len(edges)):
        closed = [ln for ln, m in zip(edges, mask) if m]
        uf = _UnionFind()
        uf.find(_ROOT)
        ok = True
        for ln in closed:
            e = by_line[ln]
            a = _ROOT if e.a in zg.virtual_sources else e.a
            b = _ROOT if e.b in zg.virtual_sources else e.b
            if not uf.union(a, b):
                ok = False
                break
        if not ok:
            continue
        root = uf.find(_ROOT)
        energized = frozenset(k for k in zg.inner_zones if uf.find(k) == root)
        if is_radial_no_island(zg, closed, energized):
            out.add((frozenset(closed), energized))
    return out
