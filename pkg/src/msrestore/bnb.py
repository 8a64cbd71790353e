"""Best-bound branch-and-bound over the model binaries and the lexicographic outer loop."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conic import solve as conic_solve
from .model import InfeasibleBounds, MISOCPModel, compile_program, objective_vector

log = logging.getLogger(__name__)

FAMILY_ORDER = {"Y": 0, "K": 1, "L": 2}
AUDITED_CONTINUOUS = ("Z", "Sop", "X")


@dataclass
class SolverConfig:
    tol: float = 1e-8
    gap: float = 1e-6
    int_tol: float = 1e-6
    eps: tuple = (1e-6, 1e-6)
    node_limit: int = 20000
    time_limit: float = math.inf
    max_iters: int = 200
    deterministic: bool = True
    keep_log: bool = False


@dataclass(order=True)
class BnBNode:
    bound: float
    seq: int
    fixings: dict = field(compare=False, default_factory=dict)
    depth: int = field(compare=False, default=0)
    parent: int = field(compare=False, default=-1)


@dataclass
class Incumbent:
    x: np.ndarray
    objective: float
    tiers: list = field(default_factory=list)
    gap: float = 0.0
    nodes: int = 0
    wall_time: float = 0.0
    violation: float = 0.0
    warnings: list = field(default_factory=list)


@dataclass
class SearchResult:
    status: str  # optimal | infeasible | limit | failed
    incumbent: Optional[Incumbent]
    nodes: int
    bound: float
    wall_time: float
    log: list = field(default_factory=list)
    tree: list = field(default_factory=list)  # (node seq, parent seq, relaxation value)
    failures: int = 0


def select_branch_variable(x, binaries, family_of, int_tol: float = 1e-6) -> Optional[int]:
    """Most fractional binary with absolute family precedence Y < K < L; ties to the lowest index."""
    best, best_key = None, None
    for j in sorted(binaries):
        frac = abs(x[j] - round(x[j]))
        if frac <= int_tol:
            continue
        key = (FAMILY_ORDER.get(family_of(j), len(FAMILY_ORDER)), abs(x[j] - 0.5), j)
        if best_key is None or key < best_key:
            best, best_key = j, key
    return best


def _family(model: MISOCPModel):
    keys = model.idx.keys
    return lambda j: keys[j][0]


def solve_misocp(model: MISOCPModel, c: np.ndarray, cfg: Optional[SolverConfig] = None, extra_rows=(),
                 seed: Optional[np.ndarray] = None) -> SearchResult:
    """Minimize c'x over the model (plus extra rows) with binaries integral."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    try:
        comp = compile_program(model, c, extra_rows)
    except InfeasibleBounds:
        return SearchResult("infeasible", None, 0, math.inf, 0.0)
    prog = comp.program
    bins = [int(j) for j in comp.binaries]
    fam = _family(model)
    base_lb, base_ub = prog.lb.copy(), prog.ub.copy()
    out_log, tree = [], []

    inc: Optional[Incumbent] = None
    if seed is not None:
        seed = np.asarray(seed, dtype=float)
        inc = Incumbent(seed.copy(), float(c @ seed), violation=model.violation(seed))

    def relax(fix: dict):
        lb, ub = base_lb.copy(), base_ub.copy()
        for j, v in fix.items():
            lb[j] = ub[j] = float(v)
        if np.any(lb > ub):
            return None
        return conic_solve(prog.with_bounds(lb, ub), tol=cfg.tol, max_iters=cfg.max_iters)

    heap = [BnBNode(-math.inf, 0, {}, 0, -1)]
    seq = 1
    nodes = 0
    failures = 0
    status = "optimal"
    global_bound = -math.inf
    while heap:
        if nodes >= cfg.node_limit or time.perf_counter() - t0 > cfg.time_limit:
            status = "limit"
            break
        node = heapq.heappop(heap)
        if inc is not None and node.bound >= inc.objective - cfg.gap:
            continue
        nodes += 1
        res = relax(node.fixings)
        if res is None or res.status == "infeasible":
            _note(out_log, cfg, node, math.nan, "infeasible")
            continue
        if not res.ok:
            failures += 1
            _note(out_log, cfg, node, math.nan, res.status)
            free = [j for j in bins if j not in node.fixings]
            if not free:
                continue
            j = min(free, key=lambda k: (FAMILY_ORDER.get(fam(k), 9), k))
            for v in (0, 1):
                heapq.heappush(heap, BnBNode(node.bound, seq, {**node.fixings, j: v}, node.depth + 1, node.seq))
                seq += 1
            continue
        value = float(res.objective)
        tree.append((node.seq, node.parent, value))
        if inc is not None and value >= inc.objective - cfg.gap:
            _note(out_log, cfg, node, value, "pruned")
            continue
        xm = res.x
        j = select_branch_variable(xm, [k for k in bins if k not in node.fixings], fam, cfg.int_tol)
        if j is None:
            cand = _polish(relax, node.fixings, res, bins, comp.n_model)
            if cand is not None and (inc is None or cand[1] < inc.objective - cfg.gap):
                inc = Incumbent(cand[0], cand[1], violation=model.violation(cand[0]))
                _note(out_log, cfg, node, value, "incumbent")
            else:
                _note(out_log, cfg, node, value, "integral")
            continue
        _note(out_log, cfg, node, value, "branch")
        first = 1 if xm[j] >= 0.5 else 0
        for v in (first, 1 - first):
            heapq.heappush(heap, BnBNode(value, seq, {**node.fixings, j: v}, node.depth + 1, node.seq))
            seq += 1

    if heap:
        global_bound = min(n.bound for n in heap)
    elif inc is not None:
        global_bound = inc.objective
    wall = time.perf_counter() - t0
    if inc is None:
        return SearchResult("infeasible" if status == "optimal" and not failures else
                            ("limit" if status == "limit" else "failed"),
                            None, nodes, global_bound, wall, out_log, tree, failures)
    inc.nodes, inc.wall_time = nodes, wall
    inc.gap = max(0.0, inc.objective - global_bound) if status == "limit" else 0.0
    return SearchResult(status, inc, nodes, global_bound, wall, out_log, tree, failures)


def _note(out_log, cfg, node, value, what):
    line = f"node {node.seq} depth {node.depth} bound {value:.9g} {what}"
    log.debug(line)
    if cfg.keep_log:
        out_log.append(line)


def _polish(relax, fixings, res, bins, n_model):
    """Re-solve with every binary fixed to its rounded value."""
    fix = {j: int(round(res.x[j])) for j in bins}
    if fix != fixings:
        res = relax(fix)
        if res is None or not res.ok:
            return None
    x = np.asarray(res.x[:n_model], dtype=float).copy()
    for j, v in fix.items():
        x[j] = float(v)
    return x, float(res.objective)


def integrality_warnings(model: MISOCPModel, x, tol: float = 1e-6) -> list[str]:
    out = []
    for j, (fam, key) in enumerate(model.idx.keys):
        if fam in AUDITED_CONTINUOUS and tol < x[j] < 1 - tol:
            out.append(f"{model.idx.name(j)} = {x[j]:.6g} is not integral")
        if model.idx.is_binary[j] and abs(x[j] - round(x[j])) > tol:
            out.append(f"binary {model.idx.name(j)} = {x[j]:.6g}")
    return out


@dataclass
class LexResult:
    status: str
    x: Optional[np.ndarray]
    tiers: list  # normalized tier values of the final point
    stage_values: list  # optimum of each stage as solved
    stages: list  # SearchResult per stage
    failed_stage: Optional[int] = None
    warnings: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def nodes(self) -> int:
        return sum(st.nodes for st in self.stages)


def lexicographic_solve(model: MISOCPModel, cfg: Optional[SolverConfig] = None, eps=None,
                        tier_scale=(1.0, 1.0, 1.0)) -> LexResult:
    """Tier 1, then tier 2 with tier 1 frozen, then tier 3 with tiers 1-2 frozen."""
    cfg = cfg or SolverConfig()
    eps = tuple(eps if eps is not None else cfg.eps)
    t0 = time.perf_counter()
    rows, stages, values = [], [], []
    seed = None
    status = "optimal"
    for k, tier in enumerate(model.tiers):
        c = objective_vector(model, tier, tier_scale[k])
        res = solve_misocp(model, c, cfg, rows, seed)
        stages.append(res)
        if res.incumbent is None:
            return LexResult(res.status, None, [], values, stages, failed_stage=k + 1,
                             wall_time=time.perf_counter() - t0)
        if res.status != "optimal":
            status = res.status
        x = res.incumbent.x
        values.append(tier.value(x))
        if k < len(eps):
            rows.append(tier.row(values[-1] + eps[k], f"freeze_tier{k + 1}"))
        seed = x
    x = stages[-1].incumbent.x
    tiers = [t.value(x) for t in model.tiers]
    warns = integrality_warnings(model, x, cfg.int_tol)
    return LexResult(status, x, tiers, values, stages, warnings=warns, wall_time=time.perf_counter() - t0)
