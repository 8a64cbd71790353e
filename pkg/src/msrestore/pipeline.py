"""Scenario -> model -> lexicographic search -> plan -> exact replay."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .bnb import LexResult, SolverConfig, lexicographic_solve
from .model import MISOCPModel, ModelOptions, assemble
from .scenario import Scenario
from .validate import RestorationPlan, ValidationReport, extract_plan, validate_plan

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_LIMIT, EXIT_INVALID = 0, 1, 2, 3, 4


@dataclass
class SolveOutcome:
    status: str  # optimal | infeasible | limit | failed | invalid
    exit_code: int
    model: Optional[MISOCPModel] = None
    lex: Optional[LexResult] = None
    plan: Optional[RestorationPlan] = None
    validation: Optional[ValidationReport] = None
    messages: list = field(default_factory=list)


def solve_scenario(s: Scenario, steps: Optional[int] = None, options: Optional[ModelOptions] = None,
                   cfg: Optional[SolverConfig] = None, tier_scale=(1.0, 1.0, 1.0)) -> SolveOutcome:
    cfg = cfg or SolverConfig()
    try:
        model = assemble(s, options=options, steps=steps)
    except ValueError as exc:
        # no tie reaches the off-outage area: nothing can be restored
        return SolveOutcome("infeasible", EXIT_INFEASIBLE, messages=[str(exc)])
    log.info("model: %d variables, %d binaries, %d rows, %d cones", len(model.idx), len(model.binaries),
             len(model.all_rows()), len(model.all_cones()))
    lex = lexicographic_solve(model, cfg, tier_scale=tier_scale)
    if lex.x is None:
        msg = f"stage {lex.failed_stage}: {lex.status}"
        code = EXIT_INFEASIBLE if lex.status == "infeasible" else EXIT_LIMIT
        return SolveOutcome(lex.status, code, model, lex, messages=[msg])
    stats = {
        "status": lex.status,
        "nodes": [st.nodes for st in lex.stages],
        "numerical_failures": [st.failures for st in lex.stages],
        "stage_values": [round(float(v), 9) for v in lex.stage_values],
        "binaries": len(model.binaries),
    }
    if not cfg.deterministic:
        stats["wall_time_s"] = round(lex.wall_time, 3)
    plan = extract_plan(model, lex.x, {"solver": stats})
    report = validate_plan(plan, s)
    lim = report.limits
    plan.metrics.update({
        "min_voltage": round(lim.min_voltage, 6), "min_voltage_at": lim.min_voltage_at,
        "max_voltage": round(lim.max_voltage, 6), "max_voltage_at": lim.max_voltage_at,
        "min_current_margin": round(lim.min_current_margin, 6), "min_current_margin_at": lim.min_margin_at,
    })
    msgs = list(lex.warnings)
    if plan.metrics["soc_gap_flag"]:
        msgs.append(f"relaxation gap {plan.metrics['soc_gap']:.3e} at {plan.metrics['soc_gap_location']} "
                    f"exceeds the tightness limit")
    if not report.ok:
        return SolveOutcome("invalid", EXIT_INVALID, model, lex, plan, report, msgs + report.violations)
    code = EXIT_OK if lex.status == "optimal" else EXIT_LIMIT
    return SolveOutcome(lex.status, code, model, lex, plan, report, msgs)


def format_report(out: SolveOutcome, deterministic: bool = True) -> str:
    """Plain-text summary with one row per step and the headline metrics."""
    lines = []
    s = out.model.scenario if out.model else None
    if s is not None:
        lines.append(f"Scenario: {s.name or '(unnamed)'}")
    lines.append(f"Status: {out.status}")
    plan = out.plan
    if plan is None:
        lines.extend(f"  {m}" for m in out.messages)
        return "\n".join(lines) + "\n"
    lines.append(f"Steps: {len(plan.steps)}")
    lines.append("")
    lines.append(f"{'Step':<6}{'T_s (min)':>10}  Switching actions")
    for st in plan.steps:
        acts = [a for a in st.actions]
        closes = [a["device"] for a in acts if a["action"] == "close" and a["kind"] == "switch"]
        opens = [a["device"] for a in acts if a["action"] == "open" and a["kind"] == "switch"]
        parts = []
        if opens:
            parts.append("Open {" + ",".join(opens) + "}")
        if closes:
            parts.append("Close {" + ",".join(closes) + "}")
        for a in acts:
            if a["kind"] == "load_breaker":
                parts.append(f"close {a['device']} (slot {a['slot']})")
        lines.append(f"{st.step:<6}{st.start_time_min:>10.2f}  {'; '.join(parts) or '-'}")
    m = plan.metrics
    wall = "n/a" if deterministic or out.lex is None else f"{out.lex.wall_time:.2f}"
    lines.append("")
    hdr = ["F^sw", "F^re", "Time (s)", "Min. voltage (p.u.)", "Max. voltage (p.u.)", "Min. current margin (p.u.)"]
    vals = [f"{m['F_sw']:.4f}", f"{m['F_re']:.4f}", wall,
            f"{m['min_voltage']:.4f}" + _at(m.get("min_voltage_at")),
            f"{m['max_voltage']:.4f}" + _at(m.get("max_voltage_at")),
            f"{m['min_current_margin']:.4f}" + _at(m.get("min_current_margin_at"))]
    widths = [max(len(h), len(v)) + 2 for h, v in zip(hdr, vals)]
    lines.append("".join(h.ljust(w) for h, w in zip(hdr, widths)).rstrip())
    lines.append("".join(v.ljust(w) for v, w in zip(vals, widths)).rstrip())
    lines.append("")
    lines.append(f"F^op: {m['F_op']:.6g}   SOC gap: {m['soc_gap']:.3e}" + ("  (FLAGGED)" if m["soc_gap_flag"] else ""))
    st = m.get("solver", {})
    if st:
        lines.append(f"Solver: nodes per stage {st['nodes']}, numerical failures {st['numerical_failures']}, "
                     f"normalized stage optima {st['stage_values']}, binaries {st['binaries']}")
    if out.validation is not None:
        lines.append("Validation: " + ("passed" if out.validation.ok else f"{len(out.validation.violations)} violation(s)"))
    for msg in out.messages:
        lines.append(f"  {msg}")
    return "\n".join(lines) + "\n"


def _at(loc) -> str:
    return f" ({loc[0]}, slot {loc[1]})" if loc else ""
