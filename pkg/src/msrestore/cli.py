"""`restore` command line: solve, validate, plot, count-binaries."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bnb import SolverConfig
from .model import ModelOptions, assemble, binary_breakdown
from .pipeline import EXIT_INPUT, EXIT_INVALID, EXIT_OK, format_report, solve_scenario
from .plot import render_csv, render_svg
from .scenario import ScenarioError, load_scenario, validate_scenario
from .validate import PlanError, RestorationPlan, validate_plan

log = logging.getLogger("msrestore")


def _setup_logging() -> None:
    level = os.environ.get("RESTORE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _err(msg: str) -> None:
    print(f"restore: {msg}", file=sys.stderr)


def _load(path: str):
    s = load_scenario(path)
    diags = validate_scenario(s)
    if diags:
        raise ScenarioError("; ".join(diags))
    return s


def cmd_solve(a) -> int:
    try:
        s = _load(a.scenario)
    except (OSError, ScenarioError) as exc:
        _err(f"{a.scenario}: {exc}")
        return EXIT_INPUT
    if a.steps is not None and a.steps < 1:
        _err("--steps must be at least 1")
        return EXIT_INPUT
    opts = ModelOptions(voltage_drop=a.voltage_drop, restart_clock=a.restart_clock)
    cfg = SolverConfig(tol=a.tol, gap=a.gap, node_limit=a.node_limit, time_limit=a.time_limit,
                       deterministic=a.deterministic)
    out = solve_scenario(s, steps=a.steps, options=opts, cfg=cfg)
    report = format_report(out, deterministic=a.deterministic)
    if out.plan is not None:
        Path(a.out).write_text(out.plan.to_json())
    if a.report:
        Path(a.report).write_text(report)
    sys.stdout.write(report)
    for m in out.messages:
        log.warning(m)
    return out.exit_code


def format_validation(rep) -> str:
    lines = [f"{'Slot':<6}{'Min V (p.u.)':>14}{'Max V (p.u.)':>14}{'Min margin (p.u.)':>19}{'Mismatch':>11}"]
    for r in rep.per_slot:
        lines.append(f"{r['slot']:<6}{r['min_voltage']:>14.4f}{r['max_voltage']:>14.4f}"
                     f"{r['min_current_margin']:>19.4f}{r['mismatch']:>11.1e}")
    if rep.ok:
        lines.append("no violations")
    else:
        lines.append(f"{len(rep.violations)} violation(s):")
        lines.extend(f"  {v}" for v in rep.violations)
    return "\n".join(lines) + "\n"


def cmd_validate(a) -> int:
    try:
        s = _load(a.scenario)
        plan = RestorationPlan.from_json(Path(a.plan).read_text())
        rep = validate_plan(plan, s)
    except (OSError, ScenarioError, PlanError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    sys.stdout.write(format_validation(rep))
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_plot(a) -> int:
    try:
        plan = RestorationPlan.from_json(Path(a.plan).read_text())
        svg, table = render_svg(plan), render_csv(plan)
    except (OSError, PlanError, KeyError, IndexError, TypeError) as exc:
        _err(f"malformed plan: {exc}")
        return EXIT_INPUT
    Path(a.svg).write_text(svg)
    if a.csv:
        Path(a.csv).write_text(table)
    return EXIT_OK


def cmd_count_binaries(a) -> int:
    try:
        s = _load(a.scenario)
        m = assemble(s, steps=a.steps)
    except (OSError, ScenarioError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    b = binary_breakdown(m)
    mode = "multi_step" if a.mode == "multi" else "dynamic"
    b["mode"] = a.mode
    b["switching"] = b[f"switching_{mode}"]
    b["total"] = b[f"total_{mode}"]
    sys.stdout.write(json.dumps(b, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="restore", description="Multi-step service restoration planner.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute a restoration plan")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--deterministic", action="store_true", help="omit timings so outputs are byte-identical")
    sp.add_argument("--voltage-drop", choices=["full", "as_printed"], default="full")
    sp.add_argument("--restart-clock", choices=["step", "energization"], default="energization")
    sp.add_argument("--out", default="plan.json")
    sp.add_argument("--report")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--gap", type=float, default=1e-6)
    sp.add_argument("--node-limit", type=int, default=20000)
    sp.add_argument("--time-limit", type=float, default=float("inf"))
    sp.set_defaults(func=cmd_solve)

    vp = sub.add_parser("validate", help="replay a plan with an exact power flow")
    vp.add_argument("--plan", required=True)
    vp.add_argument("--scenario", required=True)
    vp.set_defaults(func=cmd_validate)

    pp = sub.add_parser("plot", help="timing sketch of a plan")
    pp.add_argument("--plan", required=True)
    pp.add_argument("--svg", required=True)
    pp.add_argument("--csv")
    pp.set_defaults(func=cmd_plot)

    cp = sub.add_parser("count-binaries", help="binary-variable counts")
    cp.add_argument("--scenario", required=True)
    cp.add_argument("--mode", choices=["multi", "dynamic"], default="multi")
    cp.add_argument("--steps", type=int)
    cp.set_defaults(func=cmd_count_binaries)
    return p


def main(argv=None) -> int:
    _setup_logging()
    a = build_parser().parse_args(argv)
    return a.func(a)


if __name__ == "__main__":
    sys.exit(main())
