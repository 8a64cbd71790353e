"""Gantt-style timing sketch of a restoration plan, as SVG and CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .validate import ACTIVE, RestorationPlan

WIDTH, LEFT, RIGHT, TOP, ROW, AXIS = 760, 90, 30, 30, 34, 40
CSV_FIELDS = ["event", "step", "label", "slot", "time_min", "end_min"]


@dataclass(frozen=True)
class TimingEvent:
    event: str  # step | load_pickup | dg_energized | dg_start
    step: int
    label: str
    slot: int
    time_min: float
    end_min: float


def _slot_start(t: int, dt: float) -> float:
    return (t - 1) * dt


def timing_events(plan: RestorationPlan) -> list[TimingEvent]:
    """Step bars ordered by completion time, then pickup and DG markers in time order."""
    dt = plan.slot_minutes
    steps = sorted(plan.steps, key=lambda st: (st.start_time_min, st.step))
    out = []
    for st in steps:
        end = st.slots[-1] * dt if st.slots else st.start_time_min
        names = [a["device"] for a in st.actions if a["kind"] == "switch"]
        label = f"step {st.step}: " + (", ".join(f"{a['action']} {a['device']}" for a in st.actions
                                                if a["kind"] == "switch") if names else "no switching")
        out.append(TimingEvent("step", st.step, label, st.slots[0] if st.slots else 0, st.start_time_min, end))
    if not steps:
        return out
    markers = []
    T = len(plan.slot_step)
    for b, sched in sorted(plan.load_schedule.items()):
        t = next((k + 1 for k, v in enumerate(sched) if v), None)
        if t is not None:
            markers.append(TimingEvent("load_pickup", plan.slot_step[t - 1], f"load {b}", t,
                                       _slot_start(t, dt), _slot_start(t, dt)))
    by_step = {st.step: st for st in plan.steps}
    for gid, d in sorted(plan.dg_dispatch.items()):
        if d.get("kind") == "substation":
            continue
        node = d["node"]
        t_en = next((t for t in range(1, T + 1) if node in by_step[plan.slot_step[t - 1]].energized_buses), None)
        if t_en is not None:
            markers.append(TimingEvent("dg_energized", plan.slot_step[t_en - 1], f"{gid} node {node} energized",
                                       t_en, _slot_start(t_en, dt), _slot_start(t_en, dt)))
        t_on = next((t for t in range(1, T + 1) if d["p"][t - 1] > ACTIVE), None)
        if t_on is not None:
            markers.append(TimingEvent("dg_start", plan.slot_step[t_on - 1], f"{gid} starts injecting", t_on,
                                       _slot_start(t_on, dt), _slot_start(t_on, dt)))
    markers.sort(key=lambda e: (e.time_min, e.event, e.label))
    return out + markers


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_csv(plan: RestorationPlan) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for e in timing_events(plan):
        w.writerow([e.event, e.step, e.label, e.slot, _f(e.time_min), _f(e.end_min)])
    return buf.getvalue()


def render_svg(plan: RestorationPlan) -> str:
    events = timing_events(plan)
    bars = [e for e in events if e.event == "step"]
    marks = [e for e in events if e.event != "step"]
    T = len(plan.slot_step)
    horizon = max(T * plan.slot_minutes, max((e.end_min for e in events), default=0.0), 1.0)
    height = TOP + ROW * max(len(bars), 1) + AXIS
    span = WIDTH - LEFT - RIGHT

    def X(t: float) -> str:
        return _f(LEFT + span * t / horizon)

    row_of = {e.step: i for i, e in enumerate(bars)}
    y_axis = TOP + ROW * max(len(bars), 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">',
        f'<line x1="{LEFT}" y1="{y_axis}" x2="{WIDTH - RIGHT}" y2="{y_axis}" stroke="black"/>',
    ]
    ticks = max(T, 1)
    stride = max(1, ticks // 12)
    for k in range(0, ticks + 1, stride):
        t = k * plan.slot_minutes if T else horizon * k
        out.append(f'<line x1="{X(t)}" y1="{y_axis}" x2="{X(t)}" y2="{y_axis + 4}" stroke="black"/>')
        out.append(f'<text x="{X(t)}" y="{y_axis + 16}" text-anchor="middle">{_f(t)}</text>')
    out.append(f'<text x="{_f(LEFT + span / 2)}" y="{y_axis + 32}" text-anchor="middle">time (min)</text>')
    for i, e in enumerate(bars):
        y = TOP + ROW * i
        x0, x1 = LEFT + span * e.time_min / horizon, LEFT + span * e.end_min / horizon
        out.append(f'<text x="{LEFT - 8}" y="{y + ROW / 2 + 4:.2f}" text-anchor="end">step {e.step}</text>')
        out.append(f'<rect x="{_f(x0)}" y="{y + 6}" width="{_f(max(x1 - x0, 1.0))}" height="{ROW - 12}" '
                   f'fill="#9ecae1" stroke="#3182bd"><title>{escape(e.label)}</title></rect>')
    styles = {"load_pickup": ("#31a354", "L"), "dg_energized": ("#756bb1", "E"), "dg_start": ("#e6550d", "G")}
    for e in marks:
        color, glyph = styles[e.event]
        y = TOP + ROW * row_of.get(e.step, 0)
        out.append(f'<circle cx="{X(e.time_min)}" cy="{y + ROW / 2:.2f}" r="4" fill="{color}">'
                   f'<title>{escape(e.label)}</title></circle>')
        out.append(f'<text x="{X(e.time_min)}" y="{y + 4}" text-anchor="middle" fill="{color}">{glyph}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
