import json
import subprocess
import sys

import pytest

from conftest import fixture_path, solved
from msrestore.cli import main
from msrestore.plot import render_csv, render_svg, timing_events
from msrestore.validate import RestorationPlan, StepPlan


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dg_plan_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("two_feeder") / "plan.json"
    assert run("solve", "--scenario", fixture_path("two_feeder_dg"), "--steps", 2, "--deterministic",
               "--out", out) == 0
    return out


def test_solve_writes_plan_and_report(dg_plan_file, capsys):
    plan = json.loads(dg_plan_file.read_text())
    assert [a["device"] for a in plan["steps"][0]["actions"]] == ["T3"]
    assert [a["device"] for a in plan["steps"][1]["actions"]] == ["T5", "load breaker 6"]


def test_report_columns(tmp_path, capsys):
    rc = run("solve", "--scenario", fixture_path("two_feeder_dg"), "--steps", 2, "--deterministic",
             "--out", tmp_path / "p.json", "--report", tmp_path / "r.txt")
    assert rc == 0
    text = (tmp_path / "r.txt").read_text()
    for col in ("F^sw", "F^re", "Time (s)", "Min. voltage (p.u.)", "Max. voltage (p.u.)",
                "Min. current margin (p.u.)", "Close {T3}", "Close {T5}"):
        assert col in text
    assert capsys.readouterr().out == text


def test_no_fault_solve(tmp_path):
    out = tmp_path / "p.json"
    assert run("solve", "--scenario", fixture_path("no_fault"), "--out", out) == 0
    plan = json.loads(out.read_text())
    assert all(st["actions"] == [] for st in plan["steps"]) and plan["metrics"]["F_re"] == 0.0


def test_infeasible_exit_code(tmp_path, capsys):
    assert run("solve", "--scenario", fixture_path("overloaded_feeder"), "--out", tmp_path / "p.json") == 2
    assert not (tmp_path / "p.json").exists()


def test_limit_exit_code(tmp_path):
    rc = run("solve", "--scenario", fixture_path("two_feeder_dg"), "--steps", 2, "--node-limit", 1,
             "--out", tmp_path / "p.json")
    assert rc == 3


def test_missing_and_malformed_inputs(tmp_path, capsys):
    assert run("solve", "--scenario", tmp_path / "missing.json", "--out", tmp_path / "p.json") == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"buses": ')
    assert run("solve", "--scenario", bad, "--out", tmp_path / "p.json") == 1
    assert "line" in capsys.readouterr().err
    assert run("validate", "--plan", bad, "--scenario", fixture_path("two_feeder_dg")) == 1
    assert run("plot", "--plan", bad, "--svg", tmp_path / "x.svg") == 1


def test_validate_round_trip(dg_plan_file, capsys):
    assert run("validate", "--plan", dg_plan_file, "--scenario", fixture_path("two_feeder_dg")) == 0
    out = capsys.readouterr().out
    assert "no violations" in out and "Min margin" in out


def test_validate_loop(tmp_path, capsys):
    out = solved("sectionalizer_single_step").plan.to_dict()
    out["steps"][0]["switch_states"]["SW2"] = "closed"
    p = tmp_path / "loop.json"
    p.write_text(json.dumps(out))
    assert run("validate", "--plan", p, "--scenario", fixture_path("sectionalizer_single_step")) == 4
    assert "non-radial configuration at step 1" in capsys.readouterr().out


def test_validate_early_dg(tmp_path, capsys):
    out = solved("startup_delay").plan.to_dict()
    out["dg_dispatch"]["DG1"]["p"][0] = 0.05
    p = tmp_path / "early.json"
    p.write_text(json.dumps(out))
    assert run("validate", "--plan", p, "--scenario", fixture_path("startup_delay")) == 4
    assert "start-up audit" in capsys.readouterr().out


def test_count_binaries(capsys):
    assert run("count-binaries", "--scenario", fixture_path("startup_delay"), "--mode", "dynamic") == 0
    d = json.loads(capsys.readouterr().out)
    assert d["switching"] == d["switches"] * d["instants"] == 2


def test_plot_two_feeder(dg_plan_file, tmp_path):
    svg, csv = tmp_path / "t.svg", tmp_path / "t.csv"
    assert run("plot", "--plan", dg_plan_file, "--svg", svg, "--csv", csv) == 0
    assert svg.read_text().count("<rect") == 2
    rows = [r.split(",") for r in csv.read_text().splitlines()[1:]]
    energized = next(r for r in rows if r[0] == "dg_energized")
    start = next(r for r in rows if r[0] == "dg_start")
    # DG1 has a one-slot start-up
    assert int(start[3]) - int(energized[3]) == 1


def _plan(steps):
    return RestorationPlan("x", steps, [st.step for st in steps for _ in st.slots], 15.0, {}, {}, {}, {})


def test_empty_plot():
    plan = _plan([])
    assert render_csv(plan) == "event,step,label,slot,time_min,end_min\n"
    svg = render_svg(plan)
    assert "<line" in svg and "<rect" not in svg and "<circle" not in svg


def test_three_bars_ordered_by_time():
    steps = [StepPlan(1, 0.5, [1], [], {}, [], 0.5, 0.5), StepPlan(2, 15.0, [2], [], {}, [], 0.5, 0.5),
             StepPlan(3, 30.0, [3], [], {}, [], 0.5, 0.5)]
    bars = [e for e in timing_events(_plan([steps[2], steps[0], steps[1]])) if e.event == "step"]
    assert [e.step for e in bars] == [1, 2, 3]
    assert render_svg(_plan(steps)).count("<rect") == 3


def test_entry_point(tmp_path):
    r = subprocess.run(["restore", "count-binaries", "--scenario", str(fixture_path("two_feeder_dg"))],
                       capture_output=True, text=True)
    if r.returncode != 0 and "not found" in r.stderr:
        r = subprocess.run([sys.executable, "-m", "msrestore.cli", "count-binaries", "--scenario",
                            str(fixture_path("two_feeder_dg"))], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["total_multi_step"] == 14
