import numpy as np
import pytest

from conftest import scenario
from msrestore.bnb import SolverConfig, lexicographic_solve, select_branch_variable, solve_misocp
from msrestore.model import assemble, objective_vector
from oracle import brute_force_lexicographic


def fam(names):
    return lambda j: names[j]


def test_most_fractional_wins():
    assert select_branch_variable(np.array([0.5, 0.9]), [0, 1], fam(["Y", "K"])) == 0


def test_tie_goes_to_lower_index():
    assert select_branch_variable(np.array([0.5, 0.5]), [0, 1], fam(["Y", "Y"])) == 0


def test_family_precedence():
    assert select_branch_variable(np.array([0.5, 0.5]), [0, 1], fam(["L", "K"])) == 1
    # precedence is absolute: a barely fractional Y beats a half-way L
    assert select_branch_variable(np.array([0.5, 0.99]), [0, 1], fam(["L", "Y"])) == 1


def test_integral_point_has_no_branch():
    assert select_branch_variable(np.array([0.0, 1.0, 1e-9]), [0, 1, 2], fam(["Y", "K", "L"])) is None


def test_integral_relaxation_needs_no_branching():
    m = assemble(scenario("no_fault"))
    r = lexicographic_solve(m)
    assert r.status == "optimal" and r.nodes == 3


def test_infeasible_toy():
    m = assemble(scenario("overloaded_feeder"))
    r = solve_misocp(m, objective_vector(m, m.tiers[0]))
    assert r.status == "infeasible" and r.incumbent is None


def test_single_step_two_feeder_matches_enumeration():
    m = assemble(scenario("two_feeder_dg"), steps=1)
    values, optimal = brute_force_lexicographic(m)
    r = lexicographic_solve(m)
    assert r.status == "optimal"
    assert r.tiers == pytest.approx(values, abs=1e-6)
    chosen = {j: int(round(r.x[j])) for j in m.binaries}
    assert chosen in optimal


def test_node_limit_reports_limit():
    m = assemble(scenario("two_feeder_dg"), steps=2)
    r = solve_misocp(m, objective_vector(m, m.tiers[0]), SolverConfig(node_limit=1))
    assert r.status == "limit"


def test_search_is_deterministic():
    m = assemble(scenario("startup_delay"))
    a, b = lexicographic_solve(m), lexicographic_solve(m)
    assert np.array_equal(a.x, b.x)
    assert [s.nodes for s in a.stages] == [s.nodes for s in b.stages]


def test_log_records_nodes():
    m = assemble(scenario("startup_delay"))
    r = solve_misocp(m, objective_vector(m, m.tiers[0]), SolverConfig(keep_log=True))
    assert len(r.log) == r.nodes
    assert any("incumbent" in line for line in r.log)
