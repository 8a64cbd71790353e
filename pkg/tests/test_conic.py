import numpy as np
import pytest
import scipy.sparse as sp

from kkt_programs import random_kkt_program
from msrestore.conic import ConicProgram, DimensionError, Dual, kkt_residuals, solve


def norm_program():
    # minimize t  s.t.  u = (3, 4),  ||u|| <= t
    A = sp.csr_matrix([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return ConicProgram(c=np.array([1.0, 0.0, 0.0]), A=A, b=np.array([3.0, 4.0]), lb=None, ub=None,
                        cones=[(0, 1, 2)])


def test_norm_example():
    r = solve(norm_program())
    assert r.status == "optimal"
    assert r.objective == pytest.approx(5.0, abs=1e-8)
    assert max(r.residuals.values()) <= 1e-8


def test_lp_lower_bound():
    p = ConicProgram(c=np.array([1.0]), A=None, b=np.zeros(0), lb=np.array([2.0]), ub=None)
    r = solve(p)
    assert r.status == "optimal" and r.x[0] == pytest.approx(2.0, abs=1e-8)


def test_infeasible_program():
    A = sp.csr_matrix([[1.0, 1.0]])
    p = ConicProgram(c=np.array([1.0, 1.0]), A=A, b=np.array([5.0]), lb=np.zeros(2), ub=np.ones(2))
    assert solve(p).status == "infeasible"


def test_infeasible_cone():
    # ||u|| <= t with t <= 1 and u = 2
    A = sp.csr_matrix([[0.0, 1.0]])
    p = ConicProgram(c=np.array([1.0, 0.0]), A=A, b=np.array([2.0]), lb=np.array([-np.inf, -np.inf]),
                     ub=np.array([1.0, np.inf]), cones=[(0, 1)])
    assert solve(p).status == "infeasible"


def test_unbounded_program():
    p = ConicProgram(c=np.array([-1.0]), A=None, b=np.zeros(0), lb=np.array([0.0]), ub=None)
    assert solve(p).status in ("unbounded", "infeasible")
    assert not solve(p).ok


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        ConicProgram(c=np.ones(3), A=sp.csr_matrix(np.ones((2, 2))), b=np.ones(2), lb=None, ub=None)


def test_analytic_optimum_has_zero_residuals():
    p = norm_program()
    dual = Dual(y=np.array([0.6, 0.8]), z_lower=np.zeros(3), z_upper=np.zeros(3),
                z_cone=[np.array([1.0, -0.6, -0.8])])
    res = kkt_residuals(p, np.array([5.0, 3.0, 4.0]), dual)
    assert max(res.values()) <= 1e-15


def test_perturbation_scales_primal_residual():
    p = norm_program()
    base = np.array([5.0, 3.0, 4.0])
    d = np.array([1.0, 1.0, 0.0])
    for delta in (1e-3, 1e-2, 1e-1):
        r = kkt_residuals(p, base + delta * d, None)["primal_res"]
        assert r == pytest.approx(np.linalg.norm(p.A @ (delta * d)) / (1 + np.linalg.norm(p.b)))


def test_zero_point_residual():
    p = norm_program()
    r = kkt_residuals(p, np.zeros(3), None)["primal_res"]
    assert r == pytest.approx(5.0 / 6.0)


def test_random_kkt_programs():
    rng = np.random.default_rng(20240611)
    for _ in range(50):
        prog, opt = random_kkt_program(rng, int(rng.integers(1, 5)), int(rng.integers(0, 6)),
                                       int(rng.integers(0, 3)))
        r = solve(prog)
        assert r.status == "optimal"
        assert abs(r.objective - opt) <= 1e-6 * (1 + abs(opt))
        assert max(kkt_residuals(prog, r.x, r.dual).values()) <= 1e-6


def test_deterministic():
    rng = np.random.default_rng(5)
    prog, _ = random_kkt_program(rng, 3, 3, 1)
    a, b = solve(prog), solve(prog)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations
