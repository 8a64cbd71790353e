"""Conic program container, solver result and the independent KKT auditor."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp


class DimensionError(ValueError):
    """Raised when program data or a candidate point has inconsistent shapes."""


@dataclass
class ConicProgram:
    """minimize c'v  s.t.  A v = b,  lb <= v <= ub,  ||v[u]|| <= v[t] per cone.

    Each cone is an index tuple ``(t, u_1, ..., u_n)``.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    cones: list[tuple[int, ...]] = field(default_factory=list)
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if self.A is None:
            self.A = sp.csr_matrix((0, n))
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        self.cones = [tuple(int(i) for i in k) for k in self.cones]
        self.check()

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def check(self) -> None:
        n = self.n
        if self.A.shape != (self.b.size, n):
            raise DimensionError(f"A has shape {self.A.shape}, expected ({self.b.size}, {n})")
        if self.lb.size != n or self.ub.size != n:
            raise DimensionError("bound vectors must have one entry per variable")
        if np.any(self.lb > self.ub):
            bad = int(np.flatnonzero(self.lb > self.ub)[0])
            raise ValueError(f"variable {bad}: lower bound exceeds upper bound")
        heads = set()
        for k in self.cones:
            if len(k) < 2:
                raise DimensionError(f"cone {k} needs a head and at least one member")
            if min(k) < 0 or max(k) >= n:
                raise DimensionError(f"cone {k} references a column outside 0..{n - 1}")
            if k[0] in heads:
                raise DimensionError(f"column {k[0]} heads more than one cone")
            heads.add(k[0])
        if self.x0 is not None and np.asarray(self.x0).size != n:
            raise DimensionError("warm start has the wrong length")

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "ConicProgram":
        """Shallow copy sharing c, A, b and cones but with new bounds."""
        out = object.__new__(ConicProgram)
        out.c, out.A, out.b, out.cones, out.x0 = self.c, self.A, self.b, self.cones, None
        out.lb, out.ub = np.asarray(lb, dtype=float), np.asarray(ub, dtype=float)
        return out

    def with_objective(self, c: np.ndarray) -> "ConicProgram":
        out = object.__new__(ConicProgram)
        out.A, out.b, out.cones, out.lb, out.ub, out.x0 = self.A, self.b, self.cones, self.lb, self.ub, None
        out.c = np.asarray(c, dtype=float)
        return out

    def dump(self) -> str:
        """Sparse triplet text format, one record per line."""
        lines = [f"program n={self.n} m={self.m} cones={len(self.cones)}"]
        for j, v in enumerate(self.c):
            if v != 0.0:
                lines.append(f"c {j} {v:.17g}")
        coo = self.A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for r, col, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            lines.append(f"A {r} {col} {v:.17g}")
        for i, v in enumerate(self.b):
            lines.append(f"b {i} {v:.17g}")
        for j in range(self.n):
            if np.isfinite(self.lb[j]) or np.isfinite(self.ub[j]):
                lines.append(f"bound {j} {self.lb[j]:.17g} {self.ub[j]:.17g}")
        for k in self.cones:
            lines.append("cone " + " ".join(str(i) for i in k))
        return "\n".join(lines) + "\n"


@dataclass
class Dual:
    """Multipliers in program space.

    Stationarity reads ``c - A'y - z_lower + z_upper - sum_k E_k' z_cone[k] = 0``.
    """

    y: np.ndarray
    z_lower: np.ndarray
    z_upper: np.ndarray
    z_cone: list[np.ndarray]


@dataclass
class SolverResult:
    status: str  # optimal | infeasible | unbounded | max_iters | numerical_failure
    x: Optional[np.ndarray]
    dual: Optional[Dual]
    objective: float
    residuals: dict
    iterations: int
    certificate: Optional[Dual] = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _cone_matrix(p: ConicProgram) -> sp.csr_matrix:
    rows, cols = [], []
    r = 0
    for k in p.cones:
        for i in k:
            rows.append(r)
            cols.append(i)
            r += 1
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(r, p.n))


def kkt_residuals(p: ConicProgram, primal: np.ndarray, dual: Optional[Dual]) -> dict:
    """Scaled primal/dual infeasibility and relative duality gap.

    Computed straight from the program data; shares nothing with the solver.
    """
    v = np.asarray(primal, dtype=float).ravel()
    if v.size != p.n:
        raise DimensionError(f"primal has {v.size} entries, program has {p.n} variables")

    eq = p.A @ v - p.b
    pres = np.linalg.norm(eq) / (1.0 + np.linalg.norm(p.b))
    viol = 0.0
    with np.errstate(invalid="ignore"):
        lo = np.where(np.isfinite(p.lb), p.lb - v, 0.0)
        hi = np.where(np.isfinite(p.ub), v - p.ub, 0.0)
    viol = max(viol, float(np.max(lo, initial=0.0)), float(np.max(hi, initial=0.0)))
    for k in p.cones:
        idx = list(k)
        viol = max(viol, float(np.linalg.norm(v[idx[1:]]) - v[idx[0]]))
    pres = max(pres, viol)

    out = {"primal_res": float(pres), "dual_res": float("inf"), "gap": float("inf")}
    if dual is None:
        return out

    y = np.asarray(dual.y, dtype=float)
    zl = np.asarray(dual.z_lower, dtype=float)
    zu = np.asarray(dual.z_upper, dtype=float)
    if y.size != p.m or zl.size != p.n or zu.size != p.n or len(dual.z_cone) != len(p.cones):
        raise DimensionError("dual blocks do not match the program")
    stat = p.c - p.A.T @ y - zl + zu
    for k, zc in zip(p.cones, dual.z_cone):
        zc = np.asarray(zc, dtype=float)
        if zc.size != len(k):
            raise DimensionError("cone multiplier has the wrong length")
        np.subtract.at(stat, list(k), zc)
    dres = np.linalg.norm(stat) / (1.0 + np.linalg.norm(p.c))
    dviol = max(0.0, float(-np.min(zl, initial=0.0)), float(-np.min(zu, initial=0.0)))
    dviol = max(dviol, float(np.max(np.abs(zl[~np.isfinite(p.lb)]), initial=0.0)))
    dviol = max(dviol, float(np.max(np.abs(zu[~np.isfinite(p.ub)]), initial=0.0)))
    for zc in dual.z_cone:
        dviol = max(dviol, float(np.linalg.norm(zc[1:]) - zc[0]))
    dres = max(dres, dviol)

    pobj = float(p.c @ v)
    finite_l = np.isfinite(p.lb)
    finite_u = np.isfinite(p.ub)
    dobj = float(p.b @ y + p.lb[finite_l] @ zl[finite_l] - p.ub[finite_u] @ zu[finite_u])
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    out.update(dual_res=float(dres), gap=float(gap))
    return out


def dual_objective(p: ConicProgram, dual: Dual) -> float:
    fl, fu = np.isfinite(p.lb), np.isfinite(p.ub)
    return float(p.b @ dual.y + p.lb[fl] @ dual.z_lower[fl] - p.ub[fu] @ dual.z_upper[fu])


def cone_membership(v: Sequence[float]) -> float:
    """Signed distance-like margin ``t - ||u||`` (non-negative inside the cone)."""
    v = np.asarray(v, dtype=float)
    return float(v[0] - np.linalg.norm(v[1:]))
