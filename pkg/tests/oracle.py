"""Brute-force lexicographic reference built on Clarabel, independent of the in-house IPM."""

from __future__ import annotations

import itertools
import math

import clarabel
import numpy as np
import scipy.sparse as sp

EPS = 1e-6


class ConicForm:
    """Model rows, cones and bounds as Clarabel data; binaries fixed per call."""

    def __init__(self, model):
        self.model = model
        n = len(model.idx)
        self.n = n
        self.bins = list(model.binaries)
        binset = set(self.bins)
        self.pure_binary_rows = []
        eq_rows, le_rows, b_eq, b_le = [], [], [], []
        for r in model.all_rows():
            if r.expr.terms and set(r.expr.terms) <= binset:
                self.pure_binary_rows.append(r)
            if r.lo == r.hi:
                eq_rows.append(r.expr.terms)
                b_eq.append(r.lo)
                continue
            if math.isfinite(r.hi):
                le_rows.append(r.expr.terms)
                b_le.append(r.hi)
            if math.isfinite(r.lo):
                le_rows.append({j: -v for j, v in r.expr.terms.items()})
                b_le.append(-r.lo)
        lb, ub = np.array(model.idx.lb), np.array(model.idx.ub)
        for j in range(n):
            if j in binset:
                continue
            if math.isfinite(ub[j]):
                le_rows.append({j: 1.0})
                b_le.append(ub[j])
            if math.isfinite(lb[j]):
                le_rows.append({j: -1.0})
                b_le.append(-lb[j])
        soc_rows, b_soc, dims = [], [], []
        for k in model.all_cones():
            for e in [k.head, *k.members]:
                soc_rows.append({j: -v for j, v in e.terms.items()})
                b_soc.append(e.const)
            dims.append(1 + len(k.members))
        self.eq_rows, self.b_eq = eq_rows, b_eq
        self.le_rows, self.b_le = le_rows, b_le
        self.soc_rows, self.b_soc, self.dims = soc_rows, b_soc, dims

    def feasible_assignment(self, fix: dict) -> bool:
        for r in self.pure_binary_rows:
            v = sum(c * fix[j] for j, c in r.expr.terms.items())
            if v < r.lo - 1e-9 or v > r.hi + 1e-9:
                return False
        return True

    def solve(self, fix: dict, c: np.ndarray, extra=()):
        """min c'x with binaries fixed; ``extra`` holds (coef dict, upper bound) rows."""
        eq = self.eq_rows + [{j: 1.0} for j in self.bins]
        beq = self.b_eq + [float(fix[j]) for j in self.bins]
        le = self.le_rows + [t for t, _ in extra]
        ble = self.b_le + [u for _, u in extra]
        blocks = eq + le + self.soc_rows
        b = np.array(beq + ble + self.b_soc, dtype=float)
        ri, ci, vv = [], [], []
        for i, terms in enumerate(blocks):
            for j, v in terms.items():
                ri.append(i)
                ci.append(j)
                vv.append(v)
        A = sp.csc_matrix((vv, (ri, ci)), shape=(len(blocks), self.n))
        cones = [clarabel.ZeroConeT(len(eq)), clarabel.NonnegativeConeT(len(le))]
        cones += [clarabel.SecondOrderConeT(d) for d in self.dims]
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = settings.tol_gap_rel = 1e-10
        settings.tol_feas = 1e-10
        P = sp.csc_matrix((self.n, self.n))
        sol = clarabel.DefaultSolver(P, np.asarray(c, dtype=float), A, b, cones, settings).solve()
        status = str(sol.status)
        if status not in ("Solved", "AlmostSolved"):
            return None
        return np.array(sol.x)


def tier_vector(model, k: int, scale: float = 1.0) -> np.ndarray:
    tier = model.tiers[k]
    c = np.zeros(len(model.idx))
    for j, v in tier.coeffs.items():
        c[j] = scale * tier.weight * v / tier.norm
    return c


def brute_force_lexicographic(model, eps=(EPS, EPS), tier_scale=(1.0, 1.0, 1.0)):
    """Enumerate every binary assignment; return per-tier optima and the optimal assignments."""
    form = ConicForm(model)
    bins = form.bins
    cands = []
    for bits in itertools.product((0, 1), repeat=len(bins)):
        fix = dict(zip(bins, bits))
        if form.feasible_assignment(fix):
            cands.append(fix)
    values, extra = [], []
    for k, tier in enumerate(model.tiers):
        c = tier_vector(model, k, tier_scale[k])
        scored = []
        for fix in cands:
            x = form.solve(fix, c, extra)
            if x is not None:
                scored.append((float(c @ x), tier.value(x), fix, x))
        if not scored:
            return None
        best = min(scored, key=lambda r: r[0])
        val = best[1]
        optimal = [fix for cv, _, fix, _ in scored if cv <= best[0] + 1e-7]
        values.append(val)
        if tier.weight * tier_scale[k] > 0 and k < len(eps):
            # assignments whose own minimum breaks the freeze row can never return
            cands = [fix for _, v, fix, _ in scored if v <= val + eps[k] + 1e-9]
        else:
            cands = [fix for _, _, fix, _ in scored]
        if k < len(eps):
            coef = {j: v / tier.norm for j, v in tier.coeffs.items()}
            extra = extra + [(coef, val + eps[k] - tier.const / tier.norm)]
    return values, optimal
