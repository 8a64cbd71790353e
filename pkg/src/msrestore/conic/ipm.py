"""Homogeneous self-dual primal-dual interior-point method for SOCPs.

Internally the program is rewritten as

    minimize c'x  s.t.  A x = b,  G x + s = h,  s in K

where K is an orthant (finite variable bounds) times second-order cones, and
fixed variables are substituted out.  Search directions use Nesterov-Todd
scaling and a Mehrotra predictor-corrector; the reduced quasi-definite KKT
system is factorized once per iteration with static regularization and
polished by iterative refinement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import ConeSet
from .program import ConicProgram, Dual, SolverResult, kkt_residuals

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITERS = 200
STATIC_REG = 1e-8
DENSE_BELOW = 500


@dataclass
class _Standard:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    K: ConeSet
    free: np.ndarray
    fixed: np.ndarray
    fixed_val: np.ndarray
    row_keep: np.ndarray
    lb_rows: np.ndarray  # variable (program index) owning each lower-bound row
    ub_rows: np.ndarray
    cone_rows: list  # (cone number, slice of rows) for kept cones
    const: float


class _Infeasible(Exception):
    pass


def _standardize(p: ConicProgram) -> _Standard:
    n = p.n
    fixed_mask = p.lb == p.ub
    free = np.flatnonzero(~fixed_mask)
    fixed = np.flatnonzero(fixed_mask)
    fixed_val = p.lb[fixed]
    pos = -np.ones(n, dtype=int)
    pos[free] = np.arange(free.size)

    A = p.A.tocsc()
    Af = A[:, free].tocsr()
    b = p.b - A[:, fixed] @ fixed_val if fixed.size else p.b.copy()
    nnz = np.diff(Af.indptr)
    empty = nnz == 0
    if np.any(np.abs(b[empty]) > 1e-9 * (1 + np.abs(p.b[empty]))):
        raise _Infeasible("equality row with only fixed variables is violated")
    row_keep = np.flatnonzero(~empty)
    Af = Af[row_keep]
    b = b[row_keep]

    lbf, ubf = p.lb[free], p.ub[free]
    lb_idx = np.flatnonzero(np.isfinite(lbf))
    ub_idx = np.flatnonzero(np.isfinite(ubf))
    rows, cols, vals, h = [], [], [], []
    r = 0
    rows.extend(range(r, r + lb_idx.size)); cols.extend(lb_idx); vals.extend([-1.0] * lb_idx.size)
    h.extend(-lbf[lb_idx]); r += lb_idx.size
    rows.extend(range(r, r + ub_idx.size)); cols.extend(ub_idx); vals.extend([1.0] * ub_idx.size)
    h.extend(ubf[ub_idx]); r += ub_idx.size
    n_orth = r

    dims, cone_rows = [], []
    for k_no, k in enumerate(p.cones):
        members = list(k)
        if all(fixed_mask[i] for i in members):
            val = p.lb[members]
            if val[0] - np.linalg.norm(val[1:]) < -1e-9:
                raise _Infeasible(f"cone {k_no} fixed outside the cone")
            continue
        start = r
        for i in members:
            if fixed_mask[i]:
                h.append(p.lb[i])
            else:
                rows.append(r); cols.append(pos[i]); vals.append(-1.0); h.append(0.0)
            r += 1
        dims.append(len(members))
        cone_rows.append((k_no, slice(start, r)))

    G = sp.csr_matrix((vals, (rows, cols)), shape=(r, free.size))
    return _Standard(
        c=p.c[free].copy(), A=Af, b=b, G=G, h=np.asarray(h, dtype=float),
        K=ConeSet(n_orth, dims), free=free, fixed=fixed, fixed_val=fixed_val,
        row_keep=row_keep, lb_rows=free[lb_idx], ub_rows=free[ub_idx],
        cone_rows=cone_rows, const=float(p.c[fixed] @ fixed_val) if fixed.size else 0.0,
    )


class _KKT:
    """Factorization of [[G'W^-2 G + reg I, A'], [A, -reg I]].

    Every row of G holds at most one nonzero (a bound or a cone member), so
    G'W^-2 G is assembled straight from the row-to-column map.
    """

    def __init__(self, sf: _Standard, reg: float):
        self.sf = sf
        self.reg = reg
        n, m = sf.G.shape[1], sf.A.shape[0]
        self.n, self.m = n, m
        self.dense = n + m < DENSE_BELOW
        self.GT = sf.G.T.tocsr()
        self.AT = sf.A.T.tocsr()
        G = sf.G.tocsr()
        colmap = -np.ones(G.shape[0], dtype=int)
        sign = np.zeros(G.shape[0])
        nnz = np.diff(G.indptr)
        if np.any(nnz > 1):
            raise ValueError("cone and bound rows must each touch one variable")
        rows = np.repeat(np.arange(G.shape[0]), nnz)
        colmap[rows] = G.indices
        sign[rows] = G.data
        self.colmap, self.sign = colmap, sign
        Acoo = sf.A.tocoo()
        diag = np.arange(n + m)
        self.fixed_r = np.concatenate([Acoo.col, Acoo.row + n, diag])
        self.fixed_c = np.concatenate([Acoo.row + n, Acoo.col, diag])
        self.fixed_v = np.concatenate([Acoo.data, Acoo.data, np.r_[np.full(n, reg), np.full(m, -reg)]])

    def factor(self, scaling) -> None:
        self.scaling = scaling
        if scaling is None:
            r = c = np.arange(self.sf.K.size)
            v = np.ones(r.size)
        else:
            r, c, v = scaling.winv2_coo()
        cr, cc = self.colmap[r], self.colmap[c]
        keep = (cr >= 0) & (cc >= 0)
        hv = v[keep] * self.sign[r[keep]] * self.sign[c[keep]]
        N = self.n + self.m
        Kmat = sp.csc_matrix(
            (np.concatenate([hv, self.fixed_v]),
             (np.concatenate([cr[keep], self.fixed_r]), np.concatenate([cc[keep], self.fixed_c]))),
            shape=(N, N),
        )
        if self.dense:
            self.lu = la.lu_factor(Kmat.toarray(), check_finite=False)
        else:
            self.lu = spla.splu(Kmat, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                options={"SymmetricMode": True})

    def _winv2(self, v):
        return v if self.scaling is None else self.scaling.Winv2(v)

    def _w2(self, v):
        return v if self.scaling is None else self.scaling.W2(v)

    def _reduced(self, rx, ry, rz):
        sf = self.sf
        r1 = rx + self.GT @ self._winv2(rz)
        rhs = np.concatenate([r1, ry])
        sol = la.lu_solve(self.lu, rhs, check_finite=False) if self.dense else self.lu.solve(rhs)
        dx, dy = sol[: self.n], sol[self.n:]
        dz = self._winv2(sf.G @ dx - rz)
        return dx, dy, dz

    def solve(self, rx, ry, rz, refine: int = 3):
        sf = self.sf
        dx, dy, dz = self._reduced(rx, ry, rz)
        scale = 1.0 + max(np.abs(rx).max(initial=0), np.abs(ry).max(initial=0), np.abs(rz).max(initial=0))
        for _ in range(refine):
            ex = rx - (self.AT @ dy + self.GT @ dz)
            ey = ry - sf.A @ dx
            ez = rz - (sf.G @ dx - self._w2(dz))
            err = max(np.abs(ex).max(initial=0), np.abs(ey).max(initial=0), np.abs(ez).max(initial=0))
            if err <= 1e-13 * scale:
                break
            cx, cy, cz = self._reduced(ex, ey, ez)
            dx, dy, dz = dx + cx, dy + cy, dz + cz
        return dx, dy, dz


def _to_program_space(p: ConicProgram, sf: _Standard, x, y, z):
    v = np.empty(p.n)
    v[sf.free] = x
    v[sf.fixed] = sf.fixed_val
    yp = np.zeros(p.m)
    yp[sf.row_keep] = -y
    zl = np.zeros(p.n)
    zu = np.zeros(p.n)
    K = sf.K
    nl = sf.lb_rows.size
    zl[sf.lb_rows] = z[:nl]
    zu[sf.ub_rows] = z[nl:K.l]
    zc = [np.zeros(len(k)) for k in p.cones]
    for k_no, rows in sf.cone_rows:
        zc[k_no] = z[rows].copy()
    if sf.fixed.size:
        red = p.c - p.A.T @ yp
        for k_no, k in enumerate(p.cones):
            np.subtract.at(red, list(k), zc[k_no])
        red_f = red[sf.fixed]
        zl[sf.fixed] = np.maximum(red_f, 0.0)
        zu[sf.fixed] = np.maximum(-red_f, 0.0)
    return v, Dual(yp, zl, zu, zc)


def solve(p: ConicProgram, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
          reg: float = STATIC_REG) -> SolverResult:
    """Solve a conic program; deterministic for identical inputs."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p.check()
    try:
        sf = _standardize(p)
    except _Infeasible as exc:
        log.debug("presolve: %s", exc)
        return SolverResult("infeasible", None, None, np.inf, {}, 0)

    n, m = sf.G.shape[1], sf.A.shape[0]
    K = sf.K
    if n == 0:
        return _trivial(p, sf, tol)

    kkt = _KKT(sf, reg)
    c, A, b, G, h = sf.c, sf.A, sf.b, sf.G, sf.h
    nb, nh, nc = np.linalg.norm(b), np.linalg.norm(h), np.linalg.norm(c)

    # Initial point from two least-squares style solves with W = I.
    kkt.factor(None)
    x, _, zt = kkt.solve(np.zeros(n), b, h)
    s = -zt
    _, y, z = kkt.solve(-c, np.zeros(m), np.zeros(K.size))
    e = K.identity()
    a = K.min_eig(s)
    if a <= 0:
        s = s + (1.0 - a) * e
    a = K.min_eig(z)
    if a <= 0:
        z = z + (1.0 - a) * e
    tau, kappa = 1.0, 1.0
    deg = K.degree

    best = None
    status = "max_iters"
    it = 0
    for it in range(max_iters + 1):
        Atz = kkt.AT @ y + kkt.GT @ z
        r1 = Atz + c * tau
        r2 = -(A @ x) + b * tau
        Gx = G @ x
        r3 = -Gx + h * tau - s
        cx, by, hz = c @ x, b @ y, h @ z
        r4 = -cx - by - hz - kappa
        mu = (s @ z + tau * kappa) / (deg + 1)

        pres = max(np.linalg.norm(A @ x - b * tau) / (1 + nb), np.linalg.norm(Gx + s - h * tau) / (1 + nh)) / tau
        dres = np.linalg.norm(r1) / tau / (1 + nc)
        pcost, dcost = cx / tau, -(by + hz) / tau
        gap = max(abs(pcost - dcost), (s @ z) / tau**2) / (1 + abs(pcost) + abs(dcost))
        log.debug("it %3d pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e", it, pres, dres, gap, tau, kappa)

        if not np.isfinite(pres + dres + gap):
            status = "numerical_failure"
            break
        if max(pres, dres, gap) <= tol:
            v, dual = _to_program_space(p, sf, x / tau, y / tau, z / tau)
            res = kkt_residuals(p, v, dual)
            if best is None or max(res.values()) < max(best[2].values()):
                best = (v, dual, res)
            if max(res.values()) <= tol:
                status = "optimal"
                break

        # infeasibility certificates
        if by + hz < 0:
            cert = np.linalg.norm(Atz) / (-(by + hz)) * (1 + nc) / (1 + nc)
            if cert <= tol and tau < kappa:
                status = "infeasible"
                break
        if cx < 0:
            cert = max(np.linalg.norm(A @ x), np.linalg.norm(Gx + s)) / (-cx)
            if cert <= tol and tau < kappa:
                status = "unbounded"
                break
        if it == max_iters:
            break

        try:
            W = K.nt_scaling(s, z)
            kkt.factor(W)
        except (RuntimeError, np.linalg.LinAlgError, ValueError) as exc:
            log.debug("factorization failed: %s", exc)
            status = "numerical_failure"
            break
        lam = W.lam
        qx, qy, qz = kkt.solve(c, -b, -h)
        denom_q = c @ qx + b @ qy + h @ qz

        def direction(sig, rhs_s, rhs_k):
            ds_t = K.jordan_div(lam, rhs_s)
            px, py, pz = kkt.solve(-(1 - sig) * r1, (1 - sig) * r2, (1 - sig) * r3 - W.W(ds_t))
            dtau = (-(1 - sig) * r4 + rhs_k / tau + c @ px + b @ py + h @ pz) / (denom_q + kappa / tau)
            dx, dy, dz = px - dtau * qx, py - dtau * qy, pz - dtau * qz
            ds = W.W(ds_t - W.W(dz))
            dkappa = (rhs_k - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        def step_len(ds, dz, dtau, dkappa):
            al = min(K.max_step(s, ds), K.max_step(z, dz))
            if dtau < 0:
                al = min(al, -tau / dtau)
            if dkappa < 0:
                al = min(al, -kappa / dkappa)
            return al

        dx, dy, dz, ds, dtau, dkappa = direction(0.0, -K.jordan(lam, lam), -kappa * tau)
        alpha_aff = min(1.0, step_len(ds, dz, dtau, dkappa))
        sigma = min(1.0, max(0.0, (1.0 - alpha_aff))) ** 3
        corr = K.jordan(W.Winv(ds), W.W(dz))
        rhs_s = -K.jordan(lam, lam) - corr + sigma * mu * e
        rhs_k = -kappa * tau - dkappa * dtau + sigma * mu
        dx, dy, dz, ds, dtau, dkappa = direction(sigma, rhs_s, rhs_k)
        alpha = min(1.0, 0.99 * step_len(ds, dz, dtau, dkappa))
        if not (np.isfinite(alpha) and np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))) or alpha <= 1e-12:
            status = "numerical_failure"
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        # rescale the homogeneous iterate to keep magnitudes sane
        scale = max(tau, kappa)
        if scale > 1e6 or scale < 1e-6:
            x, y, z, s, tau, kappa = x / scale, y / scale, z / scale, s / scale, tau / scale, kappa / scale

    iters = it
    if status != "optimal" and best is not None and max(best[2].values()) <= tol:
        status = "optimal"
    if status == "optimal":
        v, dual, res = best
        return SolverResult("optimal", v, dual, float(p.c @ v), res, iters)
    if status == "infeasible":
        scale = -(b @ y + h @ z)
        _, cert = _to_program_space(p, sf, np.zeros(n), y / scale, z / scale)
        return SolverResult("infeasible", None, None, np.inf, {}, iters, certificate=cert)
    if status == "unbounded":
        v, _ = _to_program_space(p, sf, x / -(c @ x), y, z)
        return SolverResult("unbounded", v, None, -np.inf, {}, iters)
    # not converged: hand back the last iterate and its audit
    if tau > 0:
        v, dual = _to_program_space(p, sf, x / tau, y / tau, z / tau)
        res = kkt_residuals(p, v, dual)
    else:
        v, dual, res = None, None, {}
    return SolverResult(status, v, dual, float(p.c @ v) if v is not None else np.nan, res, iters)


def _trivial(p: ConicProgram, sf: _Standard, tol: float) -> SolverResult:
    v, dual = _to_program_space(p, sf, np.zeros(0), np.zeros(sf.A.shape[0]), np.zeros(sf.K.size))
    res = kkt_residuals(p, v, dual)
    if res["primal_res"] > tol:
        return SolverResult("infeasible", None, None, np.inf, res, 0)
    return SolverResult("optimal", v, dual, float(p.c @ v), res, 0)
