"""Vectorized operations on a product of a non-negative orthant and second-order cones.

Rows of the slack vector are laid out with the orthant first; cones of equal
dimension are processed together as (count, dim) arrays.
"""

from __future__ import annotations

import numpy as np


class ConeSet:
    def __init__(self, n_orthant: int, cone_dims: list[int]):
        self.l = int(n_orthant)
        self.dims = list(cone_dims)
        self.size = self.l + sum(self.dims)
        self.degree = self.l + len(self.dims)
        starts = np.cumsum([self.l] + self.dims[:-1]).astype(int) if self.dims else np.zeros(0, int)
        self.starts = starts
        self.groups: list[tuple[int, np.ndarray]] = []
        for d in sorted(set(self.dims)):
            sel = [s for s, dd in zip(starts, self.dims) if dd == d]
            idx = np.asarray(sel, dtype=int)[:, None] + np.arange(d)[None, :]
            self.groups.append((d, idx))

    # -- basic algebra -----------------------------------------------------
    def identity(self) -> np.ndarray:
        e = np.zeros(self.size)
        e[: self.l] = 1.0
        e[self.starts] = 1.0
        return e

    def min_eig(self, u: np.ndarray) -> float:
        """Smallest 'eigenvalue' over all blocks (negative means outside)."""
        m = np.min(u[: self.l], initial=np.inf)
        for _, idx in self.groups:
            blk = u[idx]
            m = min(m, float(np.min(blk[:, 0] - np.linalg.norm(blk[:, 1:], axis=1))))
        return float(m)

    def jordan(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty(self.size)
        out[: self.l] = u[: self.l] * v[: self.l]
        for _, idx in self.groups:
            a, b = u[idx], v[idx]
            out[idx[:, 0]] = np.einsum("ij,ij->i", a, b)
            out[idx[:, 1:]] = a[:, :1] * b[:, 1:] + b[:, :1] * a[:, 1:]
        return out

    def jordan_div(self, lam: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Solve lam o x = r for x."""
        out = np.empty(self.size)
        out[: self.l] = r[: self.l] / lam[: self.l]
        for _, idx in self.groups:
            L, R = lam[idx], r[idx]
            l0, l1 = L[:, 0], L[:, 1:]
            rho = l0 * l0 - np.einsum("ij,ij->i", l1, l1)
            x0 = (l0 * R[:, 0] - np.einsum("ij,ij->i", l1, R[:, 1:])) / rho
            out[idx[:, 0]] = x0
            out[idx[:, 1:]] = (R[:, 1:] - x0[:, None] * l1) / l0[:, None]
        return out

    def max_step(self, u: np.ndarray, du: np.ndarray) -> float:
        """Largest alpha with u + alpha*du in the cone (u strictly inside)."""
        alpha = np.inf
        ul, dl = u[: self.l], du[: self.l]
        neg = dl < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-ul[neg] / dl[neg])))
        for _, idx in self.groups:
            U, D = u[idx], du[idx]
            a = D[:, 0] ** 2 - np.einsum("ij,ij->i", D[:, 1:], D[:, 1:])
            b = U[:, 0] * D[:, 0] - np.einsum("ij,ij->i", U[:, 1:], D[:, 1:])
            c = np.maximum(U[:, 0] ** 2 - np.einsum("ij,ij->i", U[:, 1:], U[:, 1:]), 0.0)
            alpha = min(alpha, _soc_first_root(a, b, c, U[:, 0], D[:, 0]))
        return alpha

    # -- Nesterov-Todd scaling ----------------------------------------------
    def nt_scaling(self, s: np.ndarray, z: np.ndarray) -> "Scaling":
        return Scaling(self, s, z)


def _soc_first_root(a, b, c, u0, d0) -> float:
    """Smallest positive root of a*t^2 + 2*b*t + c (c >= 0), vectorized."""
    out = np.full(a.shape, np.inf)
    scale = np.maximum(np.abs(a), np.maximum(np.abs(b), 1e-300))
    lin = np.abs(a) <= 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        # linear case: 2 b t + c = 0
        t_lin = np.where(b < 0, -c / (2 * b), np.inf)
        disc = b * b - a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        q = -(b + np.copysign(sq, b))
        r1 = np.where(a != 0, q / a, np.inf)
        r2 = np.where(q != 0, c / q, np.inf)
        r1 = np.where(r1 > 0, r1, np.inf)
        r2 = np.where(r2 > 0, r2, np.inf)
        t_quad = np.where(disc >= 0, np.minimum(r1, r2), np.inf)
        out = np.where(lin, t_lin, t_quad)
        # apex exit: head must stay non-negative
        t_head = np.where(d0 < 0, -u0 / d0, np.inf)
    out = np.minimum(out, t_head)
    return float(np.min(out, initial=np.inf))


class Scaling:
    """NT scaling W with W z = W^{-1} s = lambda."""

    def __init__(self, K: ConeSet, s: np.ndarray, z: np.ndarray):
        self.K = K
        l = K.l
        self.d = np.sqrt(s[:l] / z[:l])
        self.blocks = []
        lam = np.empty(K.size)
        lam[:l] = np.sqrt(s[:l] * z[:l])
        for dim, idx in K.groups:
            S, Z = s[idx], z[idx]
            ns = np.sqrt(np.maximum(S[:, 0] ** 2 - np.einsum("ij,ij->i", S[:, 1:], S[:, 1:]), 1e-300))
            nz = np.sqrt(np.maximum(Z[:, 0] ** 2 - np.einsum("ij,ij->i", Z[:, 1:], Z[:, 1:]), 1e-300))
            sb = S / ns[:, None]
            zb = Z / nz[:, None]
            gamma = np.sqrt(np.maximum((1.0 + np.einsum("ij,ij->i", sb, zb)) / 2.0, 1e-300))
            wb = np.empty_like(sb)
            wb[:, 0] = (sb[:, 0] + zb[:, 0]) / (2 * gamma)
            wb[:, 1:] = (sb[:, 1:] - zb[:, 1:]) / (2 * gamma[:, None])
            eta = np.sqrt(ns / nz)
            w0, w1 = wb[:, 0], wb[:, 1:]
            inner = np.eye(dim - 1)[None] + np.einsum("ki,kj->kij", w1, w1) / (1.0 + w0)[:, None, None]
            Wb = np.empty((len(idx), dim, dim))
            Wb[:, 0, 0] = w0
            Wb[:, 0, 1:] = w1
            Wb[:, 1:, 0] = w1
            Wb[:, 1:, 1:] = inner
            Wi = Wb.copy()
            Wi[:, 0, 1:] = -w1
            Wi[:, 1:, 0] = -w1
            W = Wb * eta[:, None, None]
            Winv = Wi / eta[:, None, None]
            self.blocks.append((idx, W, Winv))
            lam[idx] = np.einsum("kij,kj->ki", W, Z)
        self.lam = lam

    def _apply(self, v: np.ndarray, which: int, power: int = 1) -> np.ndarray:
        out = np.empty_like(v)
        l = self.K.l
        dd = self.d if which == 1 else 1.0 / self.d
        out[:l] = v[:l] * dd**power
        for idx, W, Winv in self.blocks:
            M = W if which == 1 else Winv
            x = v[idx]
            for _ in range(power):
                x = np.einsum("kij,kj->ki", M, x)
            out[idx] = x
        return out

    def W(self, v):
        return self._apply(v, 1)

    def Winv(self, v):
        return self._apply(v, -1)

    def W2(self, v):
        return self._apply(v, 1, 2)

    def Winv2(self, v):
        return self._apply(v, -1, 2)

    def winv2_coo(self):
        """Triplets of the block-diagonal W^{-2}."""
        l = self.K.l
        rows = [np.arange(l)]
        cols = [np.arange(l)]
        vals = [1.0 / self.d**2]
        for idx, _, Winv in self.blocks:
            M = np.einsum("kij,kjl->kil", Winv, Winv)
            d = idx.shape[1]
            rows.append(np.repeat(idx, d, axis=1).ravel())
            cols.append(np.tile(idx, (1, d)).ravel())
            vals.append(M.ravel())
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
