"""Variable index, affine expressions and constraint blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional


class VariableIndex:
    """Bijective map between (family, key) pairs and column positions."""

    def __init__(self):
        self._cols: dict[tuple, int] = {}
        self.keys: list[tuple] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.is_binary: list[bool] = []

    def add(self, family: str, key, lb: float = 0.0, ub: float = math.inf, binary: bool = False) -> int:
        k = (family, key)
        if k in self._cols:
            raise KeyError(f"variable {family}{key} already exists")
        if lb > ub:
            raise ValueError(f"variable {family}{key}: lb {lb} > ub {ub}")
        col = len(self.keys)
        self._cols[k] = col
        self.keys.append(k)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.is_binary.append(bool(binary))
        return col

    def col(self, family: str, key) -> int:
        return self._cols[(family, key)]

    def has(self, family: str, key) -> bool:
        return (family, key) in self._cols

    def var(self, family: str, key) -> "Expr":
        return Expr({self._cols[(family, key)]: 1.0})

    def family(self, family: str) -> list[int]:
        return [c for c, (f, _) in enumerate(self.keys) if f == family]

    def name(self, col: int) -> str:
        f, key = self.keys[col]
        if not isinstance(key, tuple):
            key = (key,)
        return f"{f}[{','.join(str(k) for k in key)}]"

    @property
    def binaries(self) -> list[int]:
        return [c for c, b in enumerate(self.is_binary) if b]

    def __len__(self) -> int:
        return len(self.keys)


class Expr:
    """Sparse affine expression ``sum(coef * x[col]) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[dict] = None, const: float = 0.0):
        self.terms = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def total(items: Iterable) -> "Expr":
        out = Expr()
        for it in items:
            out._iadd(it, 1.0)
        return out

    def copy(self) -> "Expr":
        return Expr(self.terms, self.const)

    def _iadd(self, other, sign: float) -> "Expr":
        if isinstance(other, Expr):
            for c, v in other.terms.items():
                self.terms[c] = self.terms.get(c, 0.0) + sign * v
            self.const += sign * other.const
        else:
            self.const += sign * float(other)
        return self

    def __add__(self, other):
        return self.copy()._iadd(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy()._iadd(other, -1.0)

    def __rsub__(self, other):
        return (-self)._iadd(other, 1.0)

    def __neg__(self):
        return Expr({c: -v for c, v in self.terms.items()}, -self.const)

    def __mul__(self, k):
        k = float(k)
        return Expr({c: k * v for c, v in self.terms.items()}, k * self.const)

    __rmul__ = __mul__

    def value(self, x) -> float:
        return self.const + sum(v * x[c] for c, v in self.terms.items())

    def cleaned(self) -> "Expr":
        return Expr({c: v for c, v in self.terms.items() if v != 0.0}, self.const)

    def __repr__(self):
        body = " + ".join(f"{v:g}*x{c}" for c, v in sorted(self.terms.items()))
        return f"Expr({body or '0'} + {self.const:g})"


@dataclass
class Row:
    expr: Expr
    lo: float
    hi: float
    tag: str


@dataclass
class Cone:
    """``||members||_2 <= head``."""

    head: Expr
    members: list[Expr]
    tag: str


@dataclass
class ConstraintBlock:
    rows: list[Row] = field(default_factory=list)
    cones: list[Cone] = field(default_factory=list)

    def add(self, expr: Expr, lo: float, hi: float, tag: str) -> None:
        e = expr.cleaned()
        lo, hi = lo - e.const, hi - e.const
        if lo > hi:
            raise ValueError(f"row {tag}: lower bound exceeds upper bound")
        self.rows.append(Row(Expr(e.terms), lo, hi, tag))

    def le(self, lhs, rhs, tag: str) -> None:
        self.add(_as_expr(lhs) - rhs, -math.inf, 0.0, tag)

    def ge(self, lhs, rhs, tag: str) -> None:
        self.add(_as_expr(lhs) - rhs, 0.0, math.inf, tag)

    def eq(self, lhs, rhs, tag: str) -> None:
        self.add(_as_expr(lhs) - rhs, 0.0, 0.0, tag)

    def cone(self, head, members, tag: str) -> None:
        self.cones.append(Cone(_as_expr(head), [_as_expr(m) for m in members], tag))

    def extend(self, other: "ConstraintBlock") -> "ConstraintBlock":
        self.rows.extend(other.rows)
        self.cones.extend(other.cones)
        return self

    def tags(self) -> set[str]:
        return {r.tag for r in self.rows} | {c.tag for c in self.cones}

    def check(self, n_vars: int) -> None:
        for r in self.rows:
            if any(c < 0 or c >= n_vars for c in r.expr.terms):
                raise ValueError(f"row {r.tag} references an unknown variable")
            if r.lo > r.hi:
                raise ValueError(f"row {r.tag} has lo > hi")
        for k in self.cones:
            for e in [k.head, *k.members]:
                if any(c < 0 or c >= n_vars for c in e.terms):
                    raise ValueError(f"cone {k.tag} references an unknown variable")

    def violation(self, x, rows_only: bool = False) -> float:
        worst = 0.0
        for r in self.rows:
            v = r.expr.value(x)
            worst = max(worst, r.lo - v, v - r.hi)
        if not rows_only:
            for k in self.cones:
                h = k.head.value(x)
                nrm = math.sqrt(sum(m.value(x) ** 2 for m in k.members))
                worst = max(worst, nrm - h)
        return worst


def _as_expr(v) -> Expr:
    return v if isinstance(v, Expr) else Expr(const=float(v))
