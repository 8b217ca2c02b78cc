"""Reformulation-linearization cuts from row/bound-factor products.

A row sum_j c_j x_j >= b0 multiplied by x_k or (1 - x_k) stays valid;
squares collapse (x^2 = x), known products become their AND variable, and
the remaining bilinear terms are replaced by the McCormick envelope side
that preserves the inequality for the term's sign:

    max(0, x_j + x_k - 1)  <=  x_j x_k  <=  min(x_j, x_k)

A product variable of a larger AND edge containing both factors is a valid
lower bound as well and is used when it is tighter at the LP point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .flower import VIOLATION_EPS, Cut
from .model import EngineProblem, NormConstraint


@dataclass
class ProductTable:
    exact: dict[frozenset, int] = field(default_factory=dict)
    relaxed: dict[frozenset, list[int]] = field(default_factory=dict)
    factor_vars: tuple[int, ...] = ()


def build_product_table(problem: EngineProblem) -> ProductTable:
    exact = {}
    relaxed = {}
    seen = set()
    for ad in problem.and_defs:
        seen.update(ad.operands)
        if len(ad.operands) == 2:
            exact[frozenset(ad.operands)] = ad.z
        else:
            ops = ad.operands
            for i in range(len(ops)):
                for j in range(i + 1, len(ops)):
                    relaxed.setdefault(frozenset((ops[i], ops[j])), []).append(ad.z)
    return ProductTable(exact, relaxed, tuple(sorted(seen)))


def _row_as_var_form(row: NormConstraint):
    coefs: dict[int, int] = {}
    b0 = row.degree
    for a, lit in zip(row.coefs, row.lits):
        v = abs(lit)
        if lit > 0:
            coefs[v] = coefs.get(v, 0) + a
        else:
            coefs[v] = coefs.get(v, 0) - a
            b0 -= a
    return coefs, b0


class _Expr:
    def __init__(self):
        self.coefs: dict[int, int] = {}
        self.const = 0

    def add(self, v, c):
        if c:
            self.coefs[v] = self.coefs.get(v, 0) + c

    def to_cut(self, tag):
        coefs = {v: c for v, c in self.coefs.items() if c != 0}
        assert all(isinstance(c, int) for c in coefs.values())
        return Cut(coefs, -self.const, tag)


def _add_product(expr: _Expr, c: int, j: int, k: int, table: ProductTable,
                 point):
    """Add c * (x_j x_k) to expr, relaxing in the direction sign(c) allows."""
    if c == 0:
        return
    if j == k:
        expr.add(k, c)
        return
    pair = frozenset((j, k))
    z = table.exact.get(pair)
    if z is not None:
        expr.add(z, c)
        return
    pj = point[j - 1]
    pk = point[k - 1]
    if c > 0:
        # need an upper bound on the product: min(x_j, x_k), tighter side
        expr.add(j if pj <= pk else k, c)
        return
    # need a lower bound: 0, x_j + x_k - 1, or a containing AND variable
    best_val = 0.0
    best = "zero"
    mc = pj + pk - 1.0
    if mc > best_val + 1e-12:
        best_val = mc
        best = "mccormick"
    best_z = None
    for cand in table.relaxed.get(pair, ()):
        val = point[cand - 1]
        if val > best_val + 1e-12:
            best_val = val
            best = "relaxed"
            best_z = cand
    if best == "mccormick":
        expr.add(j, c)
        expr.add(k, c)
        expr.const -= c
    elif best == "relaxed":
        expr.add(best_z, c)
    # "zero": drop the term entirely


def separate_rlt(row: NormConstraint, k: int, table: ProductTable,
                 point) -> list[Cut]:
    """Cuts from multiplying `row` by x_k and by (1 - x_k).

    Only cuts violated at the LP point by more than the separation
    tolerance are returned.
    """
    coefs, b0 = _row_as_var_form(row)
    out = []

    # factor x_k: sum c_j x_j x_k - b0 x_k >= 0
    expr = _Expr()
    for v, c in coefs.items():
        _add_product(expr, c, v, k, table, point)
    expr.add(k, -b0)
    cut = expr.to_cut("rlt")
    if cut.coefs and cut.violation(point) > VIOLATION_EPS:
        out.append(cut)

    # factor (1 - x_k): sum c_j x_j - sum c_j x_j x_k - b0 + b0 x_k >= 0
    expr = _Expr()
    for v, c in coefs.items():
        expr.add(v, c)
        _add_product(expr, -c, v, k, table, point)
    expr.const -= b0
    expr.add(k, b0)
    cut = expr.to_cut("rlt")
    if cut.coefs and cut.violation(point) > VIOLATION_EPS:
        out.append(cut)
    return out


def rlt_round(problem: EngineProblem, table: ProductTable, point,
              max_rows: int = 2, max_factors: int = 20,
              max_cuts: int = 100) -> list[Cut]:
    """One separation round: tightest rows times most fractional factors."""
    if not table.factor_vars:
        return []
    factors = sorted(
        table.factor_vars,
        key=lambda v: (abs(point[v - 1] - 0.5), v),
    )[:max_factors]

    def tightness(row):
        act = 0.0
        for c, l in zip(row.coefs, row.lits):
            val = point[abs(l) - 1]
            act += c * (val if l > 0 else 1.0 - val)
        return abs(act - row.degree)

    rows = sorted(problem.hard, key=tightness)[:max_rows]
    out = []
    seen = set()
    for row in rows:
        support = {abs(l) for l in row.lits}
        for k in factors:
            if k not in support and not any(
                frozenset((k, v)) in table.exact
                or frozenset((k, v)) in table.relaxed
                for v in support
            ):
                continue
            for cut in separate_rlt(row, k, table, point):
                fp = cut.fingerprint()
                if fp not in seen:
                    seen.add(fp)
                    out.append(cut)
    out.sort(key=lambda c: (-c.violation(point), c.fingerprint()))
    return out[:max_cuts]
