"""Transformation of parsed instances into the engine's normalized form.

Every monomial of size >= 2 is replaced by an auxiliary AND variable z with
clause links z <= x_j and z >= sum x_j - (|M|-1); identical monomials share
one auxiliary across constraints and objective.  Soft (WBO) constraints get
an indicator variable y; because every normalized row has minimum activity
0, the indicator semantics y=1 -> row is exactly the pseudo-Boolean row
  sum a_j l_j + degree * (1-y) >= degree
which is what propagation and local search operate on.

The module also hosts the exhaustive oracle used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import opb
from .opb import Instance, STATUS_OPTIMUM, STATUS_SAT, STATUS_UNSAT


class NormConstraint:
    """sum of coef * literal >= degree with positive coefs, distinct vars.

    Literals are signed variable indices; -v stands for (1 - x_v).
    """

    __slots__ = ("coefs", "lits", "degree")

    def __init__(self, coefs, lits, degree):
        order = sorted(range(len(lits)), key=lambda i: abs(lits[i]))
        self.coefs = tuple(coefs[i] for i in order)
        self.lits = tuple(lits[i] for i in order)
        self.degree = degree

    def key(self):
        return (self.degree, tuple(zip(self.coefs, self.lits)))

    def __eq__(self, other):
        return isinstance(other, NormConstraint) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        body = " + ".join(
            "%d*%s" % (c, ("x%d" % l) if l > 0 else ("~x%d" % -l))
            for c, l in zip(self.coefs, self.lits)
        )
        return "<%s >= %d>" % (body, self.degree)

    def sum_coefs(self):
        return sum(self.coefs)

    @property
    def infeasible(self):
        return self.sum_coefs() < self.degree

    def satisfied_by(self, values):
        """Exact check against a full assignment (indexable by var)."""
        act = 0
        for c, l in zip(self.coefs, self.lits):
            v = values[l] if l > 0 else 1 - values[-l]
            act += c * v
        return act >= self.degree


@dataclass(frozen=True)
class AndDef:
    z: int
    operands: tuple[int, ...]


@dataclass
class IndicatorRow:
    y: int
    row: NormConstraint
    weight: int

    def as_pb_row(self) -> NormConstraint:
        """Exact linear form: row + degree*(1-y) >= degree."""
        d = self.row.degree
        return NormConstraint(
            self.row.coefs + (d,), self.row.lits + (-self.y,), d
        )


def normalize(terms, relation, rhs):
    """Turn integer linear terms REL rhs into >=-rows over literals.

    `terms` is an iterable of (coef, lit) with signed literals; equality
    yields two rows.  Redundant rows (degree <= 0) are dropped; a returned
    row with sum(coefs) < degree is infeasible and must be flagged by the
    caller.  Coefficients are saturated at the degree.
    """
    if relation == "=":
        neg = [(-c, l) for c, l in terms]
        return normalize(terms, ">=", rhs) + normalize(neg, ">=", -rhs)
    if relation != ">=":
        raise ValueError("unsupported relation %r" % relation)

    coef_x: dict[int, int] = {}
    const = 0
    for c, lit in terms:
        if c == 0:
            continue
        v = abs(lit)
        if lit > 0:
            coef_x[v] = coef_x.get(v, 0) + c
        else:
            coef_x[v] = coef_x.get(v, 0) - c
            const += c
    degree = rhs - const
    coefs, lits = [], []
    for v in sorted(coef_x):
        c = coef_x[v]
        if c > 0:
            coefs.append(c)
            lits.append(v)
        elif c < 0:
            coefs.append(-c)
            lits.append(-v)
            degree += -c
    if degree <= 0:
        return []
    coefs = [min(c, degree) for c in coefs]
    return [NormConstraint(coefs, lits, degree)]


@dataclass
class EngineProblem:
    n_orig: int
    n_total: int
    hard: list[NormConstraint]
    indicators: list[IndicatorRow]
    and_defs: list[AndDef]
    obj_coefs: dict[int, int]
    obj_offset: int
    source: Instance | None = None
    trivially_unsat: bool = False
    # (y, weight, body rows) for every soft constraint, including bodies
    # that were dropped as redundant or flagged infeasible.
    soft_groups: list[tuple[int, int, list[NormConstraint]]] = field(
        default_factory=list
    )
    _prop_rows: list[NormConstraint] | None = field(default=None, repr=False)

    @property
    def indicator_vars(self):
        return tuple(ind.y for ind in self.indicators)

    @property
    def has_objective(self):
        return bool(self.obj_coefs) or self.obj_offset != 0 or (
            self.source is not None
            and (self.source.objective is not None or self.source.is_wbo)
        )

    def propagation_rows(self) -> list[NormConstraint]:
        """Hard rows plus the exact PB form of every indicator row."""
        if self._prop_rows is None:
            rows = list(self.hard)
            seen_y = set()
            for ind in self.indicators:
                rows.append(ind.as_pb_row())
                seen_y.add(ind.y)
            self._prop_rows = rows
        return self._prop_rows

    def objective_value(self, values) -> int:
        return sum(c * values[v] for v, c in self.obj_coefs.items()) + self.obj_offset

    def complete_assignment(self, xbits):
        """Extend original-variable bits to all engine variables.

        AND variables are set to the product of their operands; indicator
        variables are set to 1 exactly when all their rows hold.
        """
        values = [0] * (self.n_total + 1)
        for i, b in enumerate(xbits, start=1):
            values[i] = int(b)
        for ad in self.and_defs:
            values[ad.z] = int(all(values[v] for v in ad.operands))
        for y, _w, rows in self.soft_groups:
            values[y] = int(all(r.satisfied_by(values) for r in rows))
        return values


def linearize(inst: Instance) -> EngineProblem:
    """Build the engine problem: AND auxiliaries, indicators, normalized rows."""
    mono_var: dict[tuple[int, ...], int] = {}
    and_defs: list[AndDef] = []
    next_var = inst.n_vars + 1

    def var_for(mono):
        nonlocal next_var
        if len(mono) == 1:
            return mono[0]
        z = mono_var.get(mono)
        if z is None:
            z = next_var
            next_var += 1
            mono_var[mono] = z
            and_defs.append(AndDef(z, mono))
        return z

    def linear_terms(terms):
        return [(c, var_for(mono)) for c, mono in terms]

    obj_terms = inst.objective if inst.objective is not None else []
    obj_linear = linear_terms(obj_terms)
    con_linear = [linear_terms(con.terms) for con in inst.constraints]

    hard: list[NormConstraint] = []
    indicators: list[IndicatorRow] = []
    trivially_unsat = False

    # Linking rows: z <= x_j for every operand, z >= sum x_j - (|M|-1).
    for ad in and_defs:
        for v in ad.operands:
            hard.append(NormConstraint((1, 1), (v, -ad.z), 1))
        hard.append(
            NormConstraint(
                (1,) + (1,) * len(ad.operands),
                (ad.z,) + tuple(-v for v in ad.operands),
                1,
            )
        )

    soft_pending = []  # (weight, [rows]) in input order
    for con, terms in zip(inst.constraints, con_linear):
        rows = normalize(terms, con.relation, con.rhs)
        if con.weight is None:
            for row in rows:
                if row.infeasible:
                    trivially_unsat = True
                hard.append(row)
        else:
            soft_pending.append((con.weight, rows))

    obj_coefs: dict[int, int] = {}
    obj_offset = inst.obj_offset
    for c, v in obj_linear:
        obj_coefs[v] = obj_coefs.get(v, 0) + c

    total_weight = 0
    y_vars = []
    soft_groups = []
    for weight, rows in soft_pending:
        y = next_var
        next_var += 1
        y_vars.append(y)
        total_weight += weight
        soft_groups.append((y, weight, rows))
        # min sum w*(1-y): constant w, coefficient -w on y.
        obj_coefs[y] = obj_coefs.get(y, 0) - weight
        obj_offset += weight
        if any(row.infeasible for row in rows):
            # The soft body can never hold; force y = 0.
            hard.append(NormConstraint((1,), (-y,), 1))
            continue
        if not rows:
            # Redundant body: y may always be 1, fix it to dodge search work.
            hard.append(NormConstraint((1,), (y,), 1))
            continue
        for row in rows:
            indicators.append(IndicatorRow(y, row, weight))

    if inst.is_wbo and inst.top_cost is not None:
        # Violation cost strictly below top: sum w*(1-y) <= top - 1.
        terms = [(w, y) for y, (w, _) in zip(y_vars, soft_pending)]
        rows = normalize(terms, ">=", total_weight - inst.top_cost + 1)
        for row in rows:
            if row.infeasible:
                trivially_unsat = True
            hard.append(row)

    return EngineProblem(
        n_orig=inst.n_vars,
        n_total=next_var - 1,
        hard=hard,
        indicators=indicators,
        and_defs=and_defs,
        obj_coefs={v: c for v, c in obj_coefs.items() if c != 0},
        obj_offset=obj_offset,
        source=inst,
        trivially_unsat=trivially_unsat,
        soft_groups=soft_groups,
    )


def _assignment_matrix(n):
    codes = np.arange(1 << n, dtype=np.int64)
    return (codes[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1


def _monomial_column(bits, mono):
    col = bits[:, mono[0] - 1]
    for v in mono[1:]:
        col = col * bits[:, v - 1]
    return col


def oracle_solve(inst: Instance, var_cap: int = 22):
    """Exhaustive reference solver over the original variables.

    Returns (status, best_obj, model) with model a 0/1 tuple indexed by
    variable order x1..xn.  Arithmetic is exact: the intsize cap keeps all
    activities within int64.
    """
    n = inst.n_vars
    if n > var_cap:
        raise ValueError("oracle limited to %d variables, got %d" % (var_cap, n))
    bits = _assignment_matrix(n)
    rows = bits.shape[0]

    hard_ok = np.ones(rows, dtype=bool)
    cost = np.zeros(rows, dtype=np.int64)
    for con in inst.constraints:
        act = np.zeros(rows, dtype=np.int64)
        for c, mono in con.terms:
            act += c * _monomial_column(bits, mono)
        sat = (act == con.rhs) if con.relation == "=" else (act >= con.rhs)
        if con.weight is None:
            hard_ok &= sat
        else:
            cost += con.weight * (~sat).astype(np.int64)

    if inst.is_wbo:
        feasible = hard_ok
        if inst.top_cost is not None:
            feasible = feasible & (cost < inst.top_cost)
        if not feasible.any():
            return (STATUS_UNSAT, None, None)
        masked = np.where(feasible, cost, np.iinfo(np.int64).max)
        idx = int(np.argmin(masked))
        return (STATUS_OPTIMUM, int(cost[idx]), tuple(int(b) for b in bits[idx]))

    if not hard_ok.any():
        return (STATUS_UNSAT, None, None)
    if inst.objective is None:
        idx = int(np.argmax(hard_ok))
        return (STATUS_SAT, None, tuple(int(b) for b in bits[idx]))
    obj = np.full(rows, inst.obj_offset, dtype=np.int64)
    for c, mono in inst.objective:
        obj += c * _monomial_column(bits, mono)
    masked = np.where(hard_ok, obj, np.iinfo(np.int64).max)
    idx = int(np.argmin(masked))
    return (STATUS_OPTIMUM, int(obj[idx]), tuple(int(b) for b in bits[idx]))
