"""Shared helpers for the test suite: random instance generators and
independent reference implementations (naive propagation, implication
checks, engine-space enumeration)."""

from __future__ import annotations

import itertools
import random

from pbsolve.model import EngineProblem, NormConstraint
from pbsolve.opb import Instance, PbConstraint


def random_instance(
    rng: random.Random,
    n_max=10,
    m_max=8,
    coef_max=6,
    monomials=False,
    wbo=False,
    decision=False,
    n_min=2,
):
    """A random instance; relations mix >= and =, coefficients mix signs."""
    n = rng.randint(n_min, n_max)
    m = rng.randint(1, m_max)
    cons = []
    for _ in range(m):
        k = rng.randint(1, min(4, n))
        vars_ = rng.sample(range(1, n + 1), k)
        terms = []
        for v in vars_:
            c = rng.randint(1, coef_max) * rng.choice((1, -1))
            if monomials and rng.random() < 0.35 and n >= 2:
                size = rng.randint(2, min(3, n))
                mono = tuple(sorted(rng.sample(range(1, n + 1), size)))
            else:
                mono = (v,)
            terms.append((c, mono))
        # dedupe monomials within the constraint
        merged = {}
        for c, mono in terms:
            merged[mono] = merged.get(mono, 0) + c
        terms = [(c, mono) for mono, c in merged.items() if c != 0]
        if not terms:
            terms = [(1, (rng.randint(1, n),))]
        relation = "=" if rng.random() < 0.2 else ">="
        bound = sum(abs(c) for c, _ in terms)
        rhs = rng.randint(-bound, bound)
        weight = None
        if wbo and rng.random() < 0.7:
            weight = rng.randint(1, 5)
        cons.append(PbConstraint(terms, relation, rhs, weight))

    objective = None
    top = None
    if wbo:
        if any(c.weight is None for c in cons) or rng.random() < 0.5:
            pass
        total = sum(c.weight or 0 for c in cons)
        if rng.random() < 0.6:
            top = rng.randint(1, max(1, total + 1))
    elif not decision:
        k = rng.randint(1, n)
        objective = []
        for v in rng.sample(range(1, n + 1), k):
            c = rng.randint(1, coef_max) * rng.choice((1, -1))
            if monomials and rng.random() < 0.25 and n >= 2:
                size = rng.randint(2, min(3, n))
                mono = tuple(sorted(rng.sample(range(1, n + 1), size)))
            else:
                mono = (v,)
            objective.append((c, mono))
        merged = {}
        for c, mono in objective:
            merged[mono] = merged.get(mono, 0) + c
        objective = [(c, mono) for mono, c in merged.items() if c != 0]

    inst = Instance(
        n_vars=n,
        objective=objective,
        constraints=cons,
        is_wbo=wbo,
        top_cost=top,
    )
    from pbsolve.opb import compute_intsize

    inst.intsize = compute_intsize(inst)
    return inst


def lit_value(lit, values):
    return values[lit] if lit > 0 else 1 - values[-lit]


def row_activity(row: NormConstraint, values) -> int:
    return sum(c * lit_value(l, values) for c, l in zip(row.coefs, row.lits))


def enumerate_engine_feasible(problem: EngineProblem):
    """Yield full engine assignments (list indexed by var, entry 0 unused)
    that satisfy every propagation row.  Enumerates all n_total bits."""
    n = problem.n_total
    rows = problem.propagation_rows()
    for code in range(1 << n):
        values = [0] * (n + 1)
        for i in range(1, n + 1):
            values[i] = (code >> (i - 1)) & 1
        if all(row_activity(r, values) >= r.degree for r in rows):
            yield values


def engine_optimum_by_completion(problem: EngineProblem):
    """Best engine objective over completions of original-variable bits.

    Relies on AND/indicator variables being determined by the x-part: the
    completion satisfies all link rows, and any feasible full assignment is
    dominated by the completion of its x-part.
    """
    best = None
    best_values = None
    n = problem.n_orig
    rows = problem.propagation_rows()
    for code in range(1 << n):
        xbits = [(code >> i) & 1 for i in range(n)]
        values = problem.complete_assignment(xbits)
        if not all(row_activity(r, values) >= r.degree for r in rows):
            continue
        obj = problem.objective_value(values)
        if best is None or obj < best:
            best, best_values = obj, values
    return best, best_values


def implied_by(rows, constraint, n_vars):
    """True iff every 0/1 point satisfying all `rows` satisfies `constraint`."""
    for code in range(1 << n_vars):
        values = [0] * (n_vars + 1)
        for i in range(1, n_vars + 1):
            values[i] = (code >> (i - 1)) & 1
        if all(row_activity(r, values) >= r.degree for r in rows):
            if row_activity(constraint, values) < constraint.degree:
                return False
    return True


def naive_propagate(rows, fixed):
    """Reference propagation fixpoint: returns (conflict, assignments dict).

    `fixed` maps var -> 0/1.  Implements the slack rule directly with no
    watching machinery.
    """
    assign = dict(fixed)
    changed = True
    while changed:
        changed = False
        for row in rows:
            slack = -row.degree
            for c, l in zip(row.coefs, row.lits):
                v = abs(l)
                if v in assign:
                    val = assign[v] if l > 0 else 1 - assign[v]
                    if val == 1:
                        slack += c
                else:
                    slack += c
            if slack < 0:
                return True, assign
            for c, l in zip(row.coefs, row.lits):
                v = abs(l)
                if v not in assign and c > slack:
                    assign[v] = 1 if l > 0 else 0
                    changed = True
    return False, assign


def random_norm_row(rng: random.Random, n, coef_max=8):
    k = rng.randint(1, n)
    vars_ = rng.sample(range(1, n + 1), k)
    coefs = [rng.randint(1, coef_max) for _ in vars_]
    lits = [v * rng.choice((1, -1)) for v in vars_]
    degree = rng.randint(1, max(1, sum(coefs)))
    coefs = [min(c, degree) for c in coefs]
    return NormConstraint(tuple(coefs), tuple(lits), degree)


def pigeonhole_opb(pigeons, holes):
    """Classic placement instance: every pigeon needs a hole, holes hold one.

    UNSAT when pigeons > holes; fully symmetric in both dimensions.
    Variable (p,h) -> index p*holes + h + 1.
    """
    lines = []
    for p in range(pigeons):
        terms = " ".join("+1 x%d" % (p * holes + h + 1) for h in range(holes))
        lines.append("%s >= 1 ;" % terms)
    for h in range(holes):
        terms = " ".join("-1 x%d" % (p * holes + h + 1) for p in range(pigeons))
        lines.append("%s >= -1 ;" % terms)
    return "\n".join(lines) + "\n"
