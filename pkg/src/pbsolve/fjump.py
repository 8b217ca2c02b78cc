"""Integer-only Feasibility Jump local search over normalized rows.

All state is integral: activities, violations (max(0, degree - activity)),
row weights, and per-variable jump scores.  A flip's score is the exact
change of sum(weight * violation) it would cause; the most negative score
wins, ties break uniformly at random under the run's seed.  When no flip
improves, every violated row's weight grows by one and a random literal of
a random violated row is flipped.

The objective is an optional pseudo-row: once a feasible assignment with
value B is known, the row enforces objective <= B - 1, turning
optimization into a sequence of decision searches.  Python integers keep
every sum exact; the parser's intsize cap already bounds activities well
below 2**62 either way.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .model import EngineProblem, NormConstraint, normalize


@dataclass
class FjResult:
    assignment: list | None
    objective: int | None
    steps: int
    feasible_found: int
    trace: list = field(default_factory=list)


class FjState:
    """Assignment plus exact incremental activities, weights, and scores."""

    def __init__(self, problem: EngineProblem, seed: int = 0,
                 use_objective: bool = True, record_trace: bool = False):
        self.problem = problem
        self.rng = random.Random(seed)
        self.n = problem.n_total
        self.values = [0] * (self.n + 1)
        self.record_trace = record_trace
        self.trace: list = []

        rows = problem.propagation_rows()
        self.coefs = [list(r.coefs) for r in rows]
        self.lits = [list(r.lits) for r in rows]
        self.degree = [r.degree for r in rows]
        self.weight = [1] * len(rows)
        self.occ: list[list[tuple[int, int, int]]] = [[] for _ in range(self.n + 1)]
        for ri, r in enumerate(rows):
            for c, l in zip(r.coefs, r.lits):
                self.occ[abs(l)].append((ri, c, l))

        self.obj_row = None  # (coefs, lits, degree) once a bound exists
        self.obj_weight = 1
        self.obj_activity = 0
        self.use_objective = use_objective and problem.has_objective

        self.activity = [0] * len(rows)
        for ri in range(len(rows)):
            self.activity[ri] = self._exact_activity(ri)
        self.violated = {
            ri for ri in range(len(rows))
            if self.activity[ri] < self.degree[ri]
        }
        self.score = [0] * (self.n + 1)
        for v in range(1, self.n + 1):
            self.score[v] = self.recompute_score(v)

    # -- exact helpers ----------------------------------------------------

    def _lit_val(self, l):
        return self.values[l] if l > 0 else 1 - self.values[-l]

    def _exact_activity(self, ri):
        return sum(
            c * self._lit_val(l) for c, l in zip(self.coefs[ri], self.lits[ri])
        )

    def _viol(self, degree, activity):
        d = degree - activity
        return d if d > 0 else 0

    def recompute_score(self, var) -> int:
        """From-scratch score: reference for the incremental cache."""
        total = 0
        for ri, c, l in self.occ[var]:
            delta = c if self._lit_val(l) == 0 else -c
            act = self.activity[ri]
            total += self.weight[ri] * (
                self._viol(self.degree[ri], act + delta)
                - self._viol(self.degree[ri], act)
            )
        if self.obj_row is not None:
            coefs, lits, degree = self.obj_row
            for c, l in zip(coefs, lits):
                if abs(l) == var:
                    delta = c if self._lit_val(l) == 0 else -c
                    total += self.obj_weight * (
                        self._viol(degree, self.obj_activity + delta)
                        - self._viol(degree, self.obj_activity)
                    )
        return total

    def score_of(self, var) -> int:
        return self.score[var]

    # -- incremental updates ----------------------------------------------

    def _apply_row_score(self, ri, sign):
        w = self.weight[ri] * sign
        act = self.activity[ri]
        deg = self.degree[ri]
        base = self._viol(deg, act)
        for c, l in zip(self.coefs[ri], self.lits[ri]):
            delta = c if self._lit_val(l) == 0 else -c
            self.score[abs(l)] += w * (self._viol(deg, act + delta) - base)

    def _apply_obj_score(self, sign):
        if self.obj_row is None:
            return
        coefs, lits, degree = self.obj_row
        w = self.obj_weight * sign
        base = self._viol(degree, self.obj_activity)
        for c, l in zip(coefs, lits):
            delta = c if self._lit_val(l) == 0 else -c
            self.score[abs(l)] += w * (
                self._viol(degree, self.obj_activity + delta) - base
            )

    def flip(self, var):
        touched = self.occ[var]
        for ri, _c, _l in touched:
            self._apply_row_score(ri, -1)
        obj_touch = self.obj_row is not None and any(
            abs(l) == var for l in self.obj_row[1]
        )
        if obj_touch:
            self._apply_obj_score(-1)

        for ri, c, l in touched:
            delta = c if self._lit_val(l) == 0 else -c
            self.activity[ri] += delta
            if self.activity[ri] < self.degree[ri]:
                self.violated.add(ri)
            else:
                self.violated.discard(ri)
        if obj_touch:
            coefs, lits, _deg = self.obj_row
            for c, l in zip(coefs, lits):
                if abs(l) == var:
                    self.obj_activity += c if self._lit_val(l) == 0 else -c
        self.values[var] ^= 1

        for ri, _c, _l in touched:
            self._apply_row_score(ri, +1)
        if obj_touch:
            self._apply_obj_score(+1)

    def bump_violated(self):
        for ri in self.violated:
            self._apply_row_score(ri, -1)
            self.weight[ri] += 1
            self._apply_row_score(ri, +1)
        if self.obj_row is not None and self._obj_violated():
            self._apply_obj_score(-1)
            self.obj_weight += 1
            self._apply_obj_score(+1)

    def _obj_violated(self):
        if self.obj_row is None:
            return False
        return self.obj_activity < self.obj_row[2]

    def set_objective_bound(self, bound):
        """Require objective value <= bound via the pseudo-row."""
        self._apply_obj_score(-1)
        terms = [(-c, v) for v, c in self.problem.obj_coefs.items()]
        rows = normalize(terms, ">=", -(bound - self.problem.obj_offset))
        if not rows:
            self.obj_row = None
        else:
            row = rows[0]
            self.obj_row = (list(row.coefs), list(row.lits), row.degree)
            self.obj_activity = sum(
                c * self._lit_val(l)
                for c, l in zip(self.obj_row[0], self.obj_row[1])
            )
            self._apply_obj_score(+1)

    def hard_feasible(self):
        return not self.violated

    def verify_exact(self):
        """Recompute all activities from scratch; returns True iff the
        cached state matches and every row holds."""
        for ri in range(len(self.coefs)):
            exact = self._exact_activity(ri)
            if exact != self.activity[ri]:
                return False
            if exact < self.degree[ri]:
                return False
        return True


def fj_score(state: FjState, var: int) -> int:
    """Exact weighted-violation delta of flipping `var` (cached)."""
    return state.score_of(var)


def fj_run(problem: EngineProblem, time_budget: float | None = None,
           seed: int = 0, max_steps: int | None = None,
           use_objective: bool = True, record_trace: bool = False,
           initial=None) -> FjResult:
    """Run the local search; returns the best exactly-verified assignment.

    Stops at `max_steps` flips/bumps or when `time_budget` seconds pass
    (checked every few steps); deterministic given seed and max_steps.
    """
    if problem.trivially_unsat:
        return FjResult(None, None, 0, 0)
    state = FjState(problem, seed=seed, use_objective=use_objective,
                    record_trace=record_trace)
    if initial is not None:
        for v in range(1, problem.n_total + 1):
            if initial[v] and not state.values[v]:
                state.flip(v)
            elif not initial[v] and state.values[v]:
                state.flip(v)

    best_assignment = None
    best_obj = None
    found = 0
    deadline = time.monotonic() + time_budget if time_budget else None
    steps = 0
    flip_vars = [
        v for v in range(1, problem.n_total + 1) if state.occ[v]
    ] or list(range(1, problem.n_total + 1))

    def harvest():
        nonlocal best_assignment, best_obj, found
        if not state.hard_feasible():
            return
        assert state.verify_exact()
        obj = problem.objective_value(state.values)
        if best_obj is None or obj < best_obj:
            best_assignment = list(state.values)
            best_obj = obj
            found += 1
            if state.use_objective:
                state.set_objective_bound(obj - 1)

    harvest()
    while True:
        if max_steps is not None and steps >= max_steps:
            break
        if deadline is not None and steps % 16 == 0 and time.monotonic() > deadline:
            break
        if best_assignment is not None and not state.use_objective:
            break  # decision search: first feasible wins
        steps += 1
        best_score = None
        cands = []
        for v in flip_vars:
            s = state.score[v]
            if best_score is None or s < best_score:
                best_score = s
                cands = [v]
            elif s == best_score:
                cands.append(v)
        if best_score is not None and best_score < 0:
            v = cands[0] if len(cands) == 1 else state.rng.choice(cands)
            if state.record_trace:
                state.trace.append(("flip", v, best_score))
            state.flip(v)
            harvest()
            continue
        # local minimum: reweight and kick
        viol = sorted(state.violated)
        if state._obj_violated():
            viol.append(-1)
        if not viol:
            # feasible, nothing violated, nothing improving: done
            break
        state.bump_violated()
        target = viol[0] if len(viol) == 1 else state.rng.choice(viol)
        lits = state.obj_row[1] if target == -1 else state.lits[target]
        lit = lits[0] if len(lits) == 1 else state.rng.choice(lits)
        if state.record_trace:
            state.trace.append(("bump", target, abs(lit)))
        state.flip(abs(lit))
        harvest()

    return FjResult(best_assignment, best_obj, steps, found, state.trace)
