"""Trail, watched pseudo-Boolean propagation, and conflict analysis.

Propagation rule: with slack(row) = sum of coefs of non-false literals
minus the degree, negative slack is a conflict and every unassigned
literal with coef > slack is forced true.  Rows watch a prefix (by
descending coefficient) whose coefficient sum reaches degree + max coef;
only falsification of a watched literal can make the row act, so all
other assignments skip it.

Conflict analysis combines the conflicting row with reason rows: the
reason is weakened on non-falsified literals whose coefficient the
propagating coefficient does not divide, ceil-divided by that coefficient,
scaled, and cancelled against the conflict; the result is saturated after
every step and stays in conflict.  Analysis stops at the first constraint
that propagates (or conflicts) at an earlier level.  If coefficients
threaten to overflow the 62-bit budget, analysis falls back to plain
first-UIP clause learning over cardinality-weakened reasons.

Fixings injected by symmetry handling carry an unresolvable reason; they
behave like decisions during analysis, so learned constraints are always
implied by the hard rows alone.
"""

from __future__ import annotations

from .model import NormConstraint

DECISION = -1
SYMMETRY = -2

COEF_LIMIT = 1 << 62


class Trail:
    def __init__(self, n_vars: int):
        self.n = n_vars
        self.values = [-1] * (n_vars + 1)  # -1 unassigned
        self.level_of = [-1] * (n_vars + 1)
        self.reason_of = [DECISION] * (n_vars + 1)
        self.pos_of = [-1] * (n_vars + 1)
        self.stack: list[int] = []
        self.level_starts = [0]
        self.head = 0

    @property
    def level(self):
        return len(self.level_starts) - 1

    def value_of_lit(self, lit):
        v = self.values[abs(lit)]
        if v < 0:
            return -1
        return v if lit > 0 else 1 - v

    def is_false(self, lit):
        return self.value_of_lit(lit) == 0

    def is_true(self, lit):
        return self.value_of_lit(lit) == 1

    def push_level(self):
        self.level_starts.append(len(self.stack))

    def enqueue(self, lit, reason):
        """Make `lit` true.  Returns False if it is already false."""
        var = abs(lit)
        cur = self.values[var]
        want = 1 if lit > 0 else 0
        if cur >= 0:
            return cur == want
        self.values[var] = want
        self.level_of[var] = self.level
        self.reason_of[var] = reason
        self.pos_of[var] = len(self.stack)
        self.stack.append(lit)
        return True

    def pop_to_level(self, level):
        while len(self.level_starts) - 1 > level:
            start = self.level_starts.pop()
            while len(self.stack) > start:
                lit = self.stack.pop()
                self.values[abs(lit)] = -1
        self.head = min(self.head, len(self.stack))

    def assigned_count(self):
        return len(self.stack)


class _Row:
    __slots__ = ("rid", "coefs", "lits", "degree", "learned", "activity",
                 "watched")

    def __init__(self, rid, constraint: NormConstraint, learned=False):
        order = sorted(
            range(len(constraint.coefs)),
            key=lambda i: (-constraint.coefs[i], abs(constraint.lits[i])),
        )
        self.rid = rid
        self.coefs = [constraint.coefs[i] for i in order]
        self.lits = [constraint.lits[i] for i in order]
        self.degree = constraint.degree
        self.learned = learned
        self.activity = 0.0
        self.watched: list[int] = []

    def as_constraint(self):
        return NormConstraint(tuple(self.coefs), tuple(self.lits), self.degree)

    def slack(self, trail: Trail):
        s = -self.degree
        for c, l in zip(self.coefs, self.lits):
            if not trail.is_false(l):
                s += c
        return s


class Propagator:
    """Row store plus watch lists over a shared trail."""

    def __init__(self, trail: Trail, learned_cap: int = 10000):
        self.trail = trail
        self.rows: dict[int, _Row] = {}
        self.watch: dict[int, list[int]] = {}
        self.next_rid = 0
        self.learned_cap = learned_cap
        self.var_activity = [0.0] * (trail.n + 1)
        self.act_bump = 1.0
        self.stats = {"propagations": 0, "conflicts": 0, "learned_pb": 0,
                      "learned_clause": 0, "chrono_fallbacks": 0,
                      "deleted": 0}

    # -- row management ---------------------------------------------------

    def add_constraint(self, constraint: NormConstraint, learned=False):
        """Install a row and scan it once; returns (rid, conflict_rid)."""
        rid = self.next_rid
        self.next_rid += 1
        row = _Row(rid, constraint, learned)
        self.rows[rid] = row
        self._init_watches(row)
        conflict = self._full_scan(row)
        return rid, conflict

    # Watch invariant, backtrack-safe: either the non-false watched
    # coefficient sum reaches degree + maxcoef, or every literal of the
    # row is watched.  Unassignment only grows the non-false sum, so both
    # states survive backjumps.

    def _watch_all(self, row: _Row):
        watched = set(row.watched)
        for i in range(len(row.lits)):
            if i not in watched:
                row.watched.append(i)
                self.watch.setdefault(row.lits[i], []).append(row.rid)

    def _init_watches(self, row: _Row):
        target = row.degree + (row.coefs[0] if row.coefs else 0)
        have = 0
        row.watched = []
        for i in range(len(row.lits)):  # already sorted by coef desc
            if self.trail.is_false(row.lits[i]):
                continue
            row.watched.append(i)
            self.watch.setdefault(row.lits[i], []).append(row.rid)
            have += row.coefs[i]
            if have >= target:
                return
        self._watch_all(row)

    def _watch_more(self, row: _Row):
        """Restore the invariant; False means the row needs a full scan."""
        target = row.degree + (row.coefs[0] if row.coefs else 0)
        have = sum(
            row.coefs[i] for i in row.watched if not self.trail.is_false(row.lits[i])
        )
        if have >= target:
            return True
        watched = set(row.watched)
        for i in range(len(row.lits)):
            if i in watched or self.trail.is_false(row.lits[i]):
                continue
            row.watched.append(i)
            watched.add(i)
            self.watch.setdefault(row.lits[i], []).append(row.rid)
            have += row.coefs[i]
            if have >= target:
                return True
        self._watch_all(row)
        return False

    def _full_scan(self, row: _Row):
        """Slack rule on the whole row: conflict rid or None (propagates)."""
        slack = row.slack(self.trail)
        if slack < 0:
            return row.rid
        for c, l in zip(row.coefs, row.lits):
            if c > slack and self.trail.value_of_lit(l) == -1:
                self.trail.enqueue(l, row.rid)
                self.stats["propagations"] += 1
        return None

    # -- propagation -------------------------------------------------------

    def propagate(self):
        """Fixpoint propagation; returns a conflicting rid or None."""
        trail = self.trail
        while trail.head < len(trail.stack):
            lit = trail.stack[trail.head]
            trail.head += 1
            wl = self.watch.get(-lit)
            if not wl:
                continue
            idx = 0
            while idx < len(wl):
                rid = wl[idx]
                idx += 1
                row = self.rows.get(rid)
                if row is None:
                    continue
                if self._watch_more(row):
                    continue
                conflict = self._full_scan(row)
                if conflict is not None:
                    self.stats["conflicts"] += 1
                    return conflict
        return None

    # -- conflict analysis ---------------------------------------------------

    def bump_var(self, var):
        self.var_activity[var] += self.act_bump
        if self.var_activity[var] > 1e100:
            self.var_activity = [a * 1e-100 for a in self.var_activity]
            self.act_bump *= 1e-100

    def decay_activity(self):
        self.act_bump /= 0.95

    def analyze(self, conflict_rid):
        """Derive a learned constraint and a backjump level.

        Returns one of
          ("learned", NormConstraint, level)
          ("chrono", None, level-1)   analysis blocked by an unresolvable
                                      (decision or symmetry) literal
        Never called at level 0.  The trail is scanned top-down with a
        monotone index, so reason literals falsified after an already
        consumed position are never resolved again (termination).
        """
        trail = self.trail
        assert trail.level > 0
        row = self.rows[conflict_rid]
        self.bump_row(conflict_rid)
        conf = dict(zip(row.lits, row.coefs))
        degree = row.degree
        for l in conf:
            self.bump_var(abs(l))

        idx = len(trail.stack) - 1
        while True:
            lvl = self._assertion_level(conf, degree)
            if lvl is not None:
                constraint = NormConstraint(
                    tuple(conf.values()), tuple(conf.keys()), degree
                )
                self.stats["learned_pb"] += 1
                self.decay_activity()
                return ("learned", constraint, lvl)
            while idx >= 0 and -trail.stack[idx] not in conf:
                idx -= 1
            if idx < 0:
                return self._clause_fallback(conflict_rid)
            t = trail.stack[idx]
            idx -= 1
            reason_rid = trail.reason_of[abs(t)]
            if reason_rid in (DECISION, SYMMETRY):
                return self._clause_fallback(conflict_rid)
            self.bump_row(reason_rid)
            reduced = self._reduce_reason(self.rows[reason_rid], t)
            if reduced is None:
                return self._clause_fallback(conflict_rid)
            r_lits, r_degree = reduced
            scale = conf[-t]
            conf, degree = _combine(conf, degree, r_lits, r_degree, scale)
            if degree > COEF_LIMIT:
                return self._clause_fallback(conflict_rid)
            for l in r_lits:
                self.bump_var(abs(l))
            assert self._slack_full(conf, degree) < 0

    def _slack_full(self, conf, degree):
        s = -degree
        for l, c in conf.items():
            if not self.trail.is_false(l):
                s += c
        return s

    def _assertion_level(self, conf, degree):
        """Smallest earlier level where the constraint conflicts or
        propagates an (eventually) unassigned literal."""
        trail = self.trail
        for lam in range(trail.level):
            slack = -degree
            free = []
            for l, c in conf.items():
                var = abs(l)
                lv = trail.level_of[var]
                assigned = trail.values[var] >= 0 and lv <= lam
                if assigned:
                    if trail.value_of_lit(l) == 1:
                        slack += c
                else:
                    slack += c
                    free.append(c)
            if slack < 0:
                return lam
            if any(c > slack for c in free):
                return lam
        return None

    def _reduce_reason(self, row: _Row, t):
        """Weaken-then-divide the reason so the coefficient of t becomes 1."""
        lits = dict(zip(row.lits, row.coefs))
        degree = row.degree
        a = lits[t]
        if a > 1:
            for l in list(lits):
                if l == t:
                    continue
                if not self.trail.is_false(l) and lits[l] % a != 0:
                    degree -= lits[l]
                    del lits[l]
            if degree <= 0:
                return None
            lits = {l: -(-c // a) for l, c in lits.items()}
            degree = -(-degree // a)
        # saturate
        lits = {l: min(c, degree) for l, c in lits.items() if c > 0}
        if any(c > COEF_LIMIT for c in lits.values()):
            return None
        return lits, degree

    def _clause_fallback(self, conflict_rid):
        """First-UIP clause learning over cardinality-weakened reasons.

        A reason row propagating t weakens to the clause {t} union its
        literals already false before t's trail position.
        """
        trail = self.trail
        row = self.rows[conflict_rid]
        clause = {l for l in row.lits if trail.is_false(l)}
        cur = trail.level
        idx = len(trail.stack) - 1
        while True:
            cur_lits = [l for l in clause if trail.level_of[abs(l)] == cur]
            if len(cur_lits) <= 1:
                break
            while idx >= 0 and -trail.stack[idx] not in clause:
                idx -= 1
            if idx < 0:
                break
            t = trail.stack[idx]
            t_pos = idx
            idx -= 1
            reason_rid = trail.reason_of[abs(t)]
            if reason_rid in (DECISION, SYMMETRY):
                # another unresolvable literal at the current level
                self.stats["chrono_fallbacks"] += 1
                return ("chrono", None, trail.level - 1)
            reason = self.rows[reason_rid]
            clause.discard(-t)
            for l in reason.lits:
                if (
                    l != t
                    and trail.is_false(l)
                    and trail.pos_of[abs(l)] < t_pos
                ):
                    clause.add(l)
            for l in clause:
                self.bump_var(abs(l))
        if not clause:
            # conflict independent of any assignment: learn 0 >= 1
            constraint = NormConstraint((), (), 1)
            self.stats["learned_clause"] += 1
            return ("learned", constraint, 0)
        constraint = NormConstraint(
            (1,) * len(clause), tuple(sorted(clause, key=abs)), 1
        )
        lvl = self._assertion_level(
            dict.fromkeys(constraint.lits, 1), constraint.degree
        )
        if lvl is None:
            self.stats["chrono_fallbacks"] += 1
            return ("chrono", None, trail.level - 1)
        self.stats["learned_clause"] += 1
        self.decay_activity()
        return ("learned", constraint, lvl)

    # -- learned-row housekeeping -----------------------------------------

    def learn(self, constraint: NormConstraint):
        """Install a learned row, asserting that it propagates right away."""
        rid, conflict = self.add_constraint(constraint, learned=True)
        self.rows[rid].activity = self.act_bump
        self._maybe_reduce_db()
        return rid, conflict

    def bump_row(self, rid):
        row = self.rows.get(rid)
        if row is not None and row.learned:
            row.activity += self.act_bump

    def _maybe_reduce_db(self):
        learned = [r for r in self.rows.values() if r.learned]
        if len(learned) <= self.learned_cap:
            return
        protected = set()
        for var in range(1, self.trail.n + 1):
            rid = self.trail.reason_of[var]
            if self.trail.values[var] >= 0 and rid >= 0:
                protected.add(rid)
        victims = [
            r for r in learned
            if len(r.lits) > 2 and r.rid not in protected
        ]
        victims.sort(key=lambda r: (r.activity, -r.rid))
        for r in victims[: len(victims) // 2]:
            del self.rows[r.rid]
            self.stats["deleted"] += 1
        # watch lists are cleaned lazily in propagate()


def _combine(conf, degree, r_lits, r_degree, scale):
    """conf + scale * reason with opposite-literal cancellation."""
    out = dict(conf)
    out_degree = degree + scale * r_degree
    for l, c in r_lits.items():
        c = c * scale
        if l in out:
            out[l] += c
        elif -l in out:
            other = out.pop(-l)
            if other > c:
                out[-l] = other - c
                out_degree -= c
            elif other < c:
                out[l] = c - other
                out_degree -= other
            else:
                out_degree -= c
        else:
            out[l] = c
    # saturate
    out = {l: min(c, out_degree) for l, c in out.items() if c > 0}
    return out, out_degree


def propagate(prop: Propagator):
    """Module-level convenience wrapper (fixpoint, conflict rid or None)."""
    return prop.propagate()


def analyze(prop: Propagator, conflict_rid: int):
    return prop.analyze(conflict_rid)
