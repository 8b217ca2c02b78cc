import random

import pytest

from pbsolve.model import NormConstraint, linearize, normalize
from pbsolve.propagate import DECISION, SYMMETRY, Propagator, Trail, _Row

from gen import implied_by, naive_propagate, random_norm_row


def setup(rows, n):
    trail = Trail(n)
    prop = Propagator(trail)
    conflict = None
    for r in rows:
        _, c = prop.add_constraint(r)
        if conflict is None:
            conflict = c
    return trail, prop, conflict


def test_conflict_on_negative_slack():
    # 2x1 + x2 + x3 >= 3 with x1 false: slack -1
    row = NormConstraint((2, 1, 1), (1, 2, 3), 3)
    trail, prop, _ = setup([NormConstraint((1,), (-1,), 1), row], 3)
    conflict = prop.propagate()
    assert conflict is not None
    assert prop.rows[conflict].slack(trail) < 0


def test_propagates_large_coefficient():
    row = NormConstraint((2, 1, 1), (1, 2, 3), 3)
    trail, prop, conflict = setup([row], 3)
    assert conflict is None
    assert prop.propagate() is None
    assert trail.values[1] == 1  # slack 1 < coef 2


def test_unit_clause_propagation():
    rows = [NormConstraint((1, 1), (1, 2), 1)]
    trail, prop, _ = setup(rows, 2)
    trail.push_level()
    trail.enqueue(-1, DECISION)  # x1 false
    assert prop.propagate() is None
    assert trail.values[2] == 1


def test_reduce_reason_division():
    # reason 2x1 + x2 + x3 >= 2 with x2, x3 false propagates x1;
    # reduction divides by 2 with ceiling: x1 + x2 + x3 >= 1
    trail = Trail(3)
    prop = Propagator(trail)
    trail.push_level()
    trail.enqueue(-2, DECISION)
    trail.push_level()
    trail.enqueue(-3, DECISION)
    row = _Row(0, NormConstraint((2, 1, 1), (1, 2, 3), 2))
    lits, degree = prop._reduce_reason(row, 1)
    assert degree == 1
    assert lits == {1: 1, 2: 1, 3: 1}


def test_clause_resolution_combine_step():
    # conflict x1 + x2 >= 1, reason x3 + ~x1 >= 1 propagating ~x1:
    # cancellation on x1 leaves the resolvent x2 + x3 >= 1
    from pbsolve.propagate import _combine

    conf = {1: 1, 2: 1}
    lits, degree = _combine(conf, 1, {3: 1, -1: 1}, 1, 1)
    assert lits == {2: 1, 3: 1} and degree == 1
    learned = NormConstraint(tuple(lits.values()), tuple(lits.keys()), degree)
    assert implied_by(
        [NormConstraint((1, 1), (1, 2), 1), NormConstraint((1, 1), (3, -1), 1)],
        learned,
        3,
    )


def test_clause_resolution_end_to_end():
    # deciding x5 = 0 propagates ~x1 and ~x2, falsifying x1 + x2 >= 1;
    # analysis must learn the implied unit x5 >= 1
    a = NormConstraint((1, 1), (-1, 5), 1)  # x1 -> x5
    b = NormConstraint((1, 1), (-2, 5), 1)  # x2 -> x5
    c = NormConstraint((1, 1), (1, 2), 1)
    trail, prop, _ = setup([a, b, c], 5)
    trail.push_level()
    assert trail.enqueue(-5, DECISION)
    conflict = prop.propagate()
    assert conflict is not None
    kind, learned, level = prop.analyze(conflict)
    assert kind == "learned"
    assert level == 0
    assert learned == NormConstraint((1,), (5,), 1)
    assert implied_by([a, b, c], learned, 5)


def mini_cdcl(rows, n, max_conflicts=20000, check_assertive=True):
    """Tiny decision loop driving the propagator; returns (sat, learned)."""
    trail = Trail(n)
    prop = Propagator(trail)
    learned = []
    conflict = None
    for r in rows:
        _, c = prop.add_constraint(r)
        if conflict is None:
            conflict = c
    conflicts = 0
    while True:
        if conflict is None:
            conflict = prop.propagate()
        if conflict is not None:
            conflicts += 1
            assert conflicts < max_conflicts, "conflict budget blown"
            if trail.level == 0:
                return False, learned
            kind, con, lvl = prop.analyze(conflict)
            conflict = None
            assert kind == "learned", "unexpected chronological fallback"
            trail.pop_to_level(lvl)
            learned.append(con)
            before = len(trail.stack)
            _, conflict = prop.learn(con)
            if check_assertive:
                assert conflict is not None or len(trail.stack) > before, (
                    "learned constraint not assertive after backjump"
                )
            continue
        v = next((u for u in range(1, n + 1) if trail.values[u] < 0), None)
        if v is None:
            return True, learned
        trail.push_level()
        trail.enqueue(v, DECISION)


def test_mini_cdcl_simple_unsat():
    rows = [
        NormConstraint((1,), (1,), 1),
        NormConstraint((1,), (-1,), 1),
    ]
    sat, _ = mini_cdcl(rows, 1)
    assert not sat


def test_learned_constraints_implied_random_unsat():
    rng = random.Random(2024)
    tested = 0
    while tested < 120:
        n = rng.randint(3, 9)
        rows = [random_norm_row(rng, n) for _ in range(rng.randint(3, 9))]
        # force unsatisfiability half the time with a contradictory pair
        if rng.random() < 0.6:
            k = rng.randint(1, n)
            vs = rng.sample(range(1, n + 1), k)
            rows.append(NormConstraint((1,) * k, tuple(vs), k))
            rows.append(NormConstraint((1,) * k, tuple(-v for v in vs), k))
        sat, learned = mini_cdcl(rows, n)
        from gen import row_activity

        any_feasible = any(
            all(
                row_activity(r, [0] + [(code >> i) & 1 for i in range(n)])
                >= r.degree
                for r in rows
            )
            for code in range(1 << n)
        )
        assert sat == any_feasible
        if not learned:
            continue
        tested += 1
        for con in learned:
            assert implied_by(rows, con, n), (rows, con)


def test_propagation_fixpoint_order_independent():
    rng = random.Random(31337)
    for _ in range(60):
        n = rng.randint(2, 8)
        rows = [random_norm_row(rng, n) for _ in range(rng.randint(1, 7))]
        results = []
        for shuffle_seed in range(3):
            order = list(rows)
            random.Random(shuffle_seed).shuffle(order)
            trail, prop, conflict = setup(order, n)
            if conflict is None:
                conflict = prop.propagate()
            results.append(
                (conflict is not None,
                 frozenset((v, trail.values[v]) for v in range(1, n + 1)
                           if trail.values[v] >= 0))
            )
        assert all(r[0] == results[0][0] for r in results)
        if not results[0][0]:
            assert all(r[1] == results[0][1] for r in results)


def test_watched_vs_naive_with_backtracking():
    rng = random.Random(777)
    for _ in range(120):
        n = rng.randint(2, 9)
        rows = [random_norm_row(rng, n) for _ in range(rng.randint(1, 8))]
        trail, prop, conflict = setup(rows, n)
        if conflict is None:
            conflict = prop.propagate()
        decisions = []  # (level, var, value)
        for _step in range(25):
            if conflict is not None:
                break
            op = rng.random()
            if op < 0.65 or trail.level == 0:
                free = [v for v in range(1, n + 1) if trail.values[v] < 0]
                if not free:
                    break
                v = rng.choice(free)
                val = rng.randint(0, 1)
                trail.push_level()
                trail.enqueue(v if val else -v, DECISION)
                decisions.append((trail.level, v, val))
                conflict = prop.propagate()
            else:
                lvl = rng.randint(0, trail.level - 1)
                trail.pop_to_level(lvl)
                decisions = [d for d in decisions if d[0] <= lvl]
                conflict = prop.propagate()
            naive_conf, naive_assign = naive_propagate(
                rows, {v: val for _, v, val in decisions}
            )
            if conflict is not None:
                assert naive_conf, (rows, decisions)
            else:
                assert not naive_conf
                got = {
                    v: trail.values[v]
                    for v in range(1, n + 1)
                    if trail.values[v] >= 0
                }
                assert got == naive_assign, (rows, decisions)


def test_overflow_falls_back_to_clause():
    big = (1 << 61) + 1
    # conflicting rows with huge coefficients force the clause path
    r1 = NormConstraint((big, 1), (1, 2), big)
    r2 = NormConstraint((big, 1), (-1, 3), big)
    trail, prop, _ = setup([r1, r2], 3)
    trail.push_level()
    trail.enqueue(-2, DECISION)
    trail.push_level()
    trail.enqueue(-3, DECISION)
    conflict = prop.propagate()
    assert conflict is not None
    kind, learned, lvl = prop.analyze(conflict)
    assert kind in ("learned", "chrono")
    if kind == "learned":
        assert implied_by([r1, r2], learned, 3)


def test_symmetry_reason_blocks_resolution():
    # two symmetry-injected fixings falsify x1 + x2 >= 1 at level 1;
    # neither can be resolved, so analysis backs off chronologically
    # instead of learning something that is not implied by the rows
    r1 = NormConstraint((1, 1), (1, 2), 1)
    trail, prop, _ = setup([r1], 3)
    trail.push_level()
    assert trail.enqueue(-1, SYMMETRY)
    assert trail.enqueue(-2, SYMMETRY)
    conflict = prop.propagate()
    assert conflict is not None
    kind, learned, lvl = prop.analyze(conflict)
    assert kind == "chrono"
    assert lvl == trail.level - 1


def test_learned_db_reduction_keeps_reasons_and_short_rows():
    trail = Trail(6)
    prop = Propagator(trail, learned_cap=4)
    base = NormConstraint((1, 1, 1), (1, 2, 3), 1)
    prop.add_constraint(base)
    for i in range(12):
        con = NormConstraint((1, 1, 1), (1 + (i % 3), 4, 5), 1)
        prop.learn(con)
    long_learned = [
        r for r in prop.rows.values() if r.learned and len(r.lits) > 2
    ]
    assert len(long_learned) <= 8
