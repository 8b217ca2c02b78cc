import itertools
import random

import pytest

from pbsolve.flower import Cut, build_hypergraph, separate_flower
from pbsolve.model import linearize
from pbsolve.opb import parse


def problem_with_ands(operand_sets, n_vars):
    terms = " ".join(
        "+1 %s" % " ".join("x%d" % v for v in ops) for ops in operand_sets
    )
    text = "* #variable= %d #constraint= 1\n%s >= 0 ;\n" % (n_vars, terms)
    return linearize(parse(text))


def expand_point(h, values, n_total):
    """Full engine point from original bits: product vars set exactly."""
    point = [0.0] * n_total
    for v, b in values.items():
        point[v - 1] = float(b)
    for ops, z in zip(h.edge_nodes, h.edge_z):
        point[z - 1] = float(all(values[v] for v in ops))
    return point


def test_overlap_two_edges():
    prob = problem_with_ands([(1, 2, 3), (2, 3, 4)], 4)
    h = build_hypergraph(prob)
    assert h.n_edges == 2
    assert len(h.overlaps) == 1
    assert h.overlaps[0].nodes == (2, 3)
    assert h.overlaps[0].edges == [0, 1]


def test_overlap_single_edge():
    prob = problem_with_ands([(1, 2, 3)], 3)
    h = build_hypergraph(prob)
    assert h.n_edges == 1 and h.overlaps == []


def test_overlap_three_edges_common_node():
    prob = problem_with_ands([(1, 5), (2, 5), (3, 5)], 5)
    h = build_hypergraph(prob)
    assert len(h.overlaps) == 1
    assert h.overlaps[0].nodes == (5,)
    assert h.overlaps[0].edges == [0, 1, 2]


def test_csr_csc_are_transposes():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(2, 8)
        sets = []
        for _ in range(rng.randint(1, 6)):
            size = rng.randint(2, min(4, n))
            sets.append(tuple(sorted(rng.sample(range(1, n + 1), size))))
        sets = list(dict.fromkeys(sets))
        prob = problem_with_ands(sets, n)
        h = build_hypergraph(prob)
        pairs_csr = set()
        for e in range(h.n_edges):
            for k in range(h.edge_ptr[e], h.edge_ptr[e + 1]):
                pairs_csr.add((e, h.edge_node_idx[k]))
        pairs_csc = set()
        for p in range(len(h.nodes)):
            for k in range(h.node_ptr[p], h.node_ptr[p + 1]):
                pairs_csc.add((h.node_edge_idx[k], p))
        assert pairs_csr == pairs_csc


def test_one_flower_cut_shape():
    # e = {1,2,3}, f = {2,3,4}: cut z_e + (1 - z_f) + (1 - x_1) >= 1
    prob = problem_with_ands([(1, 2, 3), (2, 3, 4)], 4)
    h = build_hypergraph(prob)
    z_e, z_f = h.edge_z
    point = [1.0] * prob.n_total
    point[z_e - 1] = 0.0  # violated: LHS = 0 + 0 + 0
    cuts = separate_flower(h, point, k=1)
    assert cuts
    best = cuts[0]
    assert best.coefs == {z_e: 1, z_f: -1, 1: -1}
    assert best.rhs == 1 - 1 - 1
    assert best.violation(point) == pytest.approx(1.0)


def test_flower_not_emitted_when_satisfied():
    prob = problem_with_ands([(1, 2, 3), (2, 3, 4)], 4)
    h = build_hypergraph(prob)
    point = [1.0] * prob.n_total
    assert separate_flower(h, point, k=1) == []
    assert separate_flower(h, point, k=2) == []


def test_two_flower_distinct_neighbors():
    prob = problem_with_ands([(1, 2, 3, 4), (1, 2, 5), (3, 4, 5)], 5)
    h = build_hypergraph(prob)
    z_e = h.edge_z[0]
    z_f1 = h.edge_z[1]
    z_f2 = h.edge_z[2]
    point = [1.0] * prob.n_total
    point[z_e - 1] = 0.0
    cuts = separate_flower(h, point, k=2)
    assert cuts
    # center {1,2,3,4} with both neighbors covers everything: R empty
    two = [c for c in cuts if c.coefs.get(z_e) == 1 and len(c.coefs) == 3]
    assert any(
        c.coefs == {z_e: 1, z_f1: -1, z_f2: -1} and c.rhs == -1 for c in two
    )


def test_random_flower_validity_exhaustive():
    rng = random.Random(99)
    for trial in range(150):
        n = rng.randint(2, 8)
        n_edges = rng.randint(1, 6)
        sets = []
        for _ in range(n_edges):
            size = rng.randint(2, min(4, n))
            sets.append(tuple(sorted(rng.sample(range(1, n + 1), size))))
        sets = list(dict.fromkeys(sets))
        prob = problem_with_ands(sets, n)
        h = build_hypergraph(prob)
        point = [rng.random() for _ in range(prob.n_total)]
        for k in (1, 2):
            for cut in separate_flower(h, point, k=k):
                for bits in itertools.product((0, 1), repeat=n):
                    values = {v: bits[v - 1] for v in range(1, n + 1)}
                    full = expand_point(h, values, prob.n_total)
                    act = sum(c * full[v - 1] for v, c in cut.coefs.items())
                    assert act >= cut.rhs, (sets, cut, bits)


def test_violation_sort_is_recomputed():
    prob = problem_with_ands([(1, 2), (2, 3), (1, 3)], 3)
    h = build_hypergraph(prob)
    rng = random.Random(1)
    point = [rng.random() * 0.5 for _ in range(prob.n_total)]
    cuts = separate_flower(h, point, k=1)
    viols = [c.violation(point) for c in cuts]
    assert viols == sorted(viols, reverse=True)
    for v in viols:
        assert v > 1e-6


def test_candidate_visit_bound():
    rng = random.Random(41)
    for _ in range(40):
        n = rng.randint(3, 9)
        n_edges = rng.randint(2, 8)
        sets = []
        for _ in range(n_edges):
            size = rng.randint(2, min(4, n))
            sets.append(tuple(sorted(rng.sample(range(1, n + 1), size))))
        sets = list(dict.fromkeys(sets))
        prob = problem_with_ands(sets, n)
        h = build_hypergraph(prob)
        point = [rng.random() for _ in range(prob.n_total)]
        counter = {}
        separate_flower(h, point, k=1, counter=counter)
        separate_flower(h, point, k=2, counter=counter)
        budget = 70 * (h.n_edges + h.overlap_incidence())
        assert counter.get("visits", 0) <= budget


def test_max_cuts_truncation():
    sets = [tuple(sorted((1, 1 + i, 2 + i))) for i in range(1, 7)]
    prob = problem_with_ands(sets, 9)
    h = build_hypergraph(prob)
    point = [0.0] * prob.n_total
    cuts = separate_flower(h, point, k=2, max_cuts=3)
    assert len(cuts) <= 3
