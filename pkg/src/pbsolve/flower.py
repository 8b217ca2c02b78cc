"""AND-constraint hypergraph and flower-inequality separation.

Every AND definition z_e = prod_{v in e} x_v is a hyperedge over its
operand nodes.  For a center edge e and k intersecting neighbor edges
f_1..f_k the flower inequality

    z_e + sum_i (1 - z_{f_i}) + sum_{v in R} (1 - x_v) >= 1,
    R = e \\ (f_1 u ... u f_k)

is valid: if every neighbor product and every uncovered node is 1, all of
e is 1 and z_e must be 1.  Separation enumerates neighbor candidates only
through the overlap sets containing the center, never by scanning all
edge pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import EngineProblem

VIOLATION_EPS = 1e-6


class Cut:
    """Sparse integer inequality sum coefs[v]*x_v >= rhs over engine vars."""

    __slots__ = ("coefs", "rhs", "tag")

    def __init__(self, coefs: dict[int, int], rhs: int, tag: str):
        self.coefs = coefs
        self.rhs = rhs
        self.tag = tag

    def fingerprint(self):
        return (tuple(sorted(self.coefs.items())), self.rhs)

    def violation(self, point) -> float:
        """rhs minus activity at the LP point (positive means violated)."""
        act = 0.0
        for v, c in self.coefs.items():
            act += c * point[v - 1]
        return self.rhs - act

    def __repr__(self):
        return "<cut:%s %r >= %d>" % (self.tag, self.coefs, self.rhs)


@dataclass
class OverlapSet:
    nodes: tuple[int, ...]
    edges: list[int]


@dataclass
class Hypergraph:
    nodes: list[int]
    edge_nodes: list[tuple[int, ...]]
    edge_z: list[int]
    overlaps: list[OverlapSet]
    # CSR: edge -> nodes; CSC: node (positional) -> edges
    edge_ptr: list[int] = field(default_factory=list)
    edge_node_idx: list[int] = field(default_factory=list)
    node_ptr: list[int] = field(default_factory=list)
    node_edge_idx: list[int] = field(default_factory=list)
    edge_overlaps: list[list[int]] = field(default_factory=list)

    @property
    def n_edges(self):
        return len(self.edge_nodes)

    def overlap_incidence(self):
        return sum(len(o.edges) for o in self.overlaps)


def build_hypergraph(problem: EngineProblem) -> Hypergraph:
    """Collect AND edges, overlap sets, and both incidence views."""
    edges = [(ad.operands, ad.z) for ad in problem.and_defs]
    node_list = sorted({v for ops, _ in edges for v in ops})
    node_pos = {v: i for i, v in enumerate(node_list)}

    # CSR edge -> node positions, one pass
    edge_ptr = [0]
    edge_node_idx = []
    for ops, _ in edges:
        edge_node_idx.extend(node_pos[v] for v in ops)
        edge_ptr.append(len(edge_node_idx))

    # CSC node -> edges via counting sort, one pass
    counts = [0] * len(node_list)
    for p in edge_node_idx:
        counts[p] += 1
    node_ptr = [0]
    for c in counts:
        node_ptr.append(node_ptr[-1] + c)
    node_edge_idx = [0] * len(edge_node_idx)
    cursor = list(node_ptr[:-1])
    for e in range(len(edges)):
        for k in range(edge_ptr[e], edge_ptr[e + 1]):
            p = edge_node_idx[k]
            node_edge_idx[cursor[p]] = e
            cursor[p] += 1

    edge_sets = [frozenset(ops) for ops, _ in edges]
    table: dict[tuple[int, ...], set[int]] = {}
    seen_pairs = set()
    for p in range(len(node_list)):
        incident = node_edge_idx[node_ptr[p]: node_ptr[p + 1]]
        for i in range(len(incident)):
            for j in range(i + 1, len(incident)):
                e, f = incident[i], incident[j]
                if (e, f) in seen_pairs:
                    continue
                seen_pairs.add((e, f))
                inter = tuple(sorted(edge_sets[e] & edge_sets[f]))
                entry = table.setdefault(inter, set())
                entry.add(e)
                entry.add(f)

    overlaps = [
        OverlapSet(nodes, sorted(edge_ids))
        for nodes, edge_ids in sorted(table.items())
    ]
    edge_overlaps = [[] for _ in edges]
    for oi, ov in enumerate(overlaps):
        for e in ov.edges:
            edge_overlaps[e].append(oi)

    return Hypergraph(
        nodes=node_list,
        edge_nodes=[ops for ops, _ in edges],
        edge_z=[z for _, z in edges],
        overlaps=overlaps,
        edge_ptr=edge_ptr,
        edge_node_idx=edge_node_idx,
        node_ptr=node_ptr,
        node_edge_idx=node_edge_idx,
        edge_overlaps=edge_overlaps,
    )


def _flower_cut(h: Hypergraph, center: int, neighbors: tuple[int, ...]) -> Cut:
    coefs: dict[int, int] = {h.edge_z[center]: 1}
    covered = set()
    k = len(neighbors)
    for f in neighbors:
        coefs[h.edge_z[f]] = coefs.get(h.edge_z[f], 0) - 1
        covered.update(h.edge_nodes[f])
    rest = [v for v in h.edge_nodes[center] if v not in covered]
    for v in rest:
        coefs[v] = coefs.get(v, 0) - 1
    rhs = 1 - k - len(rest)
    return Cut({v: c for v, c in coefs.items() if c != 0}, rhs, "flower%d" % k)


MAX_FOOTPRINTS = 12


def separate_flower(h: Hypergraph, point, k: int, max_cuts: int = 100,
                    counter=None) -> list[Cut]:
    """Violated k-flower inequalities at an LP point, k in {1, 2}.

    `point` is indexable by engine column (var-1).  Candidates are reached
    through overlap sets only; per center, neighbors are deduplicated by
    their intersection footprint on the center (keeping the neighbor with
    the largest product value, which gives the smallest left-hand side).
    `counter`, when given, accumulates candidate visits for complexity
    accounting.
    """
    if k not in (1, 2):
        raise ValueError("only 1- and 2-flowers are separated")
    out = []
    for e in range(h.n_edges):
        z_e = point[h.edge_z[e] - 1]
        if z_e >= 1.0 - VIOLATION_EPS:
            continue
        center_set = set(h.edge_nodes[e])
        best_by_footprint: dict[frozenset, tuple[float, int]] = {}
        for oi in h.edge_overlaps[e]:
            for f in h.overlaps[oi].edges:
                if f == e:
                    continue
                if counter is not None:
                    counter["visits"] = counter.get("visits", 0) + 1
                foot = frozenset(center_set.intersection(h.edge_nodes[f]))
                zf = point[h.edge_z[f] - 1]
                cur = best_by_footprint.get(foot)
                if cur is None or zf > cur[0] + 1e-12 or (
                    abs(zf - cur[0]) <= 1e-12 and f < cur[1]
                ):
                    best_by_footprint[foot] = (zf, f)
        reps = sorted(
            ((zf, f) for zf, f in best_by_footprint.values()),
            key=lambda t: (-t[0], t[1]),
        )[:MAX_FOOTPRINTS]
        if k == 1:
            combos = [(f,) for _, f in reps]
        else:
            combos = [
                (reps[i][1], reps[j][1])
                for i in range(len(reps))
                for j in range(i + 1, len(reps))
            ]
        for neigh in combos:
            if counter is not None:
                counter["visits"] = counter.get("visits", 0) + 1
            cut = _flower_cut(h, e, neigh)
            if cut.violation(point) > VIOLATION_EPS:
                out.append(cut)

    seen = set()
    unique = []
    for cut in out:
        fp = cut.fingerprint()
        if fp not in seen:
            seen.add(fp)
            unique.append(cut)
    unique.sort(key=lambda c: (-c.violation(point), c.fingerprint()))
    return unique[:max_cuts]
