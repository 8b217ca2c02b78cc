"""Syntactic permutation symmetries: detection and handling.

Detection builds a colored bipartite structure (variables vs. rows, edges
labelled by coefficient and literal sign, variables pre-colored by their
objective coefficient) and searches for color-preserving bijections by
individualization and refinement, backtracking under a node budget.
Every candidate is verified exactly against the row multiset before it is
reported, so returned generators are always true symmetries.

Handling is a static lex-leader rule per generator (solution not
lexicographically smaller than its image, variable-index order) plus
root-level orbit spreading of propagation-derived 0-fixings: if x_v = 0
holds in every feasible solution, applying any symmetry shows x_w = 0 for
every w in the orbit of v.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import EngineProblem


@dataclass(frozen=True)
class Generator:
    perm: tuple  # pairs (v, image) for moved variables only

    def image(self, v):
        for a, b in self.perm:
            if a == v:
                return b
        return v

    def as_dict(self):
        return dict(self.perm)

    def cycles(self):
        seen = set()
        mapping = self.as_dict()
        out = []
        for start in sorted(mapping):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            cur = mapping.get(start, start)
            while cur != start:
                cyc.append(cur)
                seen.add(cur)
                cur = mapping.get(cur, cur)
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out


def _row_tuples(problem: EngineProblem):
    rows = []
    for r in problem.propagation_rows():
        rows.append(
            (r.degree, tuple(sorted(zip(r.coefs, r.lits), key=lambda t: (t[0], t[1]))))
        )
    return rows


def _apply_to_row(row, mapping):
    degree, items = row
    mapped = []
    for coef, lit in items:
        v = abs(lit)
        img = mapping.get(v, v)
        mapped.append((coef, img if lit > 0 else -img))
    mapped.sort()
    return (degree, tuple(mapped))


def is_symmetry(problem: EngineProblem, mapping: dict) -> bool:
    """Exact check: permuted rows reproduce the row multiset, objective
    coefficients are preserved."""
    for v, w in mapping.items():
        if problem.obj_coefs.get(v, 0) != problem.obj_coefs.get(w, 0):
            return False
    rows = _row_tuples(problem)
    bag = {}
    for row in rows:
        bag[row] = bag.get(row, 0) + 1
    for row in rows:
        img = _apply_to_row(row, mapping)
        cnt = bag.get(img, 0)
        if cnt == 0:
            return False
        bag[img] = cnt - 1
    return all(c == 0 for c in bag.values())


class _Refiner:
    def __init__(self, problem: EngineProblem):
        self.n = problem.n_total
        rows = problem.propagation_rows()
        self.base_var = {}
        for v in range(1, self.n + 1):
            self.base_var[v] = ("v", problem.obj_coefs.get(v, 0))
        self.row_base = []
        self.incidence = {v: [] for v in range(1, self.n + 1)}
        self.row_members = []
        for ri, r in enumerate(rows):
            sig = tuple(sorted((c, 1 if l > 0 else -1)
                               for c, l in zip(r.coefs, r.lits)))
            self.row_base.append(("r", r.degree, sig))
            members = []
            for c, l in zip(r.coefs, r.lits):
                v = abs(l)
                s = 1 if l > 0 else -1
                members.append((v, c, s))
                self.incidence[v].append((ri, c, s))
            self.row_members.append(members)

    def refine(self, seeds: dict):
        """Color refinement with individualized seeds; returns var colors."""
        intern: dict = {}

        def code(key):
            out = intern.get(key)
            if out is None:
                out = len(intern)
                intern[key] = out
            return out

        var_c = {
            v: code((self.base_var[v], seeds.get(v))) for v in self.base_var
        }
        row_c = [code(b) for b in self.row_base]
        sizes = (-1, -1)
        while True:
            new_row = []
            for ri, members in enumerate(self.row_members):
                key = (
                    row_c[ri],
                    tuple(sorted((var_c[v], c, s) for v, c, s in members)),
                )
                new_row.append(key)
            row_c = [code(k) for k in new_row]
            new_var = {}
            for v in self.base_var:
                key = (
                    var_c[v],
                    tuple(sorted((row_c[ri], c, s)
                                 for ri, c, s in self.incidence[v])),
                )
                new_var[v] = key
            var_c = {v: code(k) for v, k in new_var.items()}
            cur = (len(set(var_c.values())), len(set(row_c)))
            if cur == sizes:
                return var_c, tuple(sorted(row_c))
            sizes = cur


class _Budget:
    def __init__(self, limit):
        self.left = limit

    def spend(self):
        self.left -= 1
        return self.left >= 0


def _classes(var_colors):
    by_color: dict[int, list[int]] = {}
    for v, c in var_colors.items():
        by_color.setdefault(c, []).append(v)
    for vs in by_color.values():
        vs.sort()
    return by_color


def _color_histogram(var_colors, row_colors):
    hist: dict[int, int] = {}
    for c in var_colors.values():
        hist[c] = hist.get(c, 0) + 1
    return hist, row_colors


def _search_mapping(refiner, problem, pairs, budget):
    """Find one exact symmetry extending the (source, target) pairs."""
    if not budget.spend():
        return None
    seeds_a = {a: i for i, (a, _b) in enumerate(pairs)}
    seeds_b = {b: i for i, (_a, b) in enumerate(pairs)}
    col_a, rows_a = refiner.refine(seeds_a)
    col_b, rows_b = refiner.refine(seeds_b)
    if _color_histogram(col_a, rows_a) != _color_histogram(col_b, rows_b):
        return None
    classes_a = _classes(col_a)
    classes_b = _classes(col_b)
    split = None
    for color in sorted(classes_a):
        if len(classes_a[color]) > 1:
            split = color
            break
    if split is None:
        mapping = {}
        for color, vs in classes_a.items():
            ws = classes_b.get(color)
            if ws is None or len(ws) != 1 or len(vs) != 1:
                return None
            if vs[0] != ws[0]:
                mapping[vs[0]] = ws[0]
        if not mapping:
            return None  # identity
        return mapping if is_symmetry(problem, mapping) else None
    u = classes_a[split][0]
    for w in classes_b.get(split, ()):
        got = _search_mapping(refiner, problem, pairs + [(u, w)], budget)
        if got is not None:
            return got
        if budget.left < 0:
            return None
    return None


def detect(problem: EngineProblem, node_limit: int = 50000,
           max_generators: int = 16) -> list[Generator]:
    """Generators of (a subgroup of) the syntactic symmetry group.

    Deterministic; abandons the search once the backtrack budget is spent
    and returns whatever was found.
    """
    if problem.n_total == 0 or not problem.propagation_rows():
        return []
    refiner = _Refiner(problem)
    budget = _Budget(node_limit)
    gens: list[Generator] = []
    fixed: list[tuple[int, int]] = []
    while budget.left >= 0 and len(gens) < max_generators:
        col, _rows = refiner.refine({a: i for i, (a, _b) in enumerate(fixed)})
        classes = _classes(col)
        target = None
        for color in sorted(classes):
            vs = [v for v in classes[color] if v not in {a for a, _ in fixed}]
            if len(vs) > 1:
                target = vs
                break
        if target is None:
            break
        v = target[0]
        for w in target[1:]:
            if len(gens) >= max_generators or budget.left < 0:
                break
            mapping = _search_mapping(refiner, problem, fixed + [(v, w)], budget)
            if mapping is not None:
                gens.append(Generator(tuple(sorted(mapping.items()))))
        fixed.append((v, v))
    return gens


def orbits(gens: list[Generator], n_total: int) -> list[tuple[int, ...]]:
    parent = list(range(n_total + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in gens:
        for a, b in g.perm:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in range(1, n_total + 1):
        groups.setdefault(find(v), []).append(v)
    return [tuple(vs) for vs in groups.values() if len(vs) > 1]


def lex_leader_fixings(gen: Generator, values) -> tuple[list, bool]:
    """Fixings implied by x >=_lex phi(x) under the partial assignment.

    `values` is indexable by variable, -1 meaning unassigned.  Returns
    (fixings, violated); fixings are (var, value) pairs, derived walking
    positions in index order while the compared prefix is forced equal.
    """
    mapping = gen.as_dict()
    inverse = {b: a for a, b in mapping.items()}
    moved = sorted(set(mapping) | set(inverse))
    local = {}
    fixings = []

    def val(v):
        if v in local:
            return local[v]
        return values[v]

    def fix(v, b):
        local[v] = b
        fixings.append((v, b))

    for j in moved:
        src = inverse.get(j, j)
        if src == j:
            continue
        a = val(j)
        b = val(src)
        if a >= 0 and b >= 0:
            if a > b:
                return fixings, False
            if a < b:
                return fixings, True
            continue
        if a == 0 and b < 0:
            fix(src, 0)
            continue
        if b == 1 and a < 0:
            fix(j, 1)
            continue
        break
    return fixings, False


def orbital_zero_fixings(orbit_list, values, implied_zeros) -> list:
    """Spread root-level implied 0-fixings across their whole orbit.

    `implied_zeros` holds variables whose 0-fixing is a logical
    consequence of the constraints (root propagation), not of symmetry
    handling; for those, symmetry makes the fixing valid orbit-wide.
    """
    fixings = []
    for orbit in orbit_list:
        if any(v in implied_zeros for v in orbit):
            for w in orbit:
                if values[w] < 0:
                    fixings.append((w, 0))
    return fixings


class SymmetryHandler:
    """Detection result plus the handling policy used during search."""

    def __init__(self, problem: EngineProblem, node_limit: int = 50000,
                 max_active: int = 10):
        self.generators = detect(problem, node_limit=node_limit)
        self.enabled = 0 < len(self.generators) <= max_active
        self.orbit_list = orbits(self.generators, problem.n_total) \
            if self.enabled else []

    def propagate_lex(self, values):
        """All lex fixings under `values`; (fixings, violated)."""
        if not self.enabled:
            return [], False
        out = []
        seen = set()
        for gen in self.generators:
            fixings, violated = lex_leader_fixings(gen, values)
            for v, b in fixings:
                if v not in seen:
                    seen.add(v)
                    out.append((v, b))
            if violated:
                return out, True
        return out, False
