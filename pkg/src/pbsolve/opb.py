"""Reading and writing of OPB/WBO files and the competition output protocol.

The text grammar handled here: `*` starts a comment line, an optional
`min:` line carries the objective, every constraint ends with `;` and uses
relation `>=` or `=`.  WBO files start with a `soft: <top> ;` header and may
prefix constraints with a `[<weight>]` soft marker.  Negated literals
`~x<i>` are accepted and folded away immediately, so parsed instances only
ever contain plain variables (products of negated literals are expanded).

All numbers are integers throughout; an instance whose intsize exceeds
MAX_INTSIZE (62) is rejected at parse time so that every activity sum fits
comfortably in 128-bit accumulators downstream.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field

STATUS_OPTIMUM = "OPTIMUM FOUND"
STATUS_SAT = "SATISFIABLE"
STATUS_UNSAT = "UNSATISFIABLE"
STATUS_UNKNOWN = "UNKNOWN"

MAX_INTSIZE = 62

_LITERAL_RE = re.compile(r"^(~?)x(\d+)$")


class ParseError(ValueError):
    """Malformed OPB/WBO input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class UnsupportedIntsizeError(ValueError):
    """Instance needs more coefficient bits than the engine supports."""

    def __init__(self, intsize: int):
        super().__init__(
            "instance intsize %d exceeds the supported maximum of %d bits"
            % (intsize, MAX_INTSIZE)
        )
        self.intsize = intsize


@dataclass
class PbConstraint:
    """One (possibly nonlinear) constraint: sum of coef * monomial REL rhs.

    Monomials are sorted, duplicate-free tuples of variable indices.  A
    weight is present only on WBO soft constraints.
    """

    terms: list[tuple[int, tuple[int, ...]]]
    relation: str  # ">=" or "="
    rhs: int
    weight: int | None = None

    def integers_sum(self) -> int:
        s = sum(abs(c) for c, _ in self.terms) + abs(self.rhs)
        if self.weight is not None:
            s += abs(self.weight)
        return s


@dataclass
class Instance:
    n_vars: int
    objective: list[tuple[int, tuple[int, ...]]] | None
    constraints: list[PbConstraint]
    is_wbo: bool = False
    top_cost: int | None = None
    obj_offset: int = 0
    intsize: int = 0

    @property
    def is_decision(self) -> bool:
        return self.objective is None and not self.is_wbo


def compute_intsize(inst: Instance) -> int:
    """Bit length of the largest per-constraint sum of absolute integers.

    The objective counts as a constraint; a folded constant offset counts
    among its integers.
    """
    best = 0
    for con in inst.constraints:
        best = max(best, con.integers_sum())
    if inst.objective is not None:
        s = sum(abs(c) for c, _ in inst.objective) + abs(inst.obj_offset)
        best = max(best, s)
    return best.bit_length()


def _expand_term(coef, pos, neg):
    """Expand coef * prod(pos) * prod(1 - x for x in neg) into monomials.

    Returns a list of (coef, frozenset) pairs; the empty set stands for a
    constant contribution.
    """
    parts = [(coef, frozenset(pos))]
    for v in neg:
        nxt = []
        for a, s in parts:
            nxt.append((a, s))
            nxt.append((-a, s | {v}))
        parts = nxt
    return parts


class _TermAccumulator:
    def __init__(self):
        self.monos: dict[frozenset, int] = {}
        self.constant = 0

    def add(self, coef, pos, neg):
        for a, s in _expand_term(coef, pos, neg):
            if not s:
                self.constant += a
            else:
                self.monos[s] = self.monos.get(s, 0) + a

    def terms(self):
        out = []
        for s, a in self.monos.items():
            if a != 0:
                out.append((a, tuple(sorted(s))))
        return out


def _parse_int(tok, line):
    try:
        return int(tok, 10)
    except ValueError:
        raise ParseError("non-integer coefficient %r" % tok, line) from None


def _parse_terms(tokens, line):
    """Parse an alternating coefficient/literal token stream.

    Returns a list of raw terms (coef, pos_vars, neg_vars).
    """
    raw = []
    coef = None
    pos: list[int] = []
    neg: list[int] = []
    for tok in tokens:
        m = _LITERAL_RE.match(tok)
        if m:
            if coef is None:
                raise ParseError("literal %r without a coefficient" % tok, line)
            v = int(m.group(2))
            if v < 1:
                raise ParseError("variable index must be >= 1, got %r" % tok, line)
            if v in pos or v in neg:
                raise ParseError("duplicate variable x%d in a product" % v, line)
            (neg if m.group(1) else pos).append(v)
        else:
            if coef is not None:
                if not pos and not neg:
                    raise ParseError("coefficient %d without a variable" % coef, line)
                raw.append((coef, pos, neg))
                pos, neg = [], []
            coef = _parse_int(tok, line)
    if coef is not None:
        if not pos and not neg:
            raise ParseError("coefficient %d without a variable" % coef, line)
        raw.append((coef, pos, neg))
    return raw


def parse(source) -> Instance:
    """Parse OPB or WBO text into an Instance.

    `source` may be a string, bytes, or a text-mode file object.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    objective = None
    obj_offset = 0
    constraints: list[PbConstraint] = []
    is_wbo = False
    top_cost = None
    n_hint = 0
    max_var = 0

    pending: list[str] = []
    pending_line = 0

    def flush_statement(tokens, line):
        nonlocal objective, obj_offset, is_wbo, top_cost, max_var
        if not tokens:
            return
        head = tokens[0]
        if head == "soft:":
            if constraints or objective is not None or is_wbo:
                raise ParseError("soft: header must come first", line)
            is_wbo = True
            if len(tokens) > 2:
                raise ParseError("malformed soft: header", line)
            if len(tokens) == 2:
                top_cost = _parse_int(tokens[1], line)
            return
        if head == "min:":
            if objective is not None:
                raise ParseError("multiple objective lines", line)
            if is_wbo:
                raise ParseError("objective line not allowed in WBO", line)
            acc = _TermAccumulator()
            for coef, pos, neg in _parse_terms(tokens[1:], line):
                acc.add(coef, pos, neg)
                max_var = max(max_var, *pos, *neg, 0)
            objective = acc.terms()
            obj_offset = acc.constant
            return

        weight = None
        body = tokens
        if head.startswith("["):
            if not head.endswith("]"):
                raise ParseError("malformed weight marker %r" % head, line)
            if not is_wbo:
                raise ParseError("soft constraint outside a WBO file", line)
            weight = _parse_int(head[1:-1], line)
            if weight <= 0:
                raise ParseError("soft weight must be positive", line)
            body = tokens[1:]
        if len(body) < 3:
            raise ParseError("truncated constraint", line)
        relation = body[-2]
        if relation not in (">=", "="):
            raise ParseError("unsupported relation %r" % relation, line)
        rhs = _parse_int(body[-1], line)
        acc = _TermAccumulator()
        for coef, pos, neg in _parse_terms(body[:-2], line):
            acc.add(coef, pos, neg)
            max_var = max(max_var, *pos, *neg, 0)
        terms = acc.terms()
        constraints.append(
            PbConstraint(terms, relation, rhs - acc.constant, weight)
        )

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.strip()
        if not stripped:
            continue
        if stripped.startswith("*"):
            m = re.search(r"#variable=\s*(\d+)", stripped)
            if m:
                n_hint = max(n_hint, int(m.group(1)))
            continue
        if not pending:
            pending_line = lineno
        for tok in rawline.replace(";", " ; ").split():
            if tok == ";":
                flush_statement(pending, pending_line)
                pending = []
                pending_line = lineno
            else:
                pending.append(tok)
    if pending:
        raise ParseError("missing ';' at end of input", pending_line)

    inst = Instance(
        n_vars=max(max_var, n_hint),
        objective=objective,
        constraints=constraints,
        is_wbo=is_wbo,
        top_cost=top_cost,
        obj_offset=obj_offset,
    )
    inst.intsize = compute_intsize(inst)
    if inst.intsize > MAX_INTSIZE:
        raise UnsupportedIntsizeError(inst.intsize)
    return inst


def _format_terms(terms):
    parts = []
    for coef, mono in terms:
        parts.append("%+d %s" % (coef, " ".join("x%d" % v for v in mono)))
    return " ".join(parts)


def write_opb(inst: Instance) -> str:
    """Canonical writer; parse(write_opb(inst)) reproduces inst exactly.

    Folded objective constants cannot be expressed in the grammar, so an
    instance with a nonzero obj_offset is rejected.
    """
    if inst.obj_offset != 0:
        raise ValueError("cannot write an instance with a folded objective constant")
    lines = [
        "* #variable= %d #constraint= %d" % (inst.n_vars, len(inst.constraints))
    ]
    if inst.is_wbo:
        if inst.top_cost is not None:
            lines.append("soft: %d ;" % inst.top_cost)
        else:
            lines.append("soft: ;")
    if inst.objective is not None:
        lines.append("min: %s ;" % _format_terms(inst.objective))
    for con in inst.constraints:
        prefix = "[%d] " % con.weight if con.weight is not None else ""
        lines.append(
            "%s%s %s %d ;" % (prefix, _format_terms(con.terms), con.relation, con.rhs)
        )
    return "\n".join(lines) + "\n"


def emit_result(status, best_obj=None, best_assignment=None, sink=None):
    """Write the final o/s/v protocol lines, flushing line by line."""
    sink = sink if sink is not None else sys.stdout

    def put(line):
        sink.write(line + "\n")
        try:
            sink.flush()
        except (AttributeError, OSError):
            pass

    if best_obj is not None:
        put("o %d" % best_obj)
    put("s %s" % status)
    if best_assignment is not None and status in (STATUS_OPTIMUM, STATUS_SAT):
        lits = []
        for i, val in enumerate(best_assignment, start=1):
            lits.append("x%d" % i if val else "-x%d" % i)
        put("v " + " ".join(lits))
