"""Propositional clauses, resolution, rank-1 Chvatal-Gomory rounding and
consistency checks for 0-1 constraint sets.

A constraint set may mix :class:`Clause` objects and
:class:`~logopt.lp.LinearConstraint` rows; both are read over 0-1 points.
Partial assignments are plain ``dict``s mapping variable ids to 0 or 1.
"""
from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .lp import GE, INFEASIBLE, LinearConstraint, LpProblem, as_rational, lp_solve

MAX_CONSISTENCY_VARS = 25
MAX_SET_VARS = 12
INPUT_RESOLUTION_CAP = 10_000


class ClauseError(ValueError):
    pass


def natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


@dataclass(frozen=True, order=True)
class Literal:
    var: str
    positive: bool = True

    def __post_init__(self):
        if not self.var:
            raise ClauseError("literal needs a nonempty variable id")

    def __neg__(self):
        return Literal(self.var, not self.positive)

    def __str__(self):
        return self.var if self.positive else f"~{self.var}"

    @classmethod
    def parse(cls, text: str) -> "Literal":
        text = text.strip()
        if text[:1] in ("-", "~", "!"):
            return cls(text[1:], False)
        return cls(text, True)


@dataclass(frozen=True)
class Clause:
    literals: frozenset

    def __post_init__(self):
        lits = frozenset(self.literals)
        pos = {l.var for l in lits if l.positive}
        neg = {l.var for l in lits if not l.positive}
        both = pos & neg
        if both:
            raise ClauseError(f"tautologous clause on {', '.join(sorted(both))}")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def of(cls, *items: Union[str, Literal]) -> "Clause":
        """``Clause.of("x1", "~x3")``; a single string is split on whitespace."""
        if len(items) == 1 and isinstance(items[0], str):
            items = tuple(items[0].replace(" v ", " ").split())
        return cls(frozenset(l if isinstance(l, Literal) else Literal.parse(l) for l in items))

    @property
    def variables(self) -> set[str]:
        return {l.var for l in self.literals}

    def sorted_literals(self) -> list[Literal]:
        return sorted(self.literals, key=lambda l: (natural_key(l.var), not l.positive))

    def is_empty(self) -> bool:
        return not self.literals

    def subsumes(self, other: "Clause") -> bool:
        return self.literals <= other.literals

    def satisfied_by(self, point) -> bool:
        return any(bool(point[l.var]) == l.positive for l in self.literals)

    def __len__(self):
        return len(self.literals)

    def __str__(self):
        if not self.literals:
            return "<empty>"
        return " v ".join(str(l) for l in self.sorted_literals())


EMPTY = Clause(frozenset())

Constraint = Union[Clause, LinearConstraint]


# ---------------------------------------------------------------------------
# resolution


def resolve(c1: Clause, c2: Clause) -> Optional[Clause]:
    """Resolvent of two clauses that clash on exactly one variable, else None."""
    clash = [l for l in c1.literals if -l in c2.literals]
    if len(clash) != 1:
        return None
    lit = clash[0]
    return Clause((c1.literals - {lit}) | (c2.literals - {-lit}))


def _reduce(clauses: Iterable[Clause]) -> set[Clause]:
    """Drop every clause subsumed by a different clause of the set."""
    ordered = sorted(set(clauses), key=len)
    kept: list[Clause] = []
    for c in ordered:
        if not any(k.subsumes(c) for k in kept):
            kept.append(c)
    return set(kept)


class Closure(NamedTuple):
    clauses: frozenset
    truncated: bool
    rounds: int


def resolution_closure(clauses: Iterable[Clause], max_rounds: int = 100) -> Closure:
    """Saturate under resolution with subsumption elimination."""
    current = _reduce(clauses)
    for rnd in range(1, max_rounds + 1):
        ordered = sorted(current, key=_clause_key)
        new = set()
        for a, b in itertools.combinations(ordered, 2):
            r = resolve(a, b)
            if r is not None and not any(c.subsumes(r) for c in current):
                new.add(r)
        if not new:
            return Closure(frozenset(current), False, rnd - 1)
        current = _reduce(current | new)
    return Closure(frozenset(current), True, max_rounds)


def _clause_key(c: Clause):
    return (len(c), [(natural_key(l.var), not l.positive) for l in c.sorted_literals()])


@dataclass
class Derivation:
    """Input-resolution derivation: each step resolves the previous clause
    (or an original) with an original clause."""
    start: Clause
    steps: list[tuple[Clause, Clause, Clause]] = field(default_factory=list)

    @property
    def result(self) -> Clause:
        return self.steps[-1][2] if self.steps else self.start

    def __len__(self):
        return len(self.steps)


def input_resolution_derive(clauses: Iterable[Clause], target: Clause,
                            cap: int = INPUT_RESOLUTION_CAP) -> Optional[Derivation]:
    originals = sorted(set(clauses), key=_clause_key)
    for c in originals:
        if c.subsumes(target):
            return Derivation(c)
    parent: dict[Clause, tuple[Clause, Clause]] = {}
    seen = set(originals)
    queue = deque(originals)
    derived = 0
    while queue:
        d = queue.popleft()
        for o in originals:
            r = resolve(d, o)
            if r is None or r in seen:
                continue
            seen.add(r)
            parent[r] = (d, o)
            if r.subsumes(target):
                return _unwind(r, parent)
            derived += 1
            if derived >= cap:
                return None
            queue.append(r)
    return None


def _unwind(final, parent):
    steps = []
    c = final
    while c in parent:
        d, o = parent[c]
        steps.append((d, o, c))
        c = d
    steps.reverse()
    return Derivation(steps[0][0], steps)


def elementary_closure_clause_check(clauses: Iterable[Clause], c: Clause) -> bool:
    """Whether the inequality form of ``c`` is a rank-1 C-G cut, decided by
    input resolution (the two characterise the same clauses)."""
    return input_resolution_derive(clauses, c) is not None


class UnitPropagation(NamedTuple):
    clauses: frozenset
    units: tuple
    conflict: bool


def unit_propagate(clauses: Iterable[Clause]) -> UnitPropagation:
    work = set(clauses)
    units: list[Literal] = []
    while True:
        if EMPTY in work:
            return UnitPropagation(frozenset(work), tuple(units), True)
        unit = min((c for c in work if len(c) == 1), key=_clause_key, default=None)
        if unit is None:
            return UnitPropagation(frozenset(work), tuple(units), False)
        (lit,) = unit.literals
        units.append(lit)
        nxt = set()
        for c in work:
            if lit in c.literals:
                continue
            if -lit in c.literals:
                c = Clause(c.literals - {-lit})
            nxt.add(c)
        work = nxt


# ---------------------------------------------------------------------------
# clauses as inequalities, C-G rounding


def clause_to_inequality(c: Clause) -> LinearConstraint:
    coeffs = {}
    negatives = 0
    for lit in c.literals:
        if lit.positive:
            coeffs[lit.var] = 1
        else:
            coeffs[lit.var] = -1
            negatives += 1
    return LinearConstraint(coeffs, GE, 1 - negatives)


def bound_rows(variables: Iterable[str]) -> list[LinearConstraint]:
    """``x >= 0`` and ``-x >= -1`` for each variable."""
    rows = []
    for v in variables:
        rows.append(LinearConstraint({v: 1}, GE, 0))
        rows.append(LinearConstraint({v: -1}, GE, -1))
    return rows


def cg_round(rows: Sequence[LinearConstraint], multipliers: Sequence) -> LinearConstraint:
    """Rank-1 Chvatal-Gomory cut: combine ``>=`` rows, round everything up.

    Valid over nonnegative integer points; bound rows must be passed in
    explicitly if the combination needs them.
    """
    if len(rows) != len(multipliers):
        raise ClauseError("need one multiplier per row")
    total: dict[str, Fraction] = {}
    rhs = Fraction(0)
    for row, u in zip(rows, multipliers):
        u = as_rational(u)
        if u < 0:
            raise ClauseError(f"negative multiplier {u}")
        if row.relation != GE:
            raise ClauseError(f"row {row} is not in >= form")
        for v, c in row.coefficients.items():
            total[v] = total.get(v, Fraction(0)) + u * c
        rhs += u * row.rhs
    return LinearConstraint({v: math.ceil(c) for v, c in total.items()}, GE, math.ceil(rhs))


# ---------------------------------------------------------------------------
# consistency


def constraint_variables(con: Constraint) -> set[str]:
    return con.variables if isinstance(con, Clause) else set(con.coefficients)


def holds(con: Constraint, point) -> bool:
    return con.satisfied_by(point)


def violates(pa: dict, con: Constraint) -> bool:
    """A partial assignment violates a constraint only when it fixes every
    variable in it and the constraint evaluates false."""
    if not constraint_variables(con) <= pa.keys():
        return False
    return not holds(con, pa)


def _universe(constraints, universe=None, pa=None):
    names = set(universe or ())
    for con in constraints:
        names |= constraint_variables(con)
    if pa:
        names |= set(pa)
    return sorted(names, key=natural_key)


def is_consistent_partial(constraints: Sequence[Constraint], pa: dict,
                          universe: Optional[Sequence[str]] = None) -> bool:
    """Does some 0-1 completion of ``pa`` satisfy every constraint?"""
    names = _universe(constraints, universe, pa)
    if len(names) > MAX_CONSISTENCY_VARS:
        raise ClauseError(f"{len(names)} variables exceeds brute-force limit {MAX_CONSISTENCY_VARS}")
    free = [v for v in names if v not in pa]
    point = {v: pa[v] for v in names if v in pa}
    # constraints become checkable once their last free variable is fixed
    order = {v: i for i, v in enumerate(free)}
    ready: list[list[Constraint]] = [[] for _ in range(len(free) + 1)]
    for con in constraints:
        pos = [order[v] + 1 for v in constraint_variables(con) if v in order]
        ready[max(pos, default=0)].append(con)
    if any(not holds(con, point) for con in ready[0]):
        return False

    def search(i):
        if i == len(free):
            return True
        v = free[i]
        for val in (0, 1):
            point[v] = val
            if all(holds(con, point) for con in ready[i + 1]) and search(i + 1):
                return True
        del point[v]
        return False

    return search(0)


def solutions(constraints: Sequence[Constraint], names: Sequence[str]):
    for bits in itertools.product((0, 1), repeat=len(names)):
        point = dict(zip(names, bits))
        if all(holds(con, point) for con in constraints):
            yield bits


def partial_assignments(names: Sequence[str]):
    """All partial assignments, lexicographic with unassigned < 0 < 1."""
    for vals in itertools.product((None, 0, 1), repeat=len(names)):
        yield {v: x for v, x in zip(names, vals) if x is not None}


def _consistent_patterns(constraints, names):
    patterns = set()
    for bits in solutions(constraints, names):
        for mask in itertools.product((False, True), repeat=len(names)):
            patterns.add(tuple(b if keep else None for b, keep in zip(bits, mask)))
    return patterns


def _pattern(pa, names):
    return tuple(pa.get(v) for v in names)


def _check_set_size(names):
    if len(names) > MAX_SET_VARS:
        raise ClauseError(f"{len(names)} variables exceeds enumeration limit {MAX_SET_VARS}")


def is_consistent_set(constraints: Sequence[Constraint],
                      universe: Optional[Sequence[str]] = None) -> tuple[bool, Optional[dict]]:
    """Is every violation-free partial assignment extendable to a solution?

    Returns ``(True, None)`` or ``(False, witness)`` with the first
    offending partial assignment in enumeration order.
    """
    names = _universe(constraints, universe)
    _check_set_size(names)
    patterns = _consistent_patterns(constraints, names)
    for pa in partial_assignments(names):
        if _pattern(pa, names) in patterns:
            continue
        if not any(violates(pa, con) for con in constraints):
            return False, pa
    return True, None


def linear_form(con: Constraint) -> LinearConstraint:
    return clause_to_inequality(con) if isinstance(con, Clause) else con


def is_lp_consistent_partial(constraints: Sequence[Constraint], pa: dict) -> bool:
    """Feasibility of the LP relaxation (all variables in [0, 1]) with ``pa`` fixed."""
    rows = [linear_form(c) for c in constraints]
    names = _universe(rows, None, pa)
    bounds = {v: (Fraction(0), Fraction(1)) for v in names}
    for v, val in pa.items():
        bounds[v] = (Fraction(val), Fraction(val))
    return lp_solve(LpProblem(rows, {}, "min", bounds)).status != INFEASIBLE


def is_lp_consistent_set(constraints: Sequence[Constraint],
                         universe: Optional[Sequence[str]] = None) -> tuple[bool, Optional[dict]]:
    """Is every LP-consistent partial assignment consistent?"""
    names = _universe(constraints, universe)
    _check_set_size(names)
    patterns = _consistent_patterns(constraints, names)
    for pa in partial_assignments(names):
        if _pattern(pa, names) in patterns:
            continue
        if is_lp_consistent_partial(constraints, pa):
            return False, pa
    return True, None


# ---------------------------------------------------------------------------
# clause files
#
#   c comment
#   p cnf 3 2
#   x1 x2 x3
#   x1 -x3
#
# Literals are whitespace separated; a trailing "0" is allowed and a line
# holding only "0" is the empty clause.


def parse_clauses(text: str) -> list[Clause]:
    header = None
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c ") or line == "c" or line.startswith("%"):
            continue
        toks = line.split()
        if toks[0] == "p":
            if len(toks) != 4 or toks[1] != "cnf":
                raise ClauseError(f"line {lineno}: bad header {line!r}")
            try:
                header = (int(toks[2]), int(toks[3]))
            except ValueError:
                raise ClauseError(f"line {lineno}: bad header {line!r}") from None
            continue
        if toks[-1] == "0":
            toks = toks[:-1]
        try:
            out.append(Clause.of(*toks) if toks else EMPTY)
        except ClauseError as exc:
            raise ClauseError(f"line {lineno}: {exc}") from None
    if header is None:
        raise ClauseError("missing 'p cnf' header")
    if header[1] != len(out):
        raise ClauseError(f"header declares {header[1]} clauses, found {len(out)}")
    nvars = len({v for c in out for v in c.variables})
    if nvars > header[0]:
        raise ClauseError(f"header declares {header[0]} variables, found {nvars}")
    return out


def format_clauses(clauses: Sequence[Clause]) -> str:
    nvars = len({v for c in clauses for v in c.variables})
    lines = [f"p cnf {nvars} {len(clauses)}"]
    for c in clauses:
        lits = " ".join(l.var if l.positive else f"-{l.var}" for l in c.sorted_literals())
        lines.append(f"{lits} 0" if lits else "0")
    return "\n".join(lines) + "\n"
