"""Boole's probability logic as linear programming.

Each truth assignment ``v`` to the atoms gets a probability variable ``p_v``.
A premise ``P(F) = q`` becomes ``sum of p_v over v satisfying F = q``; the
query's probability is then minimised and maximised subject to the premises
and ``sum_v p_v = 1``.  Variables are named ``p_<bits>`` with the first atom
as the most significant bit, so with atoms ``A B C`` the assignment
A=1, B=0, C=1 is ``p_101``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .lp import EQ, GE, LE, INFEASIBLE, LinearConstraint, LpProblem, as_rational, lp_solve

MAX_ATOMS = 20


class ProbLogicError(ValueError):
    pass


class TooManyAtoms(ProbLogicError):
    pass


class InconsistentPremises(ProbLogicError):
    """The premise probabilities admit no distribution.

    ``certificate`` holds one multiplier per LP row (premises in order, then
    the normalisation row); combined, the rows give ``0 >= positive``.
    """

    def __init__(self, message, certificate):
        super().__init__(message)
        self.certificate = certificate


# ---------------------------------------------------------------------------
# formulas


class Formula:
    def eval(self, assignment: Mapping[str, bool]) -> bool:
        raise NotImplementedError

    def eval3(self, assignment: Mapping[str, Optional[bool]]) -> Optional[bool]:
        """Kleene three-valued evaluation; None means undetermined."""
        raise NotImplementedError

    def atoms(self) -> set[str]:
        raise NotImplementedError

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def eval(self, assignment):
        try:
            return bool(assignment[self.name])
        except KeyError:
            raise ProbLogicError(f"atom {self.name!r} is unassigned") from None

    def eval3(self, assignment):
        return assignment.get(self.name)

    def atoms(self):
        return {self.name}


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def eval(self, assignment):
        return not self.arg.eval(assignment)

    def eval3(self, assignment):
        val = self.arg.eval3(assignment)
        return None if val is None else not val

    def atoms(self):
        return self.arg.atoms()


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def eval(self, assignment):
        return self.left.eval(assignment) and self.right.eval(assignment)

    def eval3(self, assignment):
        a, b = self.left.eval3(assignment), self.right.eval3(assignment)
        if a is False or b is False:
            return False
        if a is None or b is None:
            return None
        return True

    def atoms(self):
        return self.left.atoms() | self.right.atoms()


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def eval(self, assignment):
        return self.left.eval(assignment) or self.right.eval(assignment)

    def eval3(self, assignment):
        a, b = self.left.eval3(assignment), self.right.eval3(assignment)
        if a is True or b is True:
            return True
        if a is None or b is None:
            return None
        return False

    def atoms(self):
        return self.left.atoms() | self.right.atoms()


@dataclass(frozen=True)
class Implies(Formula):
    """Material conditional: ``not left or right``."""
    left: Formula
    right: Formula

    def eval(self, assignment):
        return (not self.left.eval(assignment)) or self.right.eval(assignment)

    def eval3(self, assignment):
        return Or(Not(self.left), self.right).eval3(assignment)

    def atoms(self):
        return self.left.atoms() | self.right.atoms()


def eval_formula(f: Formula, assignment: Mapping[str, bool]) -> bool:
    return f.eval(assignment)


_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5}
_SYM = {Implies: "->", Or: "|", And: "&"}


def format_formula(f: Formula, parent: int = 0) -> str:
    prec = _PREC[type(f)]
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        text = "~" + format_formula(f.arg, prec)
    elif isinstance(f, Implies):
        # right associative
        text = f"{format_formula(f.left, prec + 1)} -> {format_formula(f.right, prec)}"
    else:
        text = f"{format_formula(f.left, prec)} {_SYM[type(f)]} {format_formula(f.right, prec + 1)}"
    return f"({text})" if prec < parent else text


_TOKEN = re.compile(r"\s*(->|[~&|()]|[A-Za-z_][A-Za-z0-9_]*)")


def _tokenize(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ProbLogicError(f"unexpected character at {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_formula(text: str) -> Formula:
    """Parse ``~``, ``&``, ``|`` and ``->`` (loosest, right associative)."""
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ProbLogicError(f"expected {expected or 'a token'} in {text!r}")
        pos += 1
        return tok

    def implication():
        left = disjunction()
        if peek() == "->":
            take()
            return Implies(left, implication())
        return left

    def disjunction():
        f = conjunction()
        while peek() == "|":
            take()
            f = Or(f, conjunction())
        return f

    def conjunction():
        f = unary()
        while peek() == "&":
            take()
            f = And(f, unary())
        return f

    def unary():
        tok = peek()
        if tok == "~":
            take()
            return Not(unary())
        if tok == "(":
            take()
            f = implication()
            take(")")
            return f
        if tok is None or tok in ("->", "&", "|", ")"):
            raise ProbLogicError(f"unexpected {tok or 'end of input'} in {text!r}")
        take()
        return Atom(tok)

    f = implication()
    if pos != len(toks):
        raise ProbLogicError(f"trailing input {' '.join(toks[pos:])!r} in {text!r}")
    return f


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Premise:
    formula: Formula
    probability: Fraction
    relation: str = EQ  # GE / LE for interval premises

    def __post_init__(self):
        prob = as_rational(self.probability)
        if not 0 <= prob <= 1:
            raise ProbLogicError(f"premise probability {prob} outside [0, 1]")
        if self.relation not in (EQ, GE, LE):
            raise ProbLogicError(f"bad premise relation {self.relation!r}")
        object.__setattr__(self, "probability", prob)


@dataclass
class ProbLogicInstance:
    atoms: list[str]
    premises: list[Premise] = field(default_factory=list)
    query: Optional[Formula] = None

    def __post_init__(self):
        if len(set(self.atoms)) != len(self.atoms):
            raise ProbLogicError("duplicate atom names")
        self.premises = [p if isinstance(p, Premise) else Premise(*p) for p in self.premises]
        declared = set(self.atoms)
        for f in [p.formula for p in self.premises] + ([self.query] if self.query else []):
            extra = f.atoms() - declared
            if extra:
                raise ProbLogicError(f"undeclared atom(s): {', '.join(sorted(extra))}")


@dataclass(frozen=True)
class ProbabilityInterval:
    lo: Fraction
    hi: Fraction

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def assignment_name(bits: Sequence[bool]) -> str:
    return "p_" + "".join("1" if b else "0" for b in bits)


def all_assignments(n: int):
    return itertools.product((False, True), repeat=n)


def _rows(inst: ProbLogicInstance, columns):
    """Constraint rows restricted to the given assignment columns."""
    rows = []
    for k, prem in enumerate(inst.premises):
        coeffs = {}
        for bits in columns:
            if prem.formula.eval(dict(zip(inst.atoms, bits))):
                coeffs[assignment_name(bits)] = 1
        rows.append(LinearConstraint(coeffs, prem.relation, prem.probability, f"premise{k + 1}"))
    rows.append(LinearConstraint({assignment_name(b): 1 for b in columns}, EQ, 1, "norm"))
    return rows


def _objective(inst, columns):
    return {assignment_name(b): 1 for b in columns
            if inst.query.eval(dict(zip(inst.atoms, b)))}


def build_assignment_lp(inst: ProbLogicInstance, sense: str = "min") -> LpProblem:
    if inst.query is None:
        raise ProbLogicError("instance has no query")
    if len(inst.atoms) > MAX_ATOMS:
        raise TooManyAtoms(f"{len(inst.atoms)} atoms exceeds the full-enumeration limit "
                           f"of {MAX_ATOMS}; use query_bounds_colgen")
    columns = list(all_assignments(len(inst.atoms)))
    bounds = {assignment_name(b): (Fraction(0), None) for b in columns}
    return LpProblem(_rows(inst, columns), _objective(inst, columns), sense, bounds)


def _inconsistent(result):
    return InconsistentPremises("premise probabilities are inconsistent", result.farkas)


def query_bounds(inst: ProbLogicInstance) -> ProbabilityInterval:
    lo = lp_solve(build_assignment_lp(inst, "min"))
    if lo.status == INFEASIBLE:
        raise _inconsistent(lo)
    hi = lp_solve(build_assignment_lp(inst, "max"))
    return ProbabilityInterval(lo.value, hi.value)


# ---------------------------------------------------------------------------
# column generation


def _greedy_model(f: Formula, atoms: Sequence[str]):
    """First satisfying assignment found by assigning atoms in order,
    preferring False and backtracking only on a definite falsification."""
    assignment: dict[str, Optional[bool]] = {}

    def extend(i):
        if f.eval3(assignment) is False:
            return False
        if i == len(atoms):
            return True
        for val in (False, True):
            assignment[atoms[i]] = val
            if extend(i + 1):
                return True
        del assignment[atoms[i]]
        return False

    if not extend(0):
        return None
    return tuple(assignment[a] for a in atoms)


def initial_columns(inst: ProbLogicInstance) -> list[tuple[bool, ...]]:
    n = len(inst.atoms)
    cols = [(False,) * n, (True,) * n]
    for prem in inst.premises:
        bits = _greedy_model(prem.formula, inst.atoms)
        if bits is not None:
            cols.append(bits)
    return list(dict.fromkeys(cols))


def _column_coefficients(inst, bits):
    env = dict(zip(inst.atoms, bits))
    return [1 if p.formula.eval(env) else 0 for p in inst.premises] + [1]


def _colgen(inst: ProbLogicInstance, sense: str, stats: Optional[dict] = None):
    n = len(inst.atoms)
    columns = initial_columns(inst)
    present = set(columns)
    while True:
        bounds = {assignment_name(b): (Fraction(0), None) for b in columns}
        master = LpProblem(_rows(inst, columns), _objective(inst, columns), sense, bounds)
        res = lp_solve(master)
        best = None
        if res.status == INFEASIBLE:
            # Farkas pricing: a column with positive certificate weight breaks the proof
            for bits in all_assignments(n):
                if bits in present:
                    continue
                w = sum(y * a for y, a in zip(res.farkas, _column_coefficients(inst, bits)))
                if w > 0 and (best is None or w > best[0]):
                    best = (w, bits)
            if best is None:
                raise _inconsistent(res)
        else:
            sign = 1 if sense == "min" else -1
            for bits in all_assignments(n):
                if bits in present:
                    continue
                q = 1 if inst.query.eval(dict(zip(inst.atoms, bits))) else 0
                rc = q - sum(y * a for y, a in zip(res.duals, _column_coefficients(inst, bits)))
                score = -sign * rc
                if score > 0 and (best is None or score > best[0]):
                    best = (score, bits)
            if best is None:
                if stats is not None:
                    stats[sense] = len(columns)
                return res.value
        columns.append(best[1])
        present.add(best[1])


def query_bounds_colgen(inst: ProbLogicInstance, stats: Optional[dict] = None) -> ProbabilityInterval:
    """Same interval as :func:`query_bounds`, from a restricted master LP.

    Pricing enumerates all assignments; ``stats`` (if given) receives the
    final number of columns per sense.
    """
    if inst.query is None:
        raise ProbLogicError("instance has no query")
    lo = _colgen(inst, "min", stats)
    hi = _colgen(inst, "max", stats)
    return ProbabilityInterval(lo, hi)


# ---------------------------------------------------------------------------
# text format
#
#   atoms A B C
#   A = 9/10
#   A -> B >= 0.8      # interval premise
#   query C

_PREMISE = re.compile(r"^(.*?)(>=|<=|=)\s*([0-9./]+)\s*$")


def parse_instance(text: str) -> ProbLogicInstance:
    atoms, premises, query = None, [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            word, _, rest = line.partition(" ")
            if word == "atoms":
                atoms = rest.split()
            elif word == "query":
                query = parse_formula(rest)
            else:
                m = _PREMISE.match(line)
                if not m:
                    raise ProbLogicError(f"cannot parse premise {line!r}")
                try:
                    prob = Fraction(m.group(3))
                except (ValueError, ZeroDivisionError):
                    raise ProbLogicError(f"bad probability {m.group(3)!r}") from None
                premises.append(Premise(parse_formula(m.group(1)), prob, m.group(2)))
        except ProbLogicError as exc:
            raise ProbLogicError(f"line {lineno}: {exc}") from None
    if atoms is None:
        raise ProbLogicError("missing 'atoms' line")
    if query is None:
        raise ProbLogicError("missing 'query' line")
    return ProbLogicInstance(atoms, premises, query)


def format_instance(inst: ProbLogicInstance) -> str:
    lines = ["atoms " + " ".join(inst.atoms)]
    lines += [f"{p.formula} {p.relation} {p.probability}" for p in inst.premises]
    lines.append(f"query {inst.query}")
    return "\n".join(lines) + "\n"
