"""Line-oriented text format for linear (0-1) programs.

::

    # comment
    min: x1 + x2
    c1: x1 + 2 x2 >= 2
    2 x1 + x2 >= 2
    bound x1 0 1        # lo hi, either may be "inf"/"-inf"
    binary x1 x2

The objective line is optional (a pure constraint set).  Coefficients are
exact: ``1/2 x``, ``0.9 x`` and ``-x`` are all accepted.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .lp import GE, LE, EQ, LinearConstraint, LpProblem, format_linear

_TERM = re.compile(
    r"\s*([+-])?\s*(\d+(?:/\d+|\.\d*)?|\.\d+)?\s*\*?\s*([A-Za-z_][A-Za-z0-9_\[\]]*)?\s*")
_REL = re.compile(r"(>=|<=|=)")


class ParseError(ValueError):
    pass


def parse_number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a rational number: {text!r}") from None


def parse_linear(text: str) -> dict[str, Fraction]:
    coeffs: dict[str, Fraction] = {}
    pos, text = 0, text.strip()
    if text in ("", "0"):
        return coeffs
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or m.group(3) is None:
            raise ParseError(f"cannot parse linear expression {text!r}")
        if pos > 0 and m.group(1) is None:
            raise ParseError(f"missing operator in {text!r}")
        coef = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        if m.group(1) == "-":
            coef = -coef
        var = m.group(3)
        coeffs[var] = coeffs.get(var, Fraction(0)) + coef
        pos = m.end()
    return {v: c for v, c in coeffs.items() if c}


def parse_constraint(text: str, name: str = "") -> LinearConstraint:
    parts = _REL.split(text)
    if len(parts) != 3:
        raise ParseError(f"expected exactly one of >=, <=, = in {text!r}")
    lhs, rel, rhs = parts
    return LinearConstraint(parse_linear(lhs), rel, parse_number(rhs), name)


def _bound(tok: str):
    tok = tok.strip().lower()
    if tok in ("inf", "+inf", "-inf", "none"):
        return None
    return parse_number(tok)


def parse_lp(text: str) -> tuple[LpProblem, set[str]]:
    """Parse LP text; returns the problem and its set of binary variables."""
    problem = LpProblem()
    binaries: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            head, _, rest = line.partition(":")
            low = head.strip().lower()
            if rest and low in ("min", "max", "minimize", "maximize"):
                problem.sense = low[:3]
                problem.objective = parse_linear(rest)
            elif line.split()[0].lower() == "bound":
                toks = line.split()
                if len(toks) != 4:
                    raise ParseError("bound line needs: bound VAR LO HI")
                problem.bounds[toks[1]] = (_bound(toks[2]), _bound(toks[3]))
            elif line.split()[0].lower() in ("binary", "int"):
                binaries.update(line.split()[1:])
            elif rest and not _REL.search(head):
                problem.constraints.append(parse_constraint(rest, head.strip()))
            else:
                problem.constraints.append(parse_constraint(line))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return problem, binaries


def format_lp(problem: LpProblem, binaries=()) -> str:
    lines = []
    if any(problem.objective.values()) or problem.sense != "min":
        lines.append(f"{problem.sense}: {format_linear(problem.objective)}")
    for con in problem.constraints:
        prefix = f"{con.name}: " if con.name else ""
        lines.append(f"{prefix}{format_linear(con.coefficients)} {con.relation} {con.rhs}")
    for var, (lo, hi) in sorted(problem.bounds.items()):
        lo_s = "-inf" if lo is None else str(lo)
        hi_s = "inf" if hi is None else str(hi)
        lines.append(f"bound {var} {lo_s} {hi_s}")
    if binaries:
        lines.append("binary " + " ".join(sorted(binaries)))
    return "\n".join(lines) + "\n"


__all__ = ["ParseError", "parse_linear", "parse_constraint", "parse_lp", "format_lp",
           "parse_number", "GE", "LE", "EQ"]
