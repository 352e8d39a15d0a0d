"""Exact rational linear programming and 0-1 branch-and-bound.

All arithmetic is exact rational (results are :class:`fractions.Fraction`),
so optimal values, dual multipliers and infeasibility certificates are exact.

Sign conventions (for a problem over variables ``x``):

* ``duals[k]`` and ``reduced_costs[v]`` satisfy
  ``objective = sum_k duals[k] * a_k + reduced_costs`` coefficientwise and
  ``value = sum_k duals[k] * b_k + sum_v reduced_costs[v] * (active bound of v)``.
  For a minimisation, duals are >= 0 on ``>=`` rows and <= 0 on ``<=`` rows;
  for a maximisation the signs flip.
* ``farkas[k]`` (infeasible problems) is >= 0 on ``>=`` rows, <= 0 on ``<=``
  rows and free on ``=`` rows.  Together with ``farkas_lower`` (>= 0, applied
  to ``x_v >= lo_v``) and ``farkas_upper`` (<= 0, applied to ``x_v <= hi_v``)
  the combination has every variable coefficient equal to zero and a strictly
  positive right-hand side, i.e. it reads ``0 >= positive``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

Rational = Fraction

GE, LE, EQ = ">=", "<=", "="
RELATIONS = (GE, LE, EQ)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

try:  # exact rationals in the tableau; gmpy2 is several times faster than Fraction
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


def _q(x) -> "_Q":
    return _Q(x.numerator, x.denominator)


def _frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class LpError(ValueError):
    """Malformed problem or unsupported request."""


def as_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through repr so 0.9 means 9/10, not the nearest binary double
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    coefficients: Mapping[str, Fraction]
    relation: str
    rhs: Fraction
    name: str = ""

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise LpError(f"unknown relation {self.relation!r}")
        coeffs = {}
        for var, coef in self.coefficients.items():
            if not isinstance(var, str) or not var:
                raise LpError(f"variable ids must be nonempty strings, got {var!r}")
            coef = as_rational(coef)
            if coef:
                coeffs[var] = coef
        object.__setattr__(self, "coefficients", dict(sorted(coeffs.items())))
        object.__setattr__(self, "rhs", as_rational(self.rhs))

    @property
    def variables(self) -> list[str]:
        return list(self.coefficients)

    def lhs(self, point: Mapping[str, object]) -> Fraction:
        return sum((c * as_rational(point[v]) for v, c in self.coefficients.items()),
                   Fraction(0))

    def satisfied_by(self, point: Mapping[str, object]) -> bool:
        lhs = self.lhs(point)
        if self.relation == GE:
            return lhs >= self.rhs
        if self.relation == LE:
            return lhs <= self.rhs
        return lhs == self.rhs

    def as_ge(self) -> list["LinearConstraint"]:
        """Equivalent list of ``>=`` rows (one, or two for an equality)."""
        neg = LinearConstraint({v: -c for v, c in self.coefficients.items()}, GE,
                               -self.rhs, self.name)
        if self.relation == GE:
            return [self]
        if self.relation == LE:
            return [neg]
        return [LinearConstraint(self.coefficients, GE, self.rhs, self.name), neg]

    def key(self):
        return (tuple(self.coefficients.items()), self.relation, self.rhs)

    def __eq__(self, other):
        if not isinstance(other, LinearConstraint):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        return f"{format_linear(self.coefficients)} {self.relation} {self.rhs}"


def format_linear(coefficients: Mapping[str, Fraction]) -> str:
    coefficients = {v: c for v, c in coefficients.items() if c}
    if not coefficients:
        return "0"
    parts = []
    for var, coef in coefficients.items():
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        term = var if mag == 1 else f"{mag} {var}"
        if not parts:
            parts.append(term if sign == "+" else f"-{term}")
        else:
            parts.append(f"{sign} {term}")
    return " ".join(parts)


@dataclass
class LpProblem:
    constraints: list[LinearConstraint] = field(default_factory=list)
    objective: dict[str, Fraction] = field(default_factory=dict)
    sense: str = "min"
    # var -> (lo, hi); None means unbounded on that side.  Unlisted vars are >= 0.
    bounds: dict[str, tuple[Optional[Fraction], Optional[Fraction]]] = field(default_factory=dict)

    def variables(self) -> list[str]:
        names = set(self.objective) | set(self.bounds)
        for con in self.constraints:
            names.update(con.coefficients)
        return sorted(names)

    def bound(self, var: str) -> tuple[Optional[Fraction], Optional[Fraction]]:
        lo, hi = self.bounds.get(var, (Fraction(0), None))
        return (None if lo is None else as_rational(lo),
                None if hi is None else as_rational(hi))

    def validate(self):
        if self.sense not in ("min", "max"):
            raise LpError(f"sense must be 'min' or 'max', got {self.sense!r}")
        known = set(self.bounds)
        for con in self.constraints:
            known.update(con.coefficients)
        unknown = sorted(set(self.objective) - known)
        if unknown:
            raise LpError(f"objective uses unknown variable(s): {', '.join(unknown)}")

    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        return sum((as_rational(c) * as_rational(point.get(v, 0))
                    for v, c in self.objective.items()), Fraction(0))

    def with_constraints(self, extra: Iterable[LinearConstraint]) -> "LpProblem":
        return LpProblem(list(self.constraints) + list(extra), dict(self.objective),
                         self.sense, dict(self.bounds))

    def with_bounds(self, extra: Mapping[str, tuple]) -> "LpProblem":
        bounds = dict(self.bounds)
        bounds.update(extra)
        return LpProblem(list(self.constraints), dict(self.objective), self.sense, bounds)


@dataclass
class LpResult:
    status: str
    value: Optional[Fraction] = None
    primal: dict[str, Fraction] = field(default_factory=dict)
    duals: list[Fraction] = field(default_factory=list)
    reduced_costs: dict[str, Fraction] = field(default_factory=dict)
    farkas: list[Fraction] = field(default_factory=list)
    farkas_lower: dict[str, Fraction] = field(default_factory=dict)
    farkas_upper: dict[str, Fraction] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# dense tableau simplex (Bland's rule)


class _Tableau:
    def __init__(self, rows, basis, ncols):
        self.rows = rows          # each row: ncols coefficients + rhs
        self.basis = basis
        self.ncols = ncols
        self.obj = None

    def set_costs(self, costs):
        obj = list(costs) + [_Q(0)]
        for r, b in enumerate(self.basis):
            cb = costs[b]
            if cb:
                row = self.rows[r]
                for j in range(self.ncols + 1):
                    if row[j]:
                        obj[j] -= cb * row[j]
        self.obj = obj

    def pivot(self, r, j):
        prow = self.rows[r]
        piv = prow[j]
        if piv != 1:
            prow = [x / piv for x in prow]
            self.rows[r] = prow
        nz = [k for k, x in enumerate(prow) if x]
        for other in self.rows + [self.obj]:
            if other is prow:
                continue
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * prow[k]
        self.basis[r] = j

    def run(self, allowed):
        """Minimise the current objective row; returns False if unbounded."""
        while True:
            enter = next((j for j in range(self.ncols) if allowed[j] and self.obj[j] < 0), None)
            if enter is None:
                return True
            best = None
            for r, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    key = (row[-1] / a, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return False
            self.pivot(best[1], enter)


def lp_solve(problem: LpProblem) -> LpResult:
    problem.validate()
    names = problem.variables()
    bounds = {v: problem.bound(v) for v in names}

    # columns: list of (var, sign); x_var = shift + sum(sign * col)
    columns = []
    shift = {}
    for v in names:
        lo, hi = bounds[v]
        if lo is not None:
            shift[v] = lo
            columns.append((v, 1))
        elif hi is not None:
            shift[v] = hi
            columns.append((v, -1))
        else:
            shift[v] = Fraction(0)
            columns.append((v, 1))
            columns.append((v, -1))
    col_of = {}
    for j, (v, s) in enumerate(columns):
        col_of.setdefault(v, []).append((j, s))

    # internal rows in >= form; origin = ("con", k, sign) or ("ub", var)
    internal = []
    for k, con in enumerate(problem.constraints):
        signs = {GE: (1,), LE: (-1,), EQ: (1, -1)}[con.relation]
        for s in signs:
            internal.append(({v: s * c for v, c in con.coefficients.items()}, s * con.rhs,
                             ("con", k, s)))
    for v in names:
        lo, hi = bounds[v]
        if lo is not None and hi is not None:
            internal.append(({v: Fraction(-1)}, -hi, ("ub", v, -1)))

    nx = len(columns)
    m = len(internal)
    dense = []
    for coeffs, rhs, _ in internal:
        row = [Fraction(0)] * nx
        b = rhs
        for v, c in coeffs.items():
            b -= c * shift[v]
            for j, s in col_of[v]:
                row[j] += s * c
        dense.append((row, b))

    art_rows = [k for k in range(m) if dense[k][1] > 0]
    ncols = nx + m + len(art_rows)
    rows, basis = [], []
    art_index = {k: nx + m + i for i, k in enumerate(art_rows)}
    zero, one = _Q(0), _Q(1)
    for k, (a, b) in enumerate(dense):
        row = [zero] * (ncols + 1)
        if k in art_index:
            row[:nx] = [_q(x) for x in a]
            row[nx + k] = -one
            row[art_index[k]] = one
            row[-1] = _q(b)
            basis.append(art_index[k])
        else:
            row[:nx] = [_q(-x) for x in a]
            row[nx + k] = one
            row[-1] = _q(-b)
            basis.append(nx + k)
        rows.append(row)
    tab = _Tableau(rows, basis, ncols)

    def row_multipliers():
        return [_frac(tab.obj[nx + k]) for k in range(m)]

    def to_original(y):
        """Map internal row multipliers to (per-constraint, per-var-upper) and the
        combined original-space coefficient vector."""
        per_con = [Fraction(0)] * len(problem.constraints)
        upper = {}
        combo = {v: Fraction(0) for v in names}
        for yk, (coeffs, _, origin) in zip(y, internal):
            if not yk:
                continue
            if origin[0] == "con":
                per_con[origin[1]] += origin[2] * yk
            else:
                upper[origin[1]] = upper.get(origin[1], Fraction(0)) + origin[2] * yk
            for v, c in coeffs.items():
                combo[v] += yk * c
        return per_con, upper, combo

    if art_rows:
        costs = [zero] * ncols
        for k in art_rows:
            costs[art_index[k]] = one
        tab.set_costs(costs)
        tab.run([True] * ncols)
        if -tab.obj[-1] > 0:
            per_con, upper, combo = to_original(row_multipliers())
            lower = {}
            for v in names:
                g = combo[v]
                if g < 0:
                    lower[v] = -g
                elif g > 0:
                    upper[v] = upper.get(v, Fraction(0)) - g
            upper = {v: u for v, u in upper.items() if u}
            return LpResult(INFEASIBLE, farkas=per_con, farkas_lower=lower,
                            farkas_upper=upper)
        # drive zero-level artificials out of the basis where possible
        for r in range(m):
            if tab.basis[r] >= nx + m:
                j = next((j for j in range(nx + m) if tab.rows[r][j]), None)
                if j is not None:
                    tab.pivot(r, j)

    sign = 1 if problem.sense == "min" else -1
    costs = [zero] * ncols
    for j, (v, s) in enumerate(columns):
        costs[j] = _q(sign * s * as_rational(problem.objective.get(v, 0)))
    tab.set_costs(costs)
    allowed = [j < nx + m for j in range(ncols)]
    if not tab.run(allowed):
        return LpResult(UNBOUNDED)

    xcol = [Fraction(0)] * ncols
    for r, b in enumerate(tab.basis):
        xcol[b] = _frac(tab.rows[r][-1])
    primal = {}
    for v in names:
        primal[v] = shift[v] + sum((s * xcol[j] for j, s in col_of[v]), Fraction(0))
    per_con, _, _ = to_original(row_multipliers())
    duals = [sign * y for y in per_con]
    reduced = {}
    for v in names:
        d = as_rational(problem.objective.get(v, 0))
        d -= sum((y * con.coefficients.get(v, 0) for y, con in zip(duals, problem.constraints)),
                 Fraction(0))
        if d:
            reduced[v] = d
    return LpResult(OPTIMAL, problem.evaluate(primal), primal, duals, reduced)


# ---------------------------------------------------------------------------
# 0-1 branch and bound


@dataclass
class MilpResult:
    status: str
    value: Optional[Fraction] = None
    assignment: dict[str, int] = field(default_factory=dict)
    node_count: int = 0
    primal: dict[str, Fraction] = field(default_factory=dict)


LazyCallback = Callable[[dict, dict], list]


def milp_solve(problem: LpProblem, integral_vars: Iterable[str],
               lazy: Optional[LazyCallback] = None) -> MilpResult:
    """Best-first branch-and-bound over 0-1 variables.

    ``lazy(assignment, primal)`` is called at every LP solution that is integral
    on ``integral_vars``; it returns constraints to add (an empty list accepts
    the point).  Added constraints are kept for the rest of the search.
    """
    integral = sorted(set(integral_vars))
    problem.validate()
    known = set(problem.variables())
    missing = [v for v in integral if v not in known]
    if missing:
        raise LpError(f"integral variable(s) not in problem: {', '.join(missing)}")
    bounds = {}
    for v in integral:
        lo, hi = problem.bound(v)
        lo = Fraction(0) if lo is None else max(lo, Fraction(0))
        hi = Fraction(1) if hi is None else min(hi, Fraction(1))
        bounds[v] = (lo, hi)
    base = problem.with_bounds(bounds)
    sign = 1 if problem.sense == "min" else -1
    pool: list[LinearConstraint] = []

    best_value = None
    best = None
    nodes = 0
    seq = 0
    heap = [(Fraction(0), 0, ())]
    root = True
    while heap:
        key, _, fixes = heapq.heappop(heap)
        if best_value is not None and not root and key >= sign * best_value:
            continue
        root = False
        nodes += 1
        while True:
            node = base.with_constraints(pool).with_bounds({v: (b, b) for v, b in fixes})
            res = lp_solve(node)
            if res.status == UNBOUNDED:
                raise LpError("LP relaxation is unbounded")
            if res.status == INFEASIBLE:
                break
            if best_value is not None and sign * res.value >= sign * best_value:
                break
            frac = [v for v in integral if res.primal[v].denominator != 1]
            if frac:
                half = Fraction(1, 2)
                v = min(frac, key=lambda u: (abs(res.primal[u] - half), u))
                for val in (Fraction(0), Fraction(1)):
                    seq += 1
                    heapq.heappush(heap, (sign * res.value, seq, fixes + ((v, val),)))
                break
            assignment = {v: int(res.primal[v]) for v in integral}
            cuts = lazy(assignment, res.primal) if lazy is not None else []
            if cuts:
                pool.extend(cuts)
                continue
            best_value, best = res.value, (assignment, res.primal)
            break
    if best is None:
        return MilpResult(INFEASIBLE, node_count=nodes)
    return MilpResult(OPTIMAL, best_value, best[0], nodes, best[1])
