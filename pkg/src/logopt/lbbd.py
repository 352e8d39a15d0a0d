"""Logic-based Benders decomposition for job assignment with cumulative
scheduling on each facility, minimising overall makespan.

The master assigns jobs to facilities (MILP over ``x_i_j``); each facility's
subproblem is an exact cumulative scheduling problem solved by a small
constraint-propagation search.  Indices are 0-based.

Master variables: ``x_i_j`` (job j on facility i), ``M_i`` (makespan of
facility i), ``M`` (overall makespan).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .lp import EQ, GE, INFEASIBLE, LinearConstraint, LpProblem, milp_solve

ITERATIVE, BRANCH_AND_CHECK = "iterative", "branch_and_check"


class LbbdError(ValueError):
    pass


class SubproblemInfeasible(LbbdError):
    def __init__(self, facility, job):
        super().__init__(f"job {job} needs more than the capacity of facility {facility}")
        self.facility = facility
        self.job = job


class InfeasibleInstance(LbbdError):
    pass


@dataclass(frozen=True)
class SchedulingInstance:
    p: tuple        # p[i][j]
    r: tuple        # r[j]
    c: tuple        # c[i][j]
    C: tuple        # C[i]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(tuple(int(x) for x in row) for row in self.p))
        object.__setattr__(self, "c", tuple(tuple(int(x) for x in row) for row in self.c))
        object.__setattr__(self, "r", tuple(int(x) for x in self.r))
        object.__setattr__(self, "C", tuple(int(x) for x in self.C))
        m, n = len(self.C), len(self.r)
        if len(self.p) != m or len(self.c) != m or any(len(row) != n for row in self.p + self.c):
            raise LbbdError("p and c must be m x n matrices")
        if any(x < 1 for row in self.p + self.c for x in row):
            raise LbbdError("processing times and rates must be >= 1")
        if any(x < 0 for x in self.r):
            raise LbbdError("release times must be >= 0")

    @property
    def m(self) -> int:
        return len(self.C)

    @property
    def n(self) -> int:
        return len(self.r)

    def allowed(self, i, j) -> bool:
        return self.c[i][j] <= self.C[i]


def x_var(i, j):
    return f"x_{i}_{j}"


def m_var(i):
    return f"M_{i}"


# ---------------------------------------------------------------------------
# cumulative propagation and the subproblem


def cumulative_propagate(windows: dict, p: dict, c: dict, C: int) -> Optional[dict]:
    """Timetable filtering on start windows ``job -> (est, lst)``.

    Returns tightened windows, or None when the compulsory parts alone
    overload the resource or a window empties.
    """
    w = dict(windows)
    changed = True
    while changed:
        changed = False
        profile = Counter()
        for j, (e, l) in w.items():
            for t in range(l, e + p[j]):
                profile[t] += c[j]
        if any(v > C for v in profile.values()):
            return None
        for j, (e, l) in list(w.items()):
            def blocked(t):
                own = c[j] if l <= t < e + p[j] else 0
                return profile[t] - own + c[j] > C

            s = e
            while s <= l:
                bad = [t for t in range(s, s + p[j]) if blocked(t)]
                if not bad:
                    break
                s = bad[-1] + 1
            if s > l:
                return None
            u = l
            while u >= s:
                bad = [t for t in range(u, u + p[j]) if blocked(t)]
                if not bad:
                    break
                u = bad[0] - p[j]
            if u < s:
                return None
            if (s, u) != (e, l):
                w[j] = (s, u)
                changed = True
    return w


@dataclass
class SubproblemResult:
    makespan: int
    starts: dict = field(default_factory=dict)
    nodes: int = 0


def _energy_bound(windows, p, c, C, jobs):
    best = 0
    ests = sorted({windows[j][0] for j in jobs})
    for t in ests:
        energy = sum(p[j] * c[j] for j in jobs if windows[j][0] >= t)
        best = max(best, t + -(-energy // C))
    return best


def serial_schedule(order, r, p, c, C) -> dict:
    """Place jobs in ``order`` at their earliest resource-feasible start."""
    usage = Counter()
    starts = {}
    for j in order:
        s = r[j]
        while any(usage[t] + c[j] > C for t in range(s, s + p[j])):
            s += 1
        for t in range(s, s + p[j]):
            usage[t] += c[j]
        starts[j] = s
    return starts


def solve_subproblem(inst: SchedulingInstance, i: int, jobs) -> SubproblemResult:
    """Exact minimum makespan of ``jobs`` on facility ``i`` (0 for no jobs)."""
    jobs = sorted(jobs)
    if not jobs:
        return SubproblemResult(0, {})
    for j in jobs:
        if not inst.allowed(i, j):
            raise SubproblemInfeasible(i, j)
    p = {j: inst.p[i][j] for j in jobs}
    c = {j: inst.c[i][j] for j in jobs}
    r = {j: inst.r[j] for j in jobs}
    C = inst.C[i]

    starts = serial_schedule(sorted(jobs, key=lambda j: (r[j], j)), r, p, c, C)
    best = [max(starts[j] + p[j] for j in jobs), starts]
    nodes = [0]
    root = {j: (r[j], best[0] - p[j]) for j in jobs}
    if _energy_bound(root, p, c, C, jobs) >= best[0]:
        return SubproblemResult(best[0], dict(best[1]), 0)

    def dfs(w):
        nodes[0] += 1
        w = {j: (e, min(l, best[0] - 1 - p[j])) for j, (e, l) in w.items()}
        if any(e > l for e, l in w.values()):
            return
        w = cumulative_propagate(w, p, c, C)
        if w is None:
            return
        lb = max(max(e + p[j] for j, (e, _) in w.items()), _energy_bound(w, p, c, C, jobs))
        if lb >= best[0]:
            return
        free = [j for j in jobs if w[j][0] < w[j][1]]
        if not free:
            best[0] = max(w[j][0] + p[j] for j in jobs)
            best[1] = {j: w[j][0] for j in jobs}
            return
        j = min(free, key=lambda k: (w[k][0], k))
        e, l = w[j]
        for s in range(e, l + 1):
            if s + p[j] >= best[0]:
                break
            child = dict(w)
            child[j] = (s, s)
            dfs(child)

    dfs(root)
    return SubproblemResult(best[0], dict(best[1]), nodes[0])


def check_schedule(inst: SchedulingInstance, i: int, starts: dict) -> bool:
    usage = Counter()
    for j, s in starts.items():
        if s < inst.r[j]:
            return False
        for t in range(s, s + inst.p[i][j]):
            usage[t] += inst.c[i][j]
    return all(v <= inst.C[i] for v in usage.values())


# ---------------------------------------------------------------------------
# cuts and relaxation


@dataclass(frozen=True)
class BendersCut:
    facility: int
    kind: str               # "analytic" or "nogood"
    constraint: LinearConstraint
    iteration: int = 0

    def bound(self, jobs_on_facility) -> Fraction:
        """Right-hand side of ``M_i >= bound(x)`` for the given job set."""
        on = set(jobs_on_facility)
        i = self.facility
        point = {v: 0 for v in self.constraint.coefficients}
        for v in point:
            if v.startswith("x_"):
                _, fi, j = v.split("_")
                point[v] = 1 if int(fi) == i and int(j) in on else 0
        rest = sum((coef * point[v] for v, coef in self.constraint.coefficients.items()
                    if v != m_var(i)), Fraction(0))
        return self.constraint.rhs - rest


def benders_cut(inst: SchedulingInstance, i: int, jobs, makespan: int,
                iteration: int = 0) -> list[BendersCut]:
    """Cuts ``M_i >= ...`` from an optimal makespan of ``jobs`` on facility ``i``.

    The analytic cut charges each removed job its processing time plus the
    release-time spread.  When that bound is still positive with every job
    removed, the surplus is dropped unless the earliest-released job stays,
    so the cut also holds for a facility left empty.  The no-good cut
    restores the full makespan whenever all of ``jobs`` stay.
    """
    jobs = sorted(jobs)
    if not jobs:
        return []
    rs = [inst.r[j] for j in jobs]
    total_p = sum(inst.p[i][j] for j in jobs)
    const = makespan - total_p - max(rs) + min(rs)
    coeffs = {m_var(i): Fraction(1)}
    for j in jobs:
        coeffs[x_var(i, j)] = Fraction(-inst.p[i][j])
    empty_bound = const
    if empty_bound > 0:
        k = min(jobs, key=lambda j: (inst.r[j], j))
        coeffs[x_var(i, k)] -= empty_bound
        const -= empty_bound
    analytic = LinearConstraint(coeffs, GE, const, f"benders{iteration}a_{i}")
    nogood = {m_var(i): Fraction(1)}
    for j in jobs:
        nogood[x_var(i, j)] = Fraction(-makespan)
    nogood_row = LinearConstraint(nogood, GE, makespan * (1 - len(jobs)), f"benders{iteration}b_{i}")
    return [BendersCut(i, "analytic", analytic, iteration),
            BendersCut(i, "nogood", nogood_row, iteration)]


def relaxation_inequalities(inst: SchedulingInstance) -> list[LinearConstraint]:
    """Energy rows ``t + (1/C_i) * sum p c x`` over jobs released at or after
    each distinct release time ``t``.

    Rows for ``t = 0`` bound ``M_i``.  Rows for ``t > 0`` bound the overall
    makespan ``M``: a facility that gets no job released at or after ``t``
    can finish before ``t``, but some job released at ``t`` cannot.
    """
    rows = []
    for i in range(inst.m):
        for t in sorted(set(inst.r)):
            lhs = m_var(i) if t == 0 else "M"
            coeffs = {lhs: Fraction(1)}
            for j in range(inst.n):
                if inst.r[j] >= t and inst.allowed(i, j):
                    coeffs[x_var(i, j)] = -Fraction(inst.p[i][j] * inst.c[i][j], inst.C[i])
            rows.append(LinearConstraint(coeffs, GE, t, f"relax_{i}_{t}"))
    return rows


def build_master(inst: SchedulingInstance, cuts: Sequence[BendersCut] = ()):
    """Master MILP and its set of binary variables."""
    rows = []
    for i in range(inst.m):
        rows.append(LinearConstraint({"M": 1, m_var(i): -1}, GE, 0, f"mk_{i}"))
    for j in range(inst.n):
        rows.append(LinearConstraint({x_var(i, j): 1 for i in range(inst.m)}, EQ, 1, f"assign_{j}"))
    rows += relaxation_inequalities(inst)
    rows += [cut.constraint for cut in sorted(cuts, key=lambda c: (c.iteration, c.facility, c.kind))]
    bounds = {"M": (Fraction(0), None)}
    binaries = set()
    for i in range(inst.m):
        bounds[m_var(i)] = (Fraction(0), None)
        for j in range(inst.n):
            hi = 1 if inst.allowed(i, j) else 0
            bounds[x_var(i, j)] = (Fraction(0), Fraction(hi))
            binaries.add(x_var(i, j))
    return LpProblem(rows, {"M": Fraction(1)}, "min", bounds), binaries


# ---------------------------------------------------------------------------
# the decomposition


@dataclass
class TraceLine:
    iteration: int
    lower: Optional[Fraction]       # master value z_k (None for branch-and-check events)
    upper: Optional[int]
    cuts_added: int

    def __str__(self):
        lo = "-" if self.lower is None else str(self.lower)
        up = "inf" if self.upper is None else str(self.upper)
        return f"iter {self.iteration}: z={lo} best={up} cuts+={self.cuts_added}"


@dataclass
class LbbdResult:
    makespan: int
    assignment: list                # facility of each job
    schedule: dict                  # facility -> {job: start}
    trace: list
    master_nodes: int = 0
    cuts: list = field(default_factory=list)    # every BendersCut emitted


def _jobs_by_facility(inst, assignment):
    jobs = {i: [] for i in range(inst.m)}
    for (i, j), v in assignment.items():
        if v:
            jobs[i].append(j)
    return jobs


def _decode(inst, milp_assignment):
    out = {}
    for i in range(inst.m):
        for j in range(inst.n):
            out[(i, j)] = milp_assignment[x_var(i, j)]
    return out


def solve_lbbd(inst: SchedulingInstance, mode: str = ITERATIVE, max_iterations: int = 10_000) -> LbbdResult:
    for j in range(inst.n):
        if not any(inst.allowed(i, j) for i in range(inst.m)):
            raise InfeasibleInstance(f"job {j} fits on no facility")
    cache: dict = {}

    def sub(i, jobs):
        key = (i, tuple(jobs))
        if key not in cache:
            cache[key] = solve_subproblem(inst, i, jobs)
        return cache[key]

    if mode == ITERATIVE:
        return _iterative(inst, sub, max_iterations)
    if mode == BRANCH_AND_CHECK:
        return _branch_and_check(inst, sub)
    raise LbbdError(f"unknown mode {mode!r}")


def _iterative(inst, sub, max_iterations):
    cuts: list[BendersCut] = []
    seen = set()
    trace = []
    best = None
    nodes = 0
    for k in range(1, max_iterations + 1):
        master, binaries = build_master(inst, cuts)
        res = milp_solve(master, binaries)
        nodes += res.node_count
        if res.status == INFEASIBLE:
            raise InfeasibleInstance("master problem is infeasible")
        z = res.value
        jobs = _jobs_by_facility(inst, _decode(inst, res.assignment))
        subs = {i: sub(i, jobs[i]) for i in range(inst.m)}
        sp = max(s.makespan for s in subs.values())
        if best is None or sp < best[0]:
            best = (sp, jobs, subs)
        added = 0
        if z < best[0]:
            for i in range(inst.m):
                for cut in benders_cut(inst, i, jobs[i], subs[i].makespan, k):
                    if cut.constraint.key() not in seen:
                        seen.add(cut.constraint.key())
                        cuts.append(cut)
                        added += 1
        trace.append(TraceLine(k, z, best[0], added))
        if z >= best[0]:
            break
    else:
        raise LbbdError(f"no convergence in {max_iterations} iterations")
    return _result(inst, best, trace, nodes, cuts)


def _branch_and_check(inst, sub):
    master, binaries = build_master(inst)
    trace = []
    best = [None]
    calls = [0]
    emitted = []

    def check(assignment, primal):
        calls[0] += 1
        jobs = _jobs_by_facility(inst, _decode(inst, assignment))
        subs = {i: sub(i, jobs[i]) for i in range(inst.m)}
        new = []
        for i in range(inst.m):
            if primal[m_var(i)] < subs[i].makespan:
                cuts = benders_cut(inst, i, jobs[i], subs[i].makespan, calls[0])
                emitted.extend(cuts)
                new += [c.constraint for c in cuts]
        if not new:
            sp = max(s.makespan for s in subs.values())
            if best[0] is None or sp < best[0][0]:
                best[0] = (sp, jobs, subs)
        trace.append(TraceLine(calls[0], primal["M"], None if best[0] is None else best[0][0], len(new)))
        return new

    res = milp_solve(master, binaries, lazy=check)
    if res.status == INFEASIBLE:
        raise InfeasibleInstance("master problem is infeasible")
    return _result(inst, best[0], trace, res.node_count, emitted)


def _result(inst, best, trace, nodes, cuts):
    sp, jobs, subs = best
    assignment = [None] * inst.n
    for i, js in jobs.items():
        for j in js:
            assignment[j] = i
    schedule = {i: dict(subs[i].starts) for i in range(inst.m)}
    return LbbdResult(sp, assignment, schedule, trace, nodes, cuts)


# ---------------------------------------------------------------------------
# instance files: "m n", p (m x n), r (n), c (m x n), C (m)


def parse_scheduling(text: str) -> SchedulingInstance:
    toks = [t for line in text.splitlines() for t in line.split("#", 1)[0].split()]
    try:
        vals = [int(t) for t in toks]
    except ValueError as exc:
        raise LbbdError(f"bad integer: {exc}") from None
    if len(vals) < 2:
        raise LbbdError("missing 'm n' header")
    m, n = vals[:2]
    need = 2 + 2 * m * n + n + m
    if len(vals) != need:
        raise LbbdError(f"expected {need} numbers for m={m}, n={n}, found {len(vals)}")
    pos = 2
    p = [vals[pos + i * n: pos + (i + 1) * n] for i in range(m)]
    pos += m * n
    r = vals[pos: pos + n]
    pos += n
    c = [vals[pos + i * n: pos + (i + 1) * n] for i in range(m)]
    pos += m * n
    C = vals[pos: pos + m]
    return SchedulingInstance(p, r, c, C)


def format_scheduling(inst: SchedulingInstance) -> str:
    lines = [f"{inst.m} {inst.n}"]
    lines += [" ".join(map(str, row)) for row in inst.p]
    lines.append(" ".join(map(str, inst.r)))
    lines += [" ".join(map(str, row)) for row in inst.c]
    lines.append(" ".join(map(str, inst.C)))
    return "\n".join(lines) + "\n"
