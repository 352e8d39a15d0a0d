"""Command-line front end.

    logopt problogic {bounds,bounds-cg} FILE
    logopt clause {resolve,closure,input-derive,unitprop,to-ineq,cground,consistent,lp-consistent} FILE
    logopt lp {solve,milp} FILE
    logopt dd {exact,relax,restrict,bnb,near-opt,dot} FILE [--width N] [--delta Q]
    logopt lbbd solve FILE [--mode iter|bcheck]

Exit codes: 0 success, 2 usage/file/parse error, 3 solver error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import clausal, dd, lbbd, lp, lptext, problogic, sequencing

ACTIONS = {
    "problogic": ("bounds", "bounds-cg"),
    "clause": ("resolve", "closure", "input-derive", "unitprop", "to-ineq", "cground",
               "consistent", "lp-consistent"),
    "lp": ("solve", "milp"),
    "dd": ("exact", "relax", "restrict", "bnb", "near-opt", "dot"),
    "lbbd": ("solve",),
}

# which optional flags each action accepts (beyond --out and --json)
OPTIONS = {
    ("dd", "relax"): {"width"},
    ("dd", "restrict"): {"width"},
    ("dd", "bnb"): {"width"},
    ("dd", "near-opt"): {"delta"},
    ("lbbd", "solve"): {"mode"},
    ("clause", "closure"): {"rounds"},
    ("clause", "input-derive"): {"target"},
    ("clause", "cground"): {"mult"},
    ("clause", "consistent"): {"assign"},
    ("clause", "lp-consistent"): {"assign"},
}

MODES = {"iter": lbbd.ITERATIVE, "bcheck": lbbd.BRANCH_AND_CHECK}


class UsageError(Exception):
    pass


@dataclass
class Command:
    subcommand: str
    action: str
    input: str
    width: Optional[int] = None
    delta: Optional[Fraction] = None
    mode: Optional[str] = None
    out: Optional[str] = None
    json: bool = False
    target: Optional[str] = None
    mult: Optional[list] = None
    seed: Optional[int] = None
    assign: Optional[dict] = None
    rounds: Optional[int] = None


def _fraction_or_inf(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _mult(text):
    try:
        return [Fraction(t) for t in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad multiplier list {text!r}") from None


def _assign(text):
    out = {}
    for item in text.split(","):
        var, _, val = item.partition("=")
        if val.strip() not in ("0", "1") or not var.strip():
            raise argparse.ArgumentTypeError(f"bad assignment {item!r}; use x1=0,x2=1")
        out[var.strip()] = int(val)
    return out


def _parser():
    ap = argparse.ArgumentParser(prog="logopt", description="logic and optimization workbench")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, actions in ACTIONS.items():
        sp = sub.add_parser(name)
        sp.add_argument("action", choices=actions)
        sp.add_argument("input")
        sp.add_argument("--width", type=int)
        sp.add_argument("--delta", type=_fraction_or_inf)
        sp.add_argument("--mode", choices=sorted(MODES))
        sp.add_argument("--out")
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--target")
        sp.add_argument("--mult", type=_mult)
        sp.add_argument("--assign", type=_assign)
        sp.add_argument("--rounds", type=int)
        sp.add_argument("--seed", type=int, help="accepted for scripting; every solver is deterministic")
    return ap


def parse_args(argv) -> Command:
    """Parse argv into a Command; exits with status 2 on usage errors."""
    ap = _parser()
    ns = ap.parse_args(argv)
    allowed = OPTIONS.get((ns.subcommand, ns.action), set())
    for opt in ("width", "delta", "mode", "target", "mult", "assign", "rounds"):
        if getattr(ns, opt) is not None and opt not in allowed:
            ap.error(f"--{opt} does not apply to '{ns.subcommand} {ns.action}'")
    if ns.width is not None and ns.width < 1:
        ap.error("--width must be >= 1")
    cmd = Command(ns.subcommand, ns.action, ns.input, width=ns.width, delta=ns.delta,
                  mode=MODES[ns.mode] if ns.mode else None, out=ns.out, json=ns.json,
                  target=ns.target, mult=ns.mult, assign=ns.assign, rounds=ns.rounds,
                  seed=ns.seed)
    if "width" in allowed and cmd.width is None:
        cmd.width = 2
    if "delta" in allowed and cmd.delta is None:
        cmd.delta = Fraction(0)
    if "mode" in allowed and cmd.mode is None:
        cmd.mode = lbbd.ITERATIVE
    if cmd.subcommand == "clause" and cmd.action == "input-derive" and cmd.target is None:
        ap.error("input-derive needs --target")
    if cmd.subcommand == "clause" and cmd.action == "cground" and cmd.mult is None:
        ap.error("cground needs --mult")
    return cmd


# ---------------------------------------------------------------------------
# reports


def _num(x):
    if isinstance(x, Fraction) and x.denominator != 1:
        return f"{x} ({float(x):.6g})"
    if x == math.inf:
        return "inf"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if obj == math.inf:
        return "inf"
    return obj


class Report:
    def __init__(self):
        self.lines: list[str] = []
        self.data: dict = {}

    def add(self, key, value, text=None):
        self.data[key] = value
        self.lines.append(f"{key}: {text if text is not None else _num(value)}")

    def raw(self, line):
        self.lines.append(line)

    def render(self, as_json):
        if as_json:
            return json.dumps(_jsonable(self.data), indent=2) + "\n"
        return "\n".join(self.lines) + "\n"


def _is_cnf(text):
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("#") or s == "c" or s.startswith("c "):
            continue
        return s.startswith("p ")
    return False


def _constraints(text):
    if _is_cnf(text):
        return clausal.parse_clauses(text)
    return lptext.parse_lp(text)[0].constraints


def _run_problogic(cmd, text, rep):
    inst = problogic.parse_instance(text)
    if cmd.action == "bounds":
        iv = problogic.query_bounds(inst)
    else:
        stats = {}
        iv = problogic.query_bounds_colgen(inst, stats)
        rep.add("columns", stats)
    rep.data["lo"], rep.data["hi"] = iv.lo, iv.hi
    rep.raw(f"interval [{iv.lo}, {iv.hi}]")
    rep.raw(f"decimal [{float(iv.lo):.6g}, {float(iv.hi):.6g}]")


def _run_clause(cmd, text, rep):
    a = cmd.action
    if a == "cground":
        rows = [clausal.linear_form(c) for c in _constraints(text)]
        for row in rows:
            if row.relation != lp.GE:
                raise clausal.ClauseError(f"row {row} is not in >= form")
        cut = clausal.cg_round(rows, cmd.mult)
        rep.add("cut", str(cut))
        return
    if a in ("consistent", "lp-consistent"):
        cons = _constraints(text)
        if cmd.assign is not None:
            if a == "consistent":
                ok = clausal.is_consistent_partial(cons, cmd.assign)
            else:
                ok = clausal.is_lp_consistent_partial(cons, cmd.assign)
            rep.add("partial assignment", cmd.assign, _fmt_pa(cmd.assign))
            rep.add("consistent" if a == "consistent" else "lp-consistent", ok, str(ok).lower())
            return
        fn = clausal.is_consistent_set if a == "consistent" else clausal.is_lp_consistent_set
        ok, witness = fn(cons)
        rep.add("consistent" if a == "consistent" else "lp-consistent", ok, str(ok).lower())
        if witness is not None:
            rep.add("witness", witness, _fmt_pa(witness))
        return
    clauses = clausal.parse_clauses(text)
    if a == "resolve":
        if len(clauses) < 2:
            raise clausal.ClauseError("resolve needs at least two clauses")
        r = clausal.resolve(clauses[0], clauses[1])
        rep.add("resolvent", None if r is None else str(r), "none" if r is None else str(r))
    elif a == "closure":
        res = clausal.resolution_closure(clauses, cmd.rounds or 100)
        out = sorted(res.clauses, key=clausal._clause_key)
        rep.add("clauses", [str(c) for c in out], str(len(out)))
        for c in out:
            rep.raw(f"  {c}")
        rep.add("truncated", res.truncated, str(res.truncated).lower())
    elif a == "input-derive":
        target = clausal.Clause.of(cmd.target.replace(",", " "))
        der = clausal.input_resolution_derive(clauses, target)
        if der is None:
            rep.add("derivation", None, "none")
            return
        rep.add("steps", len(der))
        for d, o, r in der.steps:
            rep.raw(f"  {d} , {o} => {r}")
        rep.add("derived", str(der.result))
    elif a == "unitprop":
        res = clausal.unit_propagate(clauses)
        rep.add("units", [str(u) for u in res.units], " ".join(map(str, res.units)) or "none")
        rep.add("conflict", res.conflict, str(res.conflict).lower())
        rest = sorted(res.clauses, key=clausal._clause_key)
        rep.add("remaining", [str(c) for c in rest], "; ".join(map(str, rest)) or "none")
    elif a == "to-ineq":
        rows = [str(clausal.clause_to_inequality(c)) for c in clauses]
        rep.add("inequalities", rows, str(len(rows)))
        for c, row in zip(clauses, rows):
            rep.raw(f"  {c}  ->  {row}")


def _fmt_pa(pa):
    return ", ".join(f"{v}={x}" for v, x in pa.items()) or "(empty)"


def _run_lp(cmd, text, rep):
    problem, binaries = lptext.parse_lp(text)
    if cmd.action == "solve":
        res = lp.lp_solve(problem)
        rep.add("status", res.status)
        if res.optimal:
            rep.add("value", res.value)
            for v, x in res.primal.items():
                rep.raw(f"  {v} = {_num(x)}")
            rep.data["primal"] = res.primal
            rep.add("duals", res.duals, " ".join(str(y) for y in res.duals))
        elif res.status == lp.INFEASIBLE:
            rep.add("farkas", res.farkas, " ".join(str(y) for y in res.farkas))
    else:
        res = lp.milp_solve(problem, binaries)
        rep.add("status", res.status)
        if res.status == lp.OPTIMAL:
            rep.add("value", res.value)
            rep.add("assignment", res.assignment,
                    " ".join(f"{v}={x}" for v, x in res.assignment.items()))
        rep.add("nodes", res.node_count)


def _seq(labels):
    return " ".join(map(str, labels)) if labels else "none"


def _run_dd(cmd, text, rep):
    inst = sequencing.parse_sequencing(text)
    model = sequencing.job_sequencing_model(inst)
    a = cmd.action
    if a in ("exact", "near-opt", "dot"):
        d = dd.compile_exact(model)
        if a == "dot":
            rep.data["dot"] = dd.export_dot(d)
            rep.raw(rep.data["dot"].rstrip("\n"))
            return
        if d.is_empty():
            raise dd.DiagramError("no feasible sequence")
        if a == "exact":
            value, labels = dd.shortest_path(d)
            rep.add("optimum", value)
            rep.add("sequence", list(labels), _seq(labels))
            rep.add("nodes", d.node_count)
        else:
            sols = dd.enumerate_near_optimal(d, cmd.delta)
            rep.add("solutions", [[list(l), c] for l, c in sols], str(len(sols)))
            for labels, cost in sols:
                rep.raw(f"  {_seq(labels)}  cost {cost}")
    elif a == "relax":
        res = dd.compile_relaxed(model, cmd.width)
        rep.add("lower bound", res.lower_bound, "infeasible" if res.lower_bound is None else None)
        rep.add("nodes", res.diagram.node_count)
    elif a == "restrict":
        res = dd.compile_restricted(model, cmd.width)
        rep.add("upper bound", res.upper_bound, "none" if res.upper_bound is None else None)
        rep.add("sequence", None if res.solution is None else list(res.solution), _seq(res.solution))
    elif a == "bnb":
        res = dd.solve_bnb(model, cmd.width)
        rep.add("optimum", res.value, "infeasible" if res.value is None else None)
        rep.add("sequence", None if res.solution is None else list(res.solution), _seq(res.solution))
        rep.add("nodes explored", len(res.log))


def _run_lbbd(cmd, text, rep):
    inst = lbbd.parse_scheduling(text)
    res = lbbd.solve_lbbd(inst, cmd.mode)
    rep.add("makespan", res.makespan)
    rep.add("assignment", res.assignment, " ".join(map(str, res.assignment)))
    for i in range(inst.m):
        starts = res.schedule[i]
        rep.raw(f"  facility {i}: " + (", ".join(f"job {j}@{s}" for j, s in sorted(starts.items()))
                                       or "idle"))
    rep.data["schedule"] = res.schedule
    rep.add("trace", [str(t) for t in res.trace], str(len(res.trace)))
    for t in res.trace:
        rep.raw(f"  {t}")


RUNNERS = {"problogic": _run_problogic, "clause": _run_clause, "lp": _run_lp,
           "dd": _run_dd, "lbbd": _run_lbbd}

PARSE_ERRORS = (problogic.ProbLogicError, clausal.ClauseError, lptext.ParseError,
                sequencing.SequencingError, lbbd.LbbdError)
SOLVER_ERRORS = (problogic.InconsistentPremises, lbbd.InfeasibleInstance, lbbd.SubproblemInfeasible,
                 dd.DiagramError, lp.LpError, problogic.TooManyAtoms)


def run(cmd: Command) -> tuple[int, str]:
    try:
        text = Path(cmd.input).read_text()
    except OSError as exc:
        return 2, f"error: cannot read {cmd.input}: {exc.strerror}\n"
    rep = Report()
    try:
        RUNNERS[cmd.subcommand](cmd, text, rep)
    except SOLVER_ERRORS as exc:
        msg = f"solver error: {exc}\n"
        if isinstance(exc, problogic.InconsistentPremises):
            msg += "certificate: " + " ".join(str(y) for y in exc.certificate) + "\n"
        return 3, msg
    except PARSE_ERRORS as exc:
        return 2, f"error: {exc}\n"
    out = rep.render(cmd.json)
    if cmd.out:
        payload = rep.data.get("dot", out) if not cmd.json else out
        Path(cmd.out).write_text(payload)
    return 0, out


def main(argv=None) -> int:
    cmd = parse_args(sys.argv[1:] if argv is None else argv)
    code, text = run(cmd)
    (sys.stdout if code == 0 else sys.stderr).write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
