import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logopt.lbbd import (BRANCH_AND_CHECK, ITERATIVE, InfeasibleInstance, LbbdError,
                         SchedulingInstance, SubproblemInfeasible, benders_cut, build_master,
                         check_schedule, cumulative_propagate, format_scheduling, m_var,
                         parse_scheduling, relaxation_inequalities, solve_lbbd,
                         solve_subproblem, x_var)
from logopt.lp import GE, LinearConstraint
from oracles import assignment_table as oracle
from oracles import exhaustive_makespan, point_for
from strategies import scheduling_instances


ONE = SchedulingInstance([[2, 2, 1]], [0, 0, 1], [[1, 1, 2]], [2])


def one_facility(p, r, c, C):
    return SchedulingInstance([p], r, [c], [C])


def test_subproblem_small_cases():
    assert solve_subproblem(one_facility([2, 3], [0, 0], [2, 2], 2), 0, [0, 1]).makespan == 5
    assert solve_subproblem(one_facility([2, 2], [0, 0], [1, 1], 2), 0, [0, 1]).makespan == 2
    res = solve_subproblem(one_facility([3, 2], [0, 2], [1, 1], 2), 0, [0, 1])
    assert res.makespan == 4 and res.starts == {0: 0, 1: 2}


def test_propagation_pushes_start():
    w = cumulative_propagate({"A": (0, 0), "B": (0, 10)}, {"A": 2, "B": 2}, {"A": 1, "B": 1}, 1)
    assert w["B"] == (2, 10)
    slack = {"A": (0, 3), "B": (0, 5)}
    assert cumulative_propagate(slack, {"A": 2, "B": 2}, {"A": 1, "B": 1}, 2) == slack


def test_analytic_cut_substitution():
    inst = one_facility([3, 2], [0, 1], [1, 1], 1)
    analytic, nogood = benders_cut(inst, 0, [0, 1], 5)
    assert analytic.bound([0, 1]) == 4
    assert analytic.bound([0]) == 2
    assert nogood.bound([0, 1]) == 5 and nogood.bound([0]) <= 0
    same = one_facility([3, 2], [0, 0], [1, 1], 1)
    assert benders_cut(same, 0, [0, 1], 5)[0].bound([0, 1]) == 5


def test_relaxation_rows():
    rows = relaxation_inequalities(one_facility([2, 2], [0, 0], [1, 1], 2))
    assert rows == [LinearConstraint({m_var(0): 1, x_var(0, 0): -1, x_var(0, 1): -1}, GE, 0)]
    rows = relaxation_inequalities(SchedulingInstance([[2, 2]] * 2, [0, 2], [[1, 1]] * 2, [2, 2]))
    assert len(rows) == 4 and sorted(r.rhs for r in rows) == [0, 0, 2, 2]
    late = [r for r in rows if r.rhs == 2]
    assert all(x_var(i, 0) not in r.coefficients for r in late for i in range(2))


def test_master_rows():
    inst = SchedulingInstance([[1, 2], [2, 1]], [0, 0], [[1, 1], [1, 1]], [1, 1])
    master, binaries = build_master(inst)
    assert len(binaries) == 4 and master.objective == {"M": 1}
    cuts = benders_cut(inst, 0, [0, 1], 3)
    again, _ = build_master(inst, cuts)
    assert again.constraints[-2:] == [c.constraint for c in cuts]


def test_single_facility_equals_subproblem():
    inst = one_facility([3, 2, 2], [0, 1, 1], [1, 1, 1], 2)
    for mode in (ITERATIVE, BRANCH_AND_CHECK):
        assert solve_lbbd(inst, mode).makespan == solve_subproblem(inst, 0, [0, 1, 2]).makespan


def test_subproblem_examples():
    assert solve_subproblem(ONE, 0, [0, 1, 2]).makespan == exhaustive_makespan(ONE, 0, [0, 1, 2])
    assert solve_subproblem(ONE, 0, [0, 1]).makespan == 2
    assert solve_subproblem(ONE, 0, []).makespan == 0


def test_subproblem_infeasible_job():
    inst = SchedulingInstance([[1]], [0], [[3]], [2])
    with pytest.raises(SubproblemInfeasible):
        solve_subproblem(inst, 0, [0])


def test_propagation_example():
    w = cumulative_propagate({"A": (0, 0), "B": (0, 10)}, {"A": 2, "B": 1}, {"A": 2, "B": 1}, 2)
    assert w == {"A": (0, 0), "B": (2, 10)}
    assert cumulative_propagate({"A": (0, 0), "B": (0, 0)}, {"A": 1, "B": 1}, {"A": 2, "B": 1}, 2) is None


def test_cut_tightness_at_its_own_assignment():
    inst = SchedulingInstance([[3, 2, 2]], [0, 1, 1], [[1, 1, 1]], [1])
    jobs = [0, 1, 2]
    ms = solve_subproblem(inst, 0, jobs).makespan
    analytic, nogood = benders_cut(inst, 0, jobs, ms)
    assert nogood.bound(jobs) == ms
    # the analytic cut gives up the release-time spread
    assert analytic.bound(jobs) == ms - 1


def test_empty_facility_cut_is_valid():
    # a single late job: without the empty-set correction the analytic cut
    # would demand a positive makespan on an empty facility
    inst = SchedulingInstance([[1], [1]], [5], [[1], [1]], [1, 1])
    (analytic, _) = benders_cut(inst, 0, [0], 6)
    assert analytic.bound([]) <= 0
    assert analytic.bound([0]) == 6


def test_master_forbids_oversized_jobs():
    inst = SchedulingInstance([[1, 1], [1, 1]], [0, 0], [[1, 3], [1, 1]], [2, 2])
    master, binaries = build_master(inst)
    assert master.bound(x_var(0, 1)) == (0, 0)
    assert binaries == {x_var(i, j) for i in range(2) for j in range(2)}


def test_infeasible_instance():
    inst = SchedulingInstance([[1], [1]], [0], [[3], [3]], [2, 2])
    with pytest.raises(InfeasibleInstance):
        solve_lbbd(inst)


def test_unknown_mode():
    with pytest.raises(LbbdError):
        solve_lbbd(ONE, "sideways")


def test_file_round_trip():
    inst = SchedulingInstance([[3, 2], [4, 1]], [0, 2], [[1, 2], [2, 1]], [2, 3])
    text = format_scheduling(inst)
    assert parse_scheduling(text) == inst
    assert format_scheduling(parse_scheduling(text)) == text


@pytest.mark.parametrize("bad", ["", "1 1\n1\n", "1 1\n1 0 1 x\n", "1 1\n0 0 1 1\n"])
def test_file_errors(bad):
    with pytest.raises(LbbdError):
        parse_scheduling(bad)


@settings(max_examples=150, deadline=None)
@given(scheduling_instances(m=1, max_jobs=4))
def test_subproblem_matches_enumeration(inst):
    jobs = list(range(inst.n))
    res = solve_subproblem(inst, 0, jobs)
    assert res.makespan == exhaustive_makespan(inst, 0, jobs)
    assert check_schedule(inst, 0, res.starts)
    assert max(s + inst.p[0][j] for j, s in res.starts.items()) == res.makespan


@settings(max_examples=60, deadline=None)
@given(scheduling_instances(max_jobs=4), st.sampled_from([ITERATIVE, BRANCH_AND_CHECK]))
def test_lbbd_matches_oracle(inst, mode):
    best, table = oracle(inst)
    res = solve_lbbd(inst, mode)
    assert res.makespan == best
    for i in range(inst.m):
        assert check_schedule(inst, i, res.schedule[i])
        assert set(res.schedule[i]) == {j for j, f in enumerate(res.assignment) if f == i}
    # every cut holds at every assignment with its exact subproblem values
    for facs, vals in table:
        point = point_for(inst, facs, vals)
        for cut in res.cuts:
            assert cut.constraint.satisfied_by(point), (cut, facs, vals)
    if mode == ITERATIVE:
        assert res.trace[-1].lower == best == res.trace[-1].upper
        for line in res.trace:
            assert line.lower <= best <= line.upper
        lowers = [line.lower for line in res.trace]
        assert lowers == sorted(lowers)
        assert len(res.trace) <= len(table) + 1


@settings(max_examples=100, deadline=None)
@given(scheduling_instances(max_jobs=4))
def test_relaxation_is_valid(inst):
    _, table = oracle(inst)
    rows = relaxation_inequalities(inst)
    for facs, vals in table:
        point = point_for(inst, facs, vals)
        assert all(row.satisfied_by(point) for row in rows)


@settings(max_examples=60, deadline=None)
@given(scheduling_instances(m=1, max_jobs=5), st.data())
def test_cuts_valid_for_every_subset(inst, data):
    i = 0
    jobs = data.draw(st.lists(st.integers(0, inst.n - 1), min_size=1, unique=True))
    ms = exhaustive_makespan(inst, i, jobs)
    cuts = benders_cut(inst, i, jobs, ms)
    for mask in itertools.product((0, 1), repeat=inst.n):
        subset = [j for j in range(inst.n) if mask[j]]
        value = exhaustive_makespan(inst, i, subset)
        for cut in cuts:
            assert value >= cut.bound(subset)
        if set(jobs) <= set(subset):
            assert max(cut.bound(subset) for cut in cuts) == ms


@settings(max_examples=40, deadline=None)
@given(scheduling_instances(max_jobs=4))
def test_modes_agree(inst):
    a, b = solve_lbbd(inst, ITERATIVE), solve_lbbd(inst, BRANCH_AND_CHECK)
    assert a.makespan == b.makespan
    assert len(a.trace) <= 2 * inst.m ** inst.n + 1
