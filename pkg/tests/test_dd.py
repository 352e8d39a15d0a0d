import itertools
import math
import re
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logopt.dd import (DiagramError, DpModel, compile_exact, compile_relaxed,
                       compile_restricted, enumerate_near_optimal, export_dot, reduce,
                       shortest_path, solve_bnb)
from logopt.sequencing import (MAKESPAN, SeqState, SequencingError,
                               SequencingInstance, brute_force, format_sequencing,
                               job_sequencing_model, parse_sequencing)
from oracles import cost_of, sequencing_oracle as oracle
from strategies import sequencing_instances

FIG1 = SequencingInstance((0, 1, 1), (3, 2, 2), (5, 3, 5))


def test_transition_from_root():
    model = job_sequencing_model(FIG1)
    assert model.transition(model.initial_state, 0, 1) == SeqState(frozenset({1}), 3)
    assert model.arc_cost(model.initial_state, 0, 1) == 0
    assert model.transition(SeqState(frozenset({1}), 3), 1, 1) is None
    two = SeqState(frozenset({2}), 3)
    assert model.transition(two, 1, 1) == SeqState(frozenset({1, 2}), 6)
    assert model.arc_cost(two, 1, 1) == 1


def test_merge_operator():
    model = job_sequencing_model(FIG1)
    a, b, c = SeqState(frozenset({1, 2}), 6), SeqState(frozenset({2, 3}), 5), SeqState(frozenset({2}), 4)
    assert model.merge(a, b) == SeqState(frozenset({2}), 5) == model.merge(b, a)
    assert model.merge(model.merge(a, b), c) == model.merge(a, model.merge(b, c))


def test_fig1_exact_diagram():
    d = compile_exact(job_sequencing_model(FIG1))
    paths = list(d.paths())
    assert len(paths) == 6
    _, costs = oracle(FIG1)
    assert sorted(paths) == sorted(costs.items())


def test_fig1_optimum_is_three():
    # the oracle gives 3 via (2, 3, 1); see the discrepancy note in the README
    value, labels = shortest_path(compile_exact(job_sequencing_model(FIG1)))
    assert (value, labels) == (3, (2, 3, 1))
    assert brute_force(FIG1) == (3, (2, 3, 1))
    assert cost_of(FIG1, (2, 3, 1)) == 3


def test_fig2_forced_merge_bound():
    model = job_sequencing_model(FIG1)
    merge = {2: [[SeqState(frozenset({1, 2}), 6), SeqState(frozenset({2, 3}), 5)]]}
    relaxed = compile_relaxed(model, None, merges=merge)
    assert relaxed.lower_bound == 2
    merged = [n for n in relaxed.diagram.layers[2] if not n.exact]
    assert [n.state for n in merged] == [SeqState(frozenset({2}), 5)]


def test_missing_merge_state():
    model = job_sequencing_model(FIG1)
    with pytest.raises(DiagramError):
        compile_relaxed(model, None, merges={2: [[SeqState(frozenset({1, 2}), 99),
                                                  SeqState(frozenset({2, 3}), 5)]]})


def test_fig1_width_sweep():
    model = job_sequencing_model(FIG1)
    sweep = [(w, compile_relaxed(model, w).lower_bound, compile_restricted(model, w).upper_bound,
              solve_bnb(model, w).value) for w in (1, 2, 3)]
    assert sweep == [(1, 2, 6, 3), (2, 3, 3, 3), (3, 3, 3, 3)]


def test_width_one_restricted_is_single_path():
    res = compile_restricted(job_sequencing_model(FIG1), 1)
    assert len(list(res.diagram.paths())) == 1
    assert res.upper_bound >= 3 and cost_of(FIG1, res.solution) == res.upper_bound


def test_tiny_instances():
    one = SequencingInstance((0,), (2,), (5,))
    assert [p for p in compile_exact(job_sequencing_model(one)).paths()] == [((1,), 0)]
    two = SequencingInstance((0, 0), (1, 1), (1, 1))
    assert sorted(c for _, c in compile_exact(job_sequencing_model(two)).paths()) == [1, 1]


def test_near_optimal_fig1():
    d = compile_exact(job_sequencing_model(FIG1))
    _, costs = oracle(FIG1)
    got = enumerate_near_optimal(d, 1)
    assert sorted(got) == sorted((p, c) for p, c in costs.items() if c <= 4)
    assert len(enumerate_near_optimal(d, math.inf)) == 6
    assert enumerate_near_optimal(d, 0) == [((2, 3, 1), 3)]


def test_dot_export_parses_back():
    d = compile_exact(job_sequencing_model(FIG1))
    text = export_dot(d)
    nodes = dict(re.findall(r'^  (n\d+) \[label="([^"]*)"\];$', text, re.M))
    edges = re.findall(r'(n\d+) -> (n\d+) \[label="(\d+) \((\d+)\)"\]', text)
    assert len(nodes) == d.node_count and len(edges) == d.arc_count
    root = next(k for k, v in nodes.items() if v.startswith("r "))
    term = next(k for k, v in nodes.items() if v.startswith("t "))
    out = {}
    for a, b, lab, cost in edges:
        out.setdefault(a, []).append((b, int(lab), int(cost)))

    def walk(n, labels, cost):
        if n == term:
            yield tuple(labels), cost
        for b, lab, c in out.get(n, []):
            yield from walk(b, labels + [lab], cost + c)

    assert sorted(walk(root, [], 0)) == sorted(d.paths())
    assert nodes[root] == "r (3)"


def test_exact_cap():
    inst = SequencingInstance([0] * 8, [1] * 8, [1] * 8)
    with pytest.raises(DiagramError):
        compile_exact(job_sequencing_model(inst), cap=10)


def test_sequencing_file_round_trip():
    text = format_sequencing(FIG1)
    assert text == "3 tardiness\n0 3 5\n1 2 3\n1 2 5\n"
    assert parse_sequencing(text) == FIG1


@pytest.mark.parametrize("bad", ["", "3\n0 1 2\n", "2 tardiness\n0 1 2\n", "1 lateness\n0 1 2\n",
                                 "1 tardiness\n0 0 2\n", "1 tardiness\n0 x 2\n"])
def test_sequencing_file_errors(bad):
    with pytest.raises(SequencingError):
        parse_sequencing(bad)


class Knapsack(DpModel):
    """Pick items (control 1) under a weight limit, minimising negated value;
    shows the compiler on a model other than sequencing."""

    def __init__(self, weights, values, cap):
        self.w, self.v, self.cap = weights, values, cap
        self.layer_count = len(weights)
        self.initial_state = 0

    def control_domain(self, layer):
        return [0, 1]

    def transition(self, state, layer, control):
        used = state + control * self.w[layer]
        return used if used <= self.cap else None

    def arc_cost(self, state, layer, control):
        return -control * self.v[layer]

    def merge(self, a, b):
        return min(a, b)

    def state_key(self, state):
        return state


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 5), st.integers(0, 6)), min_size=1, max_size=7),
       st.integers(0, 12), st.integers(1, 3))
def test_knapsack_model(items, cap, width):
    w, v = zip(*items)
    model = Knapsack(w, v, cap)
    best = min(-sum(vi for vi, x in zip(v, xs) if x)
               for xs in itertools.product((0, 1), repeat=len(w))
               if sum(wi for wi, x in zip(w, xs) if x) <= cap)
    assert shortest_path(compile_exact(model))[0] == best
    assert compile_relaxed(model, width).lower_bound <= best <= compile_restricted(model, width).upper_bound
    assert solve_bnb(model, width).value == best


@settings(max_examples=150, deadline=None)
@given(sequencing_instances(max_jobs=5))
def test_exact_diagram_is_the_feasible_set(inst):
    d = compile_exact(job_sequencing_model(inst))
    best, costs = oracle(inst)
    assert sorted(d.paths()) == sorted(costs.items())
    value, labels = shortest_path(d)
    assert value == best and costs[labels] == best


@settings(max_examples=150, deadline=None)
@given(sequencing_instances(max_jobs=6), st.integers(1, 4))
def test_bounds_sandwich(inst, width):
    best, costs = oracle(inst)
    model = job_sequencing_model(inst)
    relaxed = compile_relaxed(model, width)
    restricted = compile_restricted(model, width)
    assert relaxed.diagram.width <= width and restricted.diagram.width <= width
    assert relaxed.lower_bound <= best <= restricted.upper_bound
    assert costs[restricted.solution] == restricted.upper_bound
    # relaxed paths cover every feasible sequence at no higher cost
    relaxed_paths = {}
    for labels, c in relaxed.diagram.paths():
        relaxed_paths[labels] = min(c, relaxed_paths.get(labels, c))
    for seq, c in costs.items():
        assert relaxed_paths[seq] <= c


@settings(max_examples=100, deadline=None)
@given(sequencing_instances(max_jobs=6))
def test_wider_relaxations_are_no_weaker(inst):
    model = job_sequencing_model(inst)
    best, _ = oracle(inst)
    bounds = [compile_relaxed(model, w).lower_bound for w in range(1, 5)]
    full = compile_relaxed(model, 10_000).lower_bound
    assert max(bounds) <= best and full == best
    assert bounds[0] <= full


@settings(max_examples=150, deadline=None)
@given(sequencing_instances(max_jobs=6), st.integers(1, 4))
def test_bnb_matches_oracle(inst, width):
    best, costs = oracle(inst)
    res = solve_bnb(job_sequencing_model(inst), width)
    assert res.value == best and costs[res.solution] == best


@settings(max_examples=100, deadline=None)
@given(sequencing_instances(max_jobs=5), st.sampled_from(["exact", 1, 2, 3]))
def test_reduce_preserves_paths(inst, kind):
    model = job_sequencing_model(inst)
    d = compile_exact(model) if kind == "exact" else compile_relaxed(model, kind).diagram
    r = reduce(d)
    assert Counter(r.paths()) == Counter(d.paths())
    assert r.node_count <= d.node_count
    assert Counter(d.paths()) == Counter(reduce(d).paths())  # original untouched


@settings(max_examples=100, deadline=None)
@given(sequencing_instances(max_jobs=5), st.integers(0, 4))
def test_near_optimal_matches_oracle(inst, delta):
    best, costs = oracle(inst)
    got = enumerate_near_optimal(compile_exact(job_sequencing_model(inst)), delta)
    expect = sorted(((p, c) for p, c in costs.items() if c <= best + delta),
                    key=lambda pc: (pc[1], pc[0]))
    assert got == expect


@settings(max_examples=50, deadline=None)
@given(sequencing_instances(max_jobs=5), st.integers(1, 3))
def test_deterministic(inst, width):
    model = job_sequencing_model(inst)
    assert solve_bnb(model, width) == solve_bnb(job_sequencing_model(inst), width)
    assert export_dot(compile_relaxed(model, width).diagram) == \
        export_dot(compile_relaxed(model, width).diagram)


def test_makespan_objective():
    inst = SequencingInstance((0, 1, 1), (3, 2, 2), (5, 3, 5), MAKESPAN)
    best, _ = oracle(inst)
    assert shortest_path(compile_exact(job_sequencing_model(inst)))[0] == best == 7
