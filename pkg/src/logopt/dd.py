"""Multivalued decision diagrams compiled top-down from a DP model.

Layer ``i`` of a diagram holds the states reached after ``i`` decisions; the
last layer is a single terminal node.  Relaxed diagrams merge nodes with the
model's ``merge`` operator, restricted diagrams drop nodes, and
:func:`solve_bnb` branches on the last exact layer of a relaxed diagram.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

DEFAULT_CAP = 100_000
TERMINAL = ("<terminal>",)


class DiagramError(ValueError):
    pass


class DpModel:
    """Interface for a DP over ``layer_count`` decisions.

    ``transition`` returns None for an infeasible control.
    """
    layer_count: int
    initial_state: Any

    def control_domain(self, layer: int) -> Sequence:
        raise NotImplementedError

    def transition(self, state, layer: int, control):
        raise NotImplementedError

    def arc_cost(self, state, layer: int, control):
        raise NotImplementedError

    def merge(self, a, b):
        raise NotImplementedError

    def state_key(self, state):
        return state


@dataclass(eq=False)
class Arc:
    label: Any
    cost: Any
    head: "Node"


@dataclass(eq=False)
class Node:
    id: int
    layer: int
    state: Any
    exact: bool = True
    value: Any = 0              # shortest path from the root
    ctg: Any = None             # minimum cost-to-go
    prefix: tuple = ()          # labels of the lexicographically first shortest root path
    arcs: list = field(default_factory=list)
    states: tuple = ()          # all states collapsed into this node by reduce()

    def __repr__(self):
        return f"Node({self.id}, layer={self.layer}, state={self.state!r}, exact={self.exact})"


@dataclass(eq=False)
class Diagram:
    layers: list
    start_layer: int = 0
    merged: bool = False        # some node merger happened
    trimmed: bool = False       # some node was dropped

    @property
    def root(self) -> Node:
        return self.layers[0][0]

    @property
    def terminal(self) -> Node:
        return self.layers[-1][0]

    def is_empty(self) -> bool:
        return not self.layers or not self.layers[-1]

    def nodes(self):
        return [n for layer in self.layers for n in layer]

    @property
    def node_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def arc_count(self) -> int:
        return sum(len(n.arcs) for n in self.nodes())

    @property
    def width(self) -> int:
        return max((len(layer) for layer in self.layers), default=0)

    @property
    def exact(self) -> bool:
        return not self.merged and not self.trimmed

    def paths(self):
        """Yield ``(labels, cost)`` for every root-terminal path."""
        if self.is_empty():
            return
        term = self.terminal

        def walk(node, labels, cost):
            if node is term:
                yield tuple(labels), cost
                return
            for arc in node.arcs:
                labels.append(arc.label)
                yield from walk(arc.head, labels, cost + arc.cost)
                labels.pop()

        yield from walk(self.root, [], 0)

    def last_exact_layer(self) -> int:
        """Index (within ``layers``) of the deepest layer made only of exact nodes."""
        idx = 0
        for i, layer in enumerate(self.layers):
            if layer and all(n.exact for n in layer):
                idx = i
            else:
                break
        return idx


# ---------------------------------------------------------------------------
# compilation


def _finish(diagram: Diagram) -> Diagram:
    """Drop dead ends, renumber, and label values and costs-to-go."""
    layers = diagram.layers
    if not layers[-1]:
        diagram.layers = []
        return diagram
    alive = {id(layers[-1][0])}
    for i in range(len(layers) - 2, -1, -1):
        keep = []
        for n in layers[i]:
            n.arcs = [a for a in n.arcs if id(a.head) in alive]
            if n.arcs:
                keep.append(n)
                alive.add(id(n))
        layers[i] = keep
    if not layers[0]:
        diagram.layers = []
        return diagram
    # forward labels
    counter = itertools.count()
    for layer in layers:
        for n in layer:
            n.id = next(counter)
            n.value = None
            n.prefix = ()
    layers[0][0].value = 0
    for layer in layers:
        for n in layer:
            for a in n.arcs:
                cand = (n.value + a.cost, n.prefix + (a.label,))
                h = a.head
                if h.value is None or cand < (h.value, h.prefix):
                    h.value, h.prefix = cand
    for layer in reversed(layers):
        for n in layer:
            n.ctg = 0 if not n.arcs else min(a.cost + a.head.ctg for a in n.arcs)
    return diagram


def _merge_pair(model, a: Node, b: Node, prev: list, index: dict) -> Node:
    state = model.merge(a.state, b.state)
    key = model.state_key(state)
    m = Node(-1, a.layer, state, exact=False, value=min(a.value, b.value))
    group = {id(a), id(b)}
    index.pop(model.state_key(a.state), None)
    index.pop(model.state_key(b.state), None)
    other = index.pop(key, None)
    if other is not None:
        group.add(id(other))
        m.value = min(m.value, other.value)
    for p in prev:
        for arc in p.arcs:
            if id(arc.head) in group:
                arc.head = m
    index[key] = m
    return m


def _by_badness(model):
    return lambda n: (-n.value, repr(model.state_key(n.state)))


def _compile(model: DpModel, mode: str, max_width: Optional[int] = None,
             root_state=None, start_layer: int = 0, cap: int = DEFAULT_CAP,
             merges: Optional[dict] = None) -> Diagram:
    if root_state is None:
        root_state = model.initial_state
    root = Node(0, start_layer, root_state)
    layers = [[root]]
    diagram = Diagram(layers, start_layer)
    n = model.layer_count
    for layer in range(start_layer, n):
        last = layer == n - 1
        index: dict = {}
        for node in layers[-1]:
            for ctl in model.control_domain(layer):
                nxt = model.transition(node.state, layer, ctl)
                if nxt is None:
                    continue
                cost = model.arc_cost(node.state, layer, ctl)
                key = TERMINAL if last else model.state_key(nxt)
                child = index.get(key)
                if child is None:
                    child = Node(-1, layer + 1, None if last else nxt, value=node.value + cost)
                    index[key] = child
                else:
                    child.value = min(child.value, node.value + cost)
                child.exact = child.exact and node.exact
                node.arcs.append(Arc(ctl, cost, child))
        if not last and mode == "exact" and len(index) > cap:
            raise DiagramError(f"layer {layer + 1} has {len(index)} states, over the cap of "
                               f"{cap}; use compile_relaxed")
        if not last and mode == "relaxed":
            for group in (merges or {}).get(layer + 1, ()):
                keys = [model.state_key(s) for s in group]
                found = [index[k] for k in keys if k in index]
                if len(found) != len(keys):
                    raise DiagramError(f"cannot merge {group}: state missing from layer {layer + 1}")
                m = found[0]
                for other in found[1:]:
                    m = _merge_pair(model, m, other, layers[-1], index)
                diagram.merged = True
            if max_width is not None:
                while len(index) > max_width:
                    worst = sorted(index.values(), key=_by_badness(model))[:2]
                    _merge_pair(model, worst[0], worst[1], layers[-1], index)
                    diagram.merged = True
        if not last and mode == "restricted" and len(index) > max_width:
            keep = sorted(index.values(), key=_by_badness(model))[-max_width:]
            kept = {id(k) for k in keep}
            for p in layers[-1]:
                p.arcs = [a for a in p.arcs if id(a.head) in kept]
            index = {k: v for k, v in index.items() if id(v) in kept}
            diagram.trimmed = True
        if last:
            layers.append(list(index.values()))
        else:
            layers.append(sorted(index.values(),
                                 key=lambda v: (v.value, repr(model.state_key(v.state)))))
    return _finish(diagram)


def compile_exact(model: DpModel, cap: int = DEFAULT_CAP, root_state=None,
                  start_layer: int = 0) -> Diagram:
    return _compile(model, "exact", root_state=root_state, start_layer=start_layer, cap=cap)


@dataclass
class Relaxed:
    diagram: Diagram
    lower_bound: Any   # None when no path survives (infeasible)


def compile_relaxed(model: DpModel, max_width: Optional[int], merges: Optional[dict] = None,
                    root_state=None, start_layer: int = 0) -> Relaxed:
    """Width-limited diagram whose shortest path bounds the optimum from below.

    ``merges`` maps a layer index to groups of states that must be merged
    there, on top of the width limit (``max_width=None`` for no limit).
    """
    if max_width is not None and max_width < 1:
        raise DiagramError("max_width must be >= 1")
    d = _compile(model, "relaxed", max_width, root_state, start_layer, merges=merges)
    return Relaxed(d, None if d.is_empty() else d.root.ctg)


@dataclass
class Restricted:
    diagram: Diagram
    solution: Optional[tuple]
    upper_bound: Any   # None when every path was trimmed


def compile_restricted(model: DpModel, max_width: int, root_state=None,
                       start_layer: int = 0) -> Restricted:
    if max_width < 1:
        raise DiagramError("max_width must be >= 1")
    d = _compile(model, "restricted", max_width, root_state, start_layer)
    if d.is_empty():
        return Restricted(d, None, None)
    value, labels = shortest_path(d)
    return Restricted(d, labels, value)


# ---------------------------------------------------------------------------
# queries


def shortest_path(d: Diagram):
    """``(value, labels)``; ties go to the lexicographically smallest labels."""
    if d.is_empty():
        raise DiagramError("diagram is empty")
    node, labels = d.root, []
    while node.arcs:
        arc = min(node.arcs, key=lambda a: (a.cost + a.head.ctg, a.label))
        labels.append(arc.label)
        node = arc.head
    return d.root.ctg, tuple(labels)


def reduce(d: Diagram) -> Diagram:
    """Merge nodes with identical outgoing (label, cost, head) arcs, bottom-up.

    Works on a copy; the multiset of (labels, cost) paths is unchanged.
    """
    if d.is_empty():
        return Diagram([], d.start_layer, d.merged, d.trimmed)
    clones = {}
    for layer in d.layers:
        for n in layer:
            clones[id(n)] = Node(n.id, n.layer, n.state, n.exact, states=n.states or (n.state,))
    for layer in d.layers:
        for n in layer:
            clones[id(n)].arcs = [Arc(a.label, a.cost, clones[id(a.head)]) for a in n.arcs]
    layers = [[clones[id(n)] for n in layer] for layer in d.layers]
    for i in range(len(layers) - 2, -1, -1):
        rep: dict = {}
        keep = []
        alias = {}
        for n in layers[i]:
            sig = tuple(sorted((repr(a.label), repr(a.cost), id(a.head)) for a in n.arcs))
            if sig in rep:
                r = rep[sig]
                r.states = r.states + n.states
                r.exact = r.exact and n.exact
                alias[id(n)] = r
            else:
                rep[sig] = n
                keep.append(n)
        if alias and i > 0:
            for p in layers[i - 1]:
                for a in p.arcs:
                    a.head = alias.get(id(a.head), a.head)
        layers[i] = keep
    return _finish(Diagram(layers, d.start_layer, d.merged, d.trimmed))


def enumerate_near_optimal(d: Diagram, delta=0):
    """All paths within ``delta`` of the optimum, sorted by (cost, labels).

    ``delta`` may be ``math.inf``.
    """
    if d.is_empty():
        return []
    limit = d.root.ctg + delta
    out = []

    def walk(node, labels, cost):
        if not node.arcs:
            out.append((tuple(labels), cost))
            return
        for arc in node.arcs:
            c = cost + arc.cost
            if c + arc.head.ctg <= limit:
                labels.append(arc.label)
                walk(arc.head, labels, c)
                labels.pop()

    walk(d.root, [], 0)
    out.sort(key=lambda item: (item[1], item[0]))
    return out


# ---------------------------------------------------------------------------
# branch and bound on the last exact layer


@dataclass
class BnbResult:
    value: Any
    solution: Optional[tuple]
    log: list


def solve_bnb(model: DpModel, max_width: int) -> BnbResult:
    if max_width < 1:
        raise DiagramError("max_width must be >= 1")
    best_value, best_sol = None, None
    log = []
    counter = itertools.count()
    # (bound, layer, key repr, seq, state, prefix value, prefix labels)
    root = model.initial_state
    heap = [(0, 0, repr(model.state_key(root)), next(counter), root, 0, ())]
    while heap:
        bound, layer, key, _, state, pval, plabels = heapq.heappop(heap)
        entry = {"layer": layer, "state": key, "bound": bound, "incumbent": best_value}
        log.append(entry)
        if best_value is not None and bound >= best_value:
            entry["action"] = "pruned"
            continue
        restricted = compile_restricted(model, max_width, state, layer)
        if restricted.upper_bound is not None:
            ub = pval + restricted.upper_bound
            if best_value is None or ub < best_value:
                best_value, best_sol = ub, plabels + restricted.solution
        if restricted.diagram.exact:
            entry["action"] = "solved by restricted"
            continue
        relaxed = compile_relaxed(model, max_width, root_state=state, start_layer=layer)
        if relaxed.lower_bound is None:
            entry["action"] = "infeasible"
            continue
        lb = pval + relaxed.lower_bound
        entry["relaxed"] = lb
        if relaxed.diagram.exact:
            entry["action"] = "solved by relaxed"
            continue
        if best_value is not None and lb >= best_value:
            entry["action"] = "pruned"
            continue
        d = relaxed.diagram
        cut = d.last_exact_layer()
        if cut == 0:
            # nothing exact below the root: expand it one layer exactly
            children = {}
            for ctl in model.control_domain(layer):
                nxt = model.transition(state, layer, ctl)
                if nxt is None:
                    continue
                c = pval + model.arc_cost(state, layer, ctl)
                k = repr(model.state_key(nxt))
                if k not in children or (c, plabels + (ctl,)) < children[k][:2]:
                    children[k] = (c, plabels + (ctl,), nxt)
            for k, (c, labels, nxt) in sorted(children.items()):
                heapq.heappush(heap, (lb, layer + 1, k, next(counter), nxt, c, labels))
            entry["action"] = f"branched on {len(children)} children"
            continue
        nodes = d.layers[cut]
        for node in nodes:
            c = pval + node.value
            heapq.heappush(heap, (c + node.ctg, layer + cut, repr(model.state_key(node.state)),
                                  next(counter), node.state, c, plabels + node.prefix))
        entry["action"] = f"branched on {len(nodes)} exact nodes"
    return BnbResult(best_value, best_sol, log)


# ---------------------------------------------------------------------------
# DOT export


def export_dot(d: Diagram, fmt_state: Callable[[Any], str] = str) -> str:
    lines = ["digraph mdd {"]
    if not d.is_empty():
        term = d.terminal
        for n in d.nodes():
            if n is d.root:
                name = "r"
            elif n is term:
                name = "t"
            else:
                name = fmt_state(n.state)
            lines.append(f'  n{n.id} [label="{name} ({n.ctg})"];')
        for n in d.nodes():
            for a in n.arcs:
                lines.append(f'  n{n.id} -> n{a.head.id} [label="{a.label} ({a.cost})"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
