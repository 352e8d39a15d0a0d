"""Single-machine job sequencing with release times, as a DP for :mod:`logopt.dd`.

States are ``(assigned jobs, finish time of the previous job)``.  Jobs are
numbered from 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

from .dd import DpModel

TARDINESS, MAKESPAN = "tardiness", "makespan"


class SequencingError(ValueError):
    pass


@dataclass(frozen=True)
class SequencingInstance:
    release: tuple
    processing: tuple
    due: tuple
    objective: str = TARDINESS

    def __post_init__(self):
        for name in ("release", "processing", "due"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        if not len(self.release) == len(self.processing) == len(self.due):
            raise SequencingError("release, processing and due need equal lengths")
        if any(r < 0 for r in self.release):
            raise SequencingError("release times must be >= 0")
        if any(p < 1 for p in self.processing):
            raise SequencingError("processing times must be >= 1")
        if self.objective not in (TARDINESS, MAKESPAN):
            raise SequencingError(f"unknown objective {self.objective!r}")

    @property
    def n(self) -> int:
        return len(self.release)

    @property
    def jobs(self) -> range:
        return range(1, self.n + 1)

    def evaluate(self, sequence) -> int:
        """Objective value of a full job sequence."""
        if sorted(sequence) != list(self.jobs):
            raise SequencingError(f"{sequence} is not a permutation of the jobs")
        t, tard = 0, 0
        for j in sequence:
            t = max(self.release[j - 1], t) + self.processing[j - 1]
            tard += max(0, t - self.due[j - 1])
        return tard if self.objective == TARDINESS else t


class SeqState(NamedTuple):
    assigned: frozenset
    finish: int

    def __str__(self):
        jobs = ",".join(str(j) for j in sorted(self.assigned))
        return f"({{{jobs}}},{self.finish})"


class JobSequencingModel(DpModel):
    """Tardiness charges ``max(0, finish - due)`` per arc.  Makespan charges
    the final finish time on the last arc, which keeps merged (earlier)
    finish times a valid relaxation."""

    def __init__(self, inst: SequencingInstance):
        self.inst = inst
        self.layer_count = inst.n
        self.initial_state = SeqState(frozenset(), 0)

    def control_domain(self, layer):
        return list(self.inst.jobs)

    def _finish(self, state, job):
        return max(self.inst.release[job - 1], state.finish) + self.inst.processing[job - 1]

    def transition(self, state, layer, control):
        if control in state.assigned:
            return None
        return SeqState(state.assigned | {control}, self._finish(state, control))

    def arc_cost(self, state, layer, control):
        finish = self._finish(state, control)
        if self.inst.objective == TARDINESS:
            return max(0, finish - self.inst.due[control - 1])
        return finish if layer == self.layer_count - 1 else 0

    def merge(self, a, b):
        return SeqState(a.assigned & b.assigned, min(a.finish, b.finish))

    def state_key(self, state):
        return (tuple(sorted(state.assigned)), state.finish)


def job_sequencing_model(inst: SequencingInstance) -> JobSequencingModel:
    return JobSequencingModel(inst)


def brute_force(inst: SequencingInstance):
    """Optimal value and the lexicographically first optimal sequence."""
    best = None
    for perm in itertools.permutations(inst.jobs):
        v = inst.evaluate(perm)
        if best is None or v < best[0]:
            best = (v, perm)
    return best


def parse_sequencing(text: str) -> SequencingInstance:
    """``n objective`` header, then one ``r p d`` line per job."""
    lines = [l.split("#", 1)[0].split() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if not lines or len(lines[0]) != 2:
        raise SequencingError("header must be 'n objective'")
    try:
        n = int(lines[0][0])
        rows = [tuple(int(x) for x in l) for l in lines[1:]]
    except ValueError as exc:
        raise SequencingError(f"bad integer: {exc}") from None
    if len(rows) != n or any(len(r) != 3 for r in rows):
        raise SequencingError(f"expected {n} lines of 'r p d'")
    r, p, d = zip(*rows) if rows else ((), (), ())
    return SequencingInstance(r, p, d, lines[0][1])


def format_sequencing(inst: SequencingInstance) -> str:
    lines = [f"{inst.n} {inst.objective}"]
    lines += [f"{r} {p} {d}" for r, p, d in zip(inst.release, inst.processing, inst.due)]
    return "\n".join(lines) + "\n"
