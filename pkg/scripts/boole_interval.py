#!/usr/bin/env python3
"""Probability bounds on the three-atom chain, full LP against column generation,
plus a sweep over random consistent instances to compare column counts."""
from __future__ import annotations

import argparse
import itertools
import random
import time
from dataclasses import dataclass
from fractions import Fraction

from logopt.problogic import (Atom, Implies, Not, Or, And, Premise, ProbLogicInstance,
                              query_bounds, query_bounds_colgen)


@dataclass
class Config:
    seed: int = 0
    instances: int = 20
    atoms: int = 6
    premises: int = 4


def chain():
    A, B, C = Atom("A"), Atom("B"), Atom("C")
    return ProbLogicInstance(["A", "B", "C"], [
        Premise(A, Fraction(9, 10)),
        Premise(Implies(A, B), Fraction(8, 10)),
        Premise(Implies(B, C), Fraction(4, 10))], C)


def random_formula(rng, atoms, depth=2):
    if depth == 0 or rng.random() < 0.3:
        return Atom(rng.choice(atoms))
    op = rng.choice([Not, And, Or, Implies])
    if op is Not:
        return Not(random_formula(rng, atoms, depth - 1))
    return op(random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1))


def random_instance(rng, cfg):
    """Premise probabilities come from a random distribution, so the premises are consistent."""
    atoms = [f"a{k}" for k in range(cfg.atoms)]
    points = [dict(zip(atoms, bits)) for bits in itertools.product((False, True), repeat=cfg.atoms)]
    weights = [rng.randint(0, 3) for _ in points]
    weights[0] += 1
    total = sum(weights)

    def prob(f):
        return Fraction(sum(w for w, p in zip(weights, points) if f.eval(p)), total)

    premises = [Premise(f, prob(f)) for f in (random_formula(rng, atoms) for _ in range(cfg.premises))]
    return ProbLogicInstance(atoms, premises, random_formula(rng, atoms))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for f in Config.__dataclass_fields__.values():
        ap.add_argument(f"--{f.name}", type=type(f.default), default=f.default)
    cfg = Config(**vars(ap.parse_args()))

    inst = chain()
    stats = {}
    print("chain: full LP", query_bounds(inst), " column generation",
          query_bounds_colgen(inst, stats), " columns", stats)

    rng = random.Random(cfg.seed)
    full_columns = 2 ** cfg.atoms
    print(f"\n{cfg.instances} random instances, {cfg.atoms} atoms ({full_columns} columns in the full LP)")
    print(f"{'#':>3} {'interval':>22} {'cols(min)':>9} {'cols(max)':>9} {'full s':>8} {'cg s':>8}")
    for k in range(cfg.instances):
        inst = random_instance(rng, cfg)
        t0 = time.perf_counter()
        full = query_bounds(inst)
        t1 = time.perf_counter()
        stats = {}
        cg = query_bounds_colgen(inst, stats)
        t2 = time.perf_counter()
        assert cg == full
        print(f"{k:>3} {str(full):>22} {stats['min']:>9} {stats['max']:>9} "
              f"{t1 - t0:>8.3f} {t2 - t1:>8.3f}")


if __name__ == "__main__":
    main()
