#!/usr/bin/env python3
"""Iterative LBBD against branch and check on random two-facility instances,
checked against assignment enumeration."""
from __future__ import annotations

import argparse
import itertools
import random
import time
from dataclasses import dataclass

from logopt.lbbd import (BRANCH_AND_CHECK, ITERATIVE, SchedulingInstance, solve_lbbd,
                         solve_subproblem)


@dataclass
class Config:
    seed: int = 3
    instances: int = 20
    facilities: int = 2
    jobs: int = 5
    verbose: bool = False


def random_instance(rng, cfg):
    m, n = cfg.facilities, cfg.jobs
    C = [rng.randint(1, 3) for _ in range(m)]
    return SchedulingInstance([[rng.randint(1, 5) for _ in range(n)] for _ in range(m)],
                              [rng.randint(0, 4) for _ in range(n)],
                              [[rng.randint(1, C[i]) for _ in range(n)] for i in range(m)], C)


def enumerate_optimum(inst):
    best = None
    for facs in itertools.product(range(inst.m), repeat=inst.n):
        if not all(inst.allowed(i, j) for j, i in enumerate(facs)):
            continue
        value = max(solve_subproblem(inst, i, [j for j in range(inst.n) if facs[j] == i]).makespan
                    for i in range(inst.m))
        best = value if best is None else min(best, value)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--instances", type=int, default=Config.instances)
    ap.add_argument("--facilities", type=int, default=Config.facilities)
    ap.add_argument("--jobs", type=int, default=Config.jobs)
    ap.add_argument("--verbose", action="store_true")
    cfg = Config(**vars(ap.parse_args()))

    rng = random.Random(cfg.seed)
    print(f"{'#':>3} {'opt':>4} {'iter':>5} {'cuts':>5} {'nodes':>6} {'s':>6}   "
          f"{'checks':>6} {'cuts':>5} {'nodes':>6} {'s':>6}")
    for k in range(cfg.instances):
        inst = random_instance(rng, cfg)
        row = []
        for mode in (ITERATIVE, BRANCH_AND_CHECK):
            t0 = time.perf_counter()
            res = solve_lbbd(inst, mode)
            row.append((res, time.perf_counter() - t0))
        opt = enumerate_optimum(inst)
        (a, ta), (b, tb) = row
        assert a.makespan == b.makespan == opt
        print(f"{k:>3} {opt:>4} {len(a.trace):>5} {len(a.cuts):>5} {a.master_nodes:>6} {ta:>6.2f}   "
              f"{len(b.trace):>6} {len(b.cuts):>5} {b.master_nodes:>6} {tb:>6.2f}")
        if cfg.verbose:
            for line in a.trace:
                print("      ", line)


if __name__ == "__main__":
    main()
