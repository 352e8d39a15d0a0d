#!/usr/bin/env python3
"""Relaxed / restricted bounds and branch-and-bound on the 3-job example and on
random sequencing instances, as a function of the maximum width."""
from __future__ import annotations

import argparse
import random
import statistics
from dataclasses import dataclass

from logopt.dd import (compile_exact, compile_relaxed, compile_restricted, export_dot,
                       reduce, shortest_path, solve_bnb)
from logopt.sequencing import SeqState, SequencingInstance, brute_force, job_sequencing_model


@dataclass
class Config:
    seed: int = 1
    instances: int = 50
    jobs: int = 6
    max_width: int = 6
    dot: str = ""


def example():
    inst = SequencingInstance((0, 1, 1), (3, 2, 2), (5, 3, 5))
    model = job_sequencing_model(inst)
    exact = compile_exact(model)
    value, seq = shortest_path(exact)
    print(f"3-job example: optimum {value} via {seq}; oracle {brute_force(inst)}")
    print(f"  exact diagram: {exact.node_count} nodes, reduced {reduce(exact).node_count} nodes")
    merge = {2: [[SeqState(frozenset({1, 2}), 6), SeqState(frozenset({2, 3}), 5)]]}
    print(f"  forced merge of ({{1,2}},6) and ({{2,3}},5): bound "
          f"{compile_relaxed(model, None, merges=merge).lower_bound}")
    for w in (1, 2, 3):
        print(f"  width {w}: relaxed {compile_relaxed(model, w).lower_bound}  "
              f"restricted {compile_restricted(model, w).upper_bound}  "
              f"bnb {solve_bnb(model, w).value}")
    return exact


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for f in Config.__dataclass_fields__.values():
        ap.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(f.default),
                        default=f.default)
    cfg = Config(**vars(ap.parse_args()))
    exact = example()
    if cfg.dot:
        with open(cfg.dot, "w") as fh:
            fh.write(export_dot(exact))
        print(f"  wrote {cfg.dot}")

    rng = random.Random(cfg.seed)
    insts = []
    for _ in range(cfg.instances):
        n = cfg.jobs
        insts.append(SequencingInstance([rng.randint(0, 8) for _ in range(n)],
                                        [rng.randint(1, 5) for _ in range(n)],
                                        [rng.randint(2, 20) for _ in range(n)]))
    optima = [brute_force(i)[0] for i in insts]
    print(f"\n{cfg.instances} random {cfg.jobs}-job instances: mean gap to the optimum")
    print(f"{'width':>5} {'relaxed':>8} {'restricted':>10} {'bnb nodes':>9}")
    for w in range(1, cfg.max_width + 1):
        lo, hi, nodes = [], [], []
        for inst, opt in zip(insts, optima):
            model = job_sequencing_model(inst)
            lo.append(opt - compile_relaxed(model, w).lower_bound)
            hi.append(compile_restricted(model, w).upper_bound - opt)
            res = solve_bnb(model, w)
            assert res.value == opt
            nodes.append(len(res.log))
        print(f"{w:>5} {statistics.mean(lo):>8.2f} {statistics.mean(hi):>10.2f} "
              f"{statistics.mean(nodes):>9.1f}")


if __name__ == "__main__":
    main()
