"""Time the compiled ranking kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py --agents 25 --groups 2000
"""
from __future__ import annotations

import argparse
import random
import sys
import timeit

import numpy as np

from coop_arena.ranking import _pykernels

try:
    from coop_arena.ranking import _kernels
except ImportError:  # extension not built
    _kernels = None


def make_inputs(n_agents: int, n_groups: int, seed: int):
    rng = random.Random(seed)
    groups, agents, scores = [], [], []
    for g in range(n_groups):
        for a in range(n_agents):
            groups.append(g)
            agents.append(a)
            scores.append(rng.random())
    tally_args = (np.array(groups, dtype=np.int64), np.array(agents, dtype=np.int64),
                  np.array(scores, dtype=np.float64), n_agents, 1e-9)
    _, _, ma, mb, out = _pykernels.tally(*tally_args)
    elo_args = (ma, mb, out, n_agents, 32.0, 1500.0)
    pairs = [(i, j) for i in range(n_agents) for j in range(n_agents) if i != j]
    rng.shuffle(pairs)
    lock_args = (np.array([p[0] for p in pairs], dtype=np.int64), np.array([p[1] for p in pairs], dtype=np.int64), n_agents)
    return {"tally": tally_args, "elo_sweep": elo_args, "lock_edges": lock_args}


def best_of(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--agents", type=int, default=25)
    parser.add_argument("--groups", type=int, default=1000, help="(scenario, run) keys to tally")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    inputs = make_inputs(args.agents, args.groups, args.seed)
    print(f"{args.agents} agents, {args.groups} groups, "
          f"{len(inputs['elo_sweep'][0])} matches, best of {args.repeat}")
    print(f"{'kernel':<12}{'python (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for name, kargs in inputs.items():
        slow = best_of(getattr(_pykernels, name), kargs, args.repeat)
        if _kernels is None:
            print(f"{name:<12}{slow:>12.4f}{'n/a':>14}{'':>10}")
            continue
        fast = best_of(getattr(_kernels, name), kargs, args.repeat)
        print(f"{name:<12}{slow:>12.4f}{fast:>14.4f}{slow / fast:>9.1f}x")
    if _kernels is None:
        print("compiled kernels are not built; reinstall with Cython available", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
