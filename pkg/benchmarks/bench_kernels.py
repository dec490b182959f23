"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--offers 1000] [--hours 24] [--repeat 3]

Times a synthetic day on the 22-zone network (one clear_hour call per hour)
and the DFS reachability kernel. Compilation is excluded: each backend runs
one warm-up hour first.
"""
import argparse
import time

import numpy as np

from zonal_clearing import ClearingConfig, clear_hour
from zonal_clearing.kernels import AVAILABLE, get_kernels
from zonal_clearing.serialize import results_to_json
from zonal_clearing.synthetic import italian_day, italian_topology


def time_day(backend, topo, offers, limits, hours, repeat):
    cfg = ClearingConfig(backend=backend)
    clear_hour(offers, topo, limits, hours[0], cfg)
    best = np.inf
    per_hour = []
    for _ in range(repeat):
        per_hour = []
        t_all = time.perf_counter()
        results = []
        for h in hours:
            t0 = time.perf_counter()
            results.append(clear_hour(offers, topo, limits, h, cfg))
            per_hour.append(time.perf_counter() - t0)
        best = min(best, time.perf_counter() - t_all)
    return best, max(per_hour), results_to_json(results)


def time_dfs(backend, n_calls):
    k = get_kernels(backend)
    adj = italian_topology(with_ring=False).adjacency
    k.dfs_reach(adj, 0)
    t0 = time.perf_counter()
    for i in range(n_calls):
        k.dfs_reach(adj, i % adj.shape[0])
    return (time.perf_counter() - t0) / n_calls


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--offers", type=int, default=1000, help="offers per hour")
    ap.add_argument("--hours", type=int, default=24)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    hours = list(range(1, args.hours + 1))
    topo, offers, limits = italian_day(np.random.default_rng(args.seed), args.offers, hours)
    print(f"22 zones, {args.offers} offers/hour, {args.hours} hours, best of {args.repeat}")
    print(f"{'backend':8s} {'day [s]':>9s} {'max hour [ms]':>14s} {'dfs [us]':>9s}")
    outputs = {}
    for name in AVAILABLE:
        total, worst, outputs[name] = time_day(name, topo, offers, limits, hours, args.repeat)
        dfs = time_dfs(name, 20000)
        print(f"{name:8s} {total:9.3f} {1000 * worst:14.1f} {1e6 * dfs:9.2f}")
    if len(outputs) > 1:
        same = len(set(outputs.values())) == 1
        print("results identical across backends:", same)


if __name__ == "__main__":
    main()
