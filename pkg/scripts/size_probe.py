"""Size equivalence across p, monotonicity under inclusion, and full trees vs arbitrary sub-trees.

Writes one JSON summary; the per-instance records are kept for the worst cases only.
"""

import argparse
import math


from qlab.corpus import Grid, random_convex_collection, random_function, rng_for
from qlab.serialize import dump
from qlab.sizes import EXHAUSTIVE, TreeSumEngine, size, size_equivalence_report

P_LIST = [1.0, 2.0, 4.0]


def equivalence(seed, count):
    worst = {}
    for i in range(count):
        rng = rng_for(seed, 0, i)
        grid = Grid(int(rng.integers(0, 3)), int(rng.integers(3, 6)))
        C = random_convex_collection(rng, grid, 120)
        f = random_function(rng, grid)
        rep = size_equivalence_report(C, int(rng.integers(1, 4)), f, P_LIST)
        for k, r in rep["ratios"].items():
            if math.isfinite(r):
                worst[k] = max(worst.get(k, 0.0), r)
    return worst


def monotonicity(seed, count):
    """Counterexamples to size(sub) <= size(C) per p; at p = 2 there should be none."""
    hits = {p: 0 for p in P_LIST}
    worst = {p: 1.0 for p in P_LIST}
    for i in range(count):
        rng = rng_for(seed, 1, i)
        grid = Grid(1, 4)
        C = sorted(random_convex_collection(rng, grid, 60))
        sub = [P for P in C if rng.random() < 0.6]
        f = random_function(rng, grid)
        v = int(rng.integers(1, 4))
        eng = TreeSumEngine(C, v, f)
        for p in P_LIST:
            whole = eng.size(None, p).value
            part = eng.size(eng.mask(sub), p).value
            if whole > 0 and part > whole * (1 + 1e-12):
                hits[p] += 1
                worst[p] = max(worst[p], part / whole)
    return {"counterexamples": hits, "worst_ratio": worst, "instances": count}


def subtrees(seed, count):
    """How often the sup over arbitrary sub-trees exceeds the sup over full trees."""
    gaps = {p: [] for p in P_LIST}
    for i in range(count):
        rng = rng_for(seed, 2, i)
        grid = Grid(1, 4)
        C = sorted(random_convex_collection(rng, grid, 12, seeds=3))[:12]
        f = random_function(rng, grid)
        for p in P_LIST:
            full = size(C, 1, p, f).value
            ex = size(C, 1, p, f, method=EXHAUSTIVE).value
            if full > 0:
                gaps[p].append(ex / full)
    return {f"{p:g}": {"exceeds": int(sum(g > 1 + 1e-12 for g in gaps[p])),
                       "max_ratio": float(max(gaps[p], default=1.0)),
                       "instances": len(gaps[p])} for p in P_LIST}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--out", default="results/size_probe.json")
    args = ap.parse_args()
    doc = {"seed": args.seed,
           "equivalence_max_ratios": equivalence(args.seed, args.count),
           "monotonicity": monotonicity(args.seed, args.count),
           "exhaustive_vs_full": subtrees(args.seed, args.count)}
    dump(doc, args.out)
    print(open(args.out).read())


if __name__ == "__main__":
    main()
