"""Empirical quartile-type ratios for l^p_d values: q = 2 on l^2 and q = p on l^p."""

import argparse

from qlab.corpus import Grid, random_function, random_good_family, rng_for
from qlab.serialize import dump
from qlab.spaces import GoodFamily, NormedSpace, estimate_quartile_type


def run(seed, count, p, q, d):
    fams, fs = [], []
    for i in range(count):
        rng = rng_for(seed, int(p * 10), i)
        grid = Grid(1, 5)
        v, u = (int(x) for x in rng.choice(4, 2, replace=False))
        trees = random_good_family(rng, grid, v, u)
        fams.append(GoodFamily(tuple(trees), v, u))
        fs.append(random_function(rng, grid, d))
    est = estimate_quartile_type(NormedSpace(d, p), q, fams, fs)
    return {"p": p, "q": q, "d": d, "families": count, "worst_ratio": est.worst_ratio}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=300)
    ap.add_argument("--out", default="results/quartile_type.json")
    args = ap.parse_args()
    rows = [run(args.seed, args.count, p, q, d)
            for p, q in ((2.0, 2.0), (4.0, 4.0), (4.0, 2.0)) for d in (1, 4, 8)]
    dump(rows, args.out)
    for r in rows:
        print(f"l^{r['p']:g}_{r['d']}, q={r['q']:g}: worst ratio {r['worst_ratio']:.6f}")


if __name__ == "__main__":
    main()
