"""Randomized tree-projection moments against |I_T|^{1/p} size_{v,p}(T) over random u-trees."""

import argparse

from qlab.corpus import Grid, random_function, random_u_tree, rng_for
from qlab.operators import randomized_projection_moment
from qlab.serialize import dump


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--out", default="results/moments.json")
    args = ap.parse_args()
    out = {}
    for p in (1.0, 2.0, 4.0):
        for roots in (2, 4):
            worst = 0.0
            for i in range(args.count):
                rng = rng_for(args.seed, roots, i)
                u = int(rng.integers(0, 4))
                v = (u + int(rng.integers(1, 4))) % 4
                if v == 0:
                    v = u % 3 + 1 if u != 0 else 1
                T = random_u_tree(rng, Grid(1, 5), u, 10)
                f = random_function(rng, Grid(1, 5))
                rep = randomized_projection_moment(T, v, f, p, n_roots=roots)
                worst = max(worst, rep.ratio)
            out[f"p={p:g},roots={roots}"] = worst
    dump(out, args.out)
    for k, v in out.items():
        print(k, f"{v:.6f}")


if __name__ == "__main__":
    main()
