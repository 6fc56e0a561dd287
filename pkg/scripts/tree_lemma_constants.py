"""Largest |Lambda_T| / (|I_T| prod size) over random convex trees, per seed and per form."""

import argparse

from qlab.corpus import Grid, random_convex_tree, random_function, rng_for
from qlab.decomp import tree_lemma_check
from qlab.serialize import dump
from qlab.spaces import TrilinearForm


def corpus_max(seed, count, form, q):
    worst, witness = 0.0, None
    for i in range(count):
        rng = rng_for(seed, 8, i)
        grid = Grid(1, 4)
        Pi = TrilinearForm.scalar() if form == "scalar" else TrilinearForm.duality(int(rng.integers(2, 5)))
        T = random_convex_tree(rng, grid, 64)
        fs = [random_function(rng, grid, d) for d in Pi.dims]
        rep = tree_lemma_check(T, Pi, *fs, *q)
        if rep.ratio is not None and rep.ratio > worst:
            worst, witness = rep.ratio, {"index": i, "members": len(T), **rep.to_json()}
    return {"max_ratio": worst, "witness": witness}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--out", default="results/tree_lemma.json")
    args = ap.parse_args()
    doc = {}
    for q in ([2.0, 2.0, 2.0], [2.0, 3.0, 4.0]):
        key = ",".join(f"{x:g}" for x in q)
        doc[key] = {form: {str(s): corpus_max(s, args.count, form, q) for s in args.seeds}
                    for form in ("scalar", "duality")}
    dump(doc, args.out)
    for key, forms in doc.items():
        for form, per_seed in forms.items():
            print(key, form, [round(r["max_ratio"], 6) for r in per_seed.values()])


if __name__ == "__main__":
    main()
