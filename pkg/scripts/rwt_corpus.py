"""rwt_above over a seeded corpus plus rwt_below over a grid of measure triples."""

import argparse
import itertools

from qlab.config import load_config
from qlab.experiments import run_corpus, run_rwt_above
from qlab.rwt import ExponentTriple, RegionError, rwt_below_diagnostics
from qlab.serialize import dump


def below_sweep(q, beta):
    rows = []
    grid = [1.0, 0.5, 0.25, 0.0625, 1 / 256]
    for m2, m3 in itertools.product(grid, repeat=2):
        try:
            rep = rwt_below_diagnostics(1.0, m2, m3, *q, ExponentTriple(beta))
        except (ValueError, RegionError):
            continue
        rows.append({"measures": [1.0, m2, m3], "log_case": rep["log_case"],
                     "hypotheses_hold": rep["hypotheses_hold"],
                     "total_over_target": rep["total_over_target"],
                     "checks_pass": all(rep["checks"].values())})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--out", default="results/rwt.json")
    args = ap.parse_args()
    cfg = load_config(args.config)
    cfg.count = args.count
    docs = run_corpus(run_rwt_above, cfg, list(range(cfg.count)))
    reports = [d["report"] for d in docs]
    sweeps = {",".join(f"{x:g}" for x in q): below_sweep(q, b)
              for q, b in (((2.0, 2.0, 2.0), (1 / 3, 1 / 3, 1 / 3)),
                           ((2.5, 2.5, 2.0), (0.4, 0.3, 0.3)))}
    doc = {"config": cfg.to_json(),
           "above": {"max_ratio": max(r["ratio"] for r in reports),
                     "all_dropped_vanish": all(r["dropped_vanish"] for r in reports),
                     "max_size_constants": [max(r["size_constants"][v] for r in reports) for v in range(3)],
                     "instances": reports},
           "below": sweeps}
    dump(doc, args.out)
    print("above: max ratio", doc["above"]["max_ratio"], "dropped vanish", doc["above"]["all_dropped_vanish"])
    for key, rows in sweeps.items():
        print(f"below q={key}: {sum(r['checks_pass'] for r in rows)}/{len(rows)} pass, "
              f"max total/target {max(r['total_over_target'] for r in rows):.4f}")


if __name__ == "__main__":
    main()
