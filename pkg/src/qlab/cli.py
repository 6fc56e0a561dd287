"""``qlab`` command line: exact evaluations, experiment pipelines and replay verification.

Exit codes: 0 success, 1 verification failure, 2 configuration or usage error.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .corpus import (Grid, random_convex_collection, random_convex_tree, random_dyadic_set,
                     random_function, rng_for)
from .dyadic import DyadicInterval, StepFunction
from .experiments import replay_decomposition, run_corpus, run_decomposition, run_rwt_above
from .operators import lambda_form, ledger_csv
from .phase_plane import QuartileCollection
from .rwt import (ExponentTriple, RegionError, classify_estimate, duality_example_consistency,
                  duality_example_region, hexagon, rwt_below_diagnostics)
from .serialize import dumps
from .sizes import size
from .spaces import NormedSpace, TrilinearForm
from .walsh import walsh_eval, walsh_transform

EXIT_VERIFY = 1
EXIT_CONFIG = 2


def _fail_config(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_CONFIG)


def _emit(doc, out):
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail_config(f"cannot read {path}: {exc}")


def _triple(text: str, name: str) -> tuple:
    try:
        vals = tuple(float(Fraction(x.strip())) for x in text.split(","))
    except (ValueError, ZeroDivisionError):
        _fail_config(f"--{name} expects three comma-separated numbers, got {text!r}")
    if len(vals) != 3:
        _fail_config(f"--{name} expects three numbers")
    return vals


def _config(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        _fail_config(str(exc))


def _cfg_overrides(cfg: ExperimentConfig, seed=None, count=None) -> ExperimentConfig:
    if seed is not None:
        cfg.seed = seed
    if count is not None:
        cfg.count = count
    return cfg


def _form(spec):
    if spec is None or spec == "scalar":
        return TrilinearForm.scalar()
    if spec.startswith("duality"):
        _, _, rest = spec.partition(":")
        dim, _, p = rest.partition(":")
        return TrilinearForm.duality(int(dim or 1), float(p or 2))
    return TrilinearForm.from_json(_read_json(spec))


@click.group()
@click.version_option(__version__, prog_name="qlab")
def main():
    """Walsh phase-plane experiments."""


# --- walsh -----------------------------------------------------------------------

@main.group()
def walsh():
    """Walsh functions and transforms."""


@walsh.command("eval")
@click.option("--n", "n", type=int, required=True, help="Walsh index (Paley order).")
@click.option("--x", "x", required=True, help="Point in [0,1), e.g. 3/8 or 0.375.")
def walsh_eval_cmd(n, x):
    try:
        val = walsh_eval(n, Fraction(x))
    except (ValueError, ZeroDivisionError) as exc:
        _fail_config(str(exc))
    click.echo(str(val))


@walsh.command("transform")
@click.option("--function", "fpath", required=True, type=click.Path(exists=True))
@click.option("--interval", default="0,0", help="position,log_length")
@click.option("--out", default=None)
def walsh_transform_cmd(fpath, interval, out):
    f = StepFunction.from_json(_read_json(fpath))
    try:
        pos, j = (int(t) for t in interval.split(","))
    except ValueError:
        _fail_config("--interval expects position,log_length")
    coefs = walsh_transform(f, DyadicInterval(pos, j))
    _emit({"interval": [pos, j], "coefficients": [[c.to_tuple() for c in row] for row in coefs],
           "version": __version__}, out)


# --- lambda ------------------------------------------------------------------------

@main.group("lambda")
def lambda_group():
    """The trilinear form."""


@lambda_group.command("eval")
@click.option("--collection", required=True, type=click.Path(exists=True))
@click.option("--functions", required=True, type=click.Path(exists=True))
@click.option("--form", default=None, help="scalar, duality:<dim>:<p>, or a JSON file.")
@click.option("--ledger", default=None, help="Write the per-quartile term ledger as CSV.")
@click.option("--absolute", is_flag=True)
def lambda_eval_cmd(collection, functions, form, ledger, absolute):
    C = QuartileCollection.from_json(_read_json(collection))
    fs = [StepFunction.from_json(d) for d in _read_json(functions)]
    if len(fs) != 3:
        _fail_config("--functions must hold three step functions")
    try:
        res = lambda_form(C.members, _form(form), *fs, absolute=absolute, ledger=True)
    except ValueError as exc:
        _fail_config(str(exc))
    if ledger:
        Path(ledger).write_text(ledger_csv(res.terms))
    _emit({"lambda": res.value.to_tuple(), "lambda_float": float(res.value),
           "terms": len(res.terms), "version": __version__}, None)


# --- size --------------------------------------------------------------------------

@main.group("size")
def size_group():
    """Sizes of quartile collections."""


@size_group.command("compute")
@click.option("--collection", required=True, type=click.Path(exists=True))
@click.option("--function", "fpath", required=True, type=click.Path(exists=True))
@click.option("--v", "v", type=click.IntRange(1, 3), required=True)
@click.option("--p", "p", type=float, required=True)
@click.option("--space-p", type=float, default=2.0)
@click.option("--exhaustive", is_flag=True)
def size_compute_cmd(collection, fpath, v, p, space_p, exhaustive):
    C = QuartileCollection.from_json(_read_json(collection))
    f = StepFunction.from_json(_read_json(fpath))
    method = "exhaustive_subsets" if exhaustive else "full_tree_sup"
    try:
        rep = size(C, v, p, f, method=method, space=NormedSpace(f.dim, space_p))
    except ValueError as exc:
        _fail_config(str(exc))
    doc = rep.to_json()
    doc["version"] = __version__
    _emit(doc, None)


# --- decomp ------------------------------------------------------------------------

@main.group()
def decomp():
    """Tree decompositions."""


@decomp.command("run")
@click.option("--config", "cfg_path", default=None, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--index", type=int, default=0, help="Instance index within the seeded corpus.")
@click.option("--out", default=None)
def decomp_run_cmd(cfg_path, seed, index, out):
    cfg = _cfg_overrides(_config(cfg_path), seed)
    doc = run_decomposition(cfg, index)
    _emit(doc, out)
    if not all(doc["result"]["checks"].values()):
        sys.exit(EXIT_VERIFY)


@decomp.command("replay")
@click.argument("result", type=click.Path(exists=True))
def decomp_replay_cmd(result):
    doc = _read_json(result)
    try:
        checks = replay_decomposition(doc)
    except (KeyError, ValueError, TypeError) as exc:
        click.echo(f"replay failed: {exc}", err=True)
        sys.exit(EXIT_VERIFY)
    click.echo(dumps({"checks": checks}), nl=False)
    if not all(checks.values()):
        sys.exit(EXIT_VERIFY)


# --- rwt ---------------------------------------------------------------------------

@main.group()
def rwt():
    """Restricted weak-type pipelines and exponent regions."""


@rwt.command("above")
@click.option("--config", "cfg_path", default=None, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--count", type=int, default=None)
@click.option("--out", default=None, help="JSON report path.")
@click.option("--csv", "csv_path", default=None, help="Per-instance summary CSV.")
@click.option("--serial", is_flag=True, help="Disable process parallelism.")
def rwt_above_cmd(cfg_path, seed, count, out, csv_path, serial):
    cfg = _cfg_overrides(_config(cfg_path), seed, count)
    try:
        ExponentTriple(tuple(cfg.alpha))
    except ValueError as exc:
        _fail_config(str(exc))
    docs = run_corpus(run_rwt_above, cfg, list(range(cfg.count)), parallel=not serial)
    reports = [d["report"] for d in docs]
    summary = {"kind": "rwt_above_corpus", "config": cfg.to_json(), "seed": cfg.seed,
               "version": __version__, "instances": reports,
               "max_ratio": max((r["ratio"] for r in reports), default=0.0),
               "all_dropped_vanish": all(r["dropped_vanish"] for r in reports)}
    _emit(summary, out)
    if csv_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "E1", "E2", "E3", "tau", "F", "lambda", "bound", "ratio",
                    "size_c1", "size_c2", "size_c3"])
        for i, r in enumerate(reports):
            w.writerow([i, *r["measures"], r["tau"], r["exceptional_measure"],
                        format(r["lambda"], ".17g"), format(r["bound"], ".17g"),
                        format(r["ratio"], ".17g"),
                        *(format(c, ".17g") for c in r["size_constants"])])
        Path(csv_path).write_text(buf.getvalue())
    if not summary["all_dropped_vanish"]:
        sys.exit(EXIT_VERIFY)


@rwt.command("below")
@click.option("--measures", required=True, help="|E1|,|E2|,|E3|")
@click.option("--q", "q", default="2,2,2")
@click.option("--beta", default="1/3,1/3,1/3")
@click.option("--eps", type=float, default=0.01)
def rwt_below_cmd(measures, q, beta, eps):
    M = _triple(measures, "measures")
    try:
        rep = rwt_below_diagnostics(*M, *_triple(q, "q"), ExponentTriple(_triple(beta, "beta")), eps=eps)
    except (ValueError, RegionError) as exc:
        _fail_config(str(exc))
    rep["version"] = __version__
    _emit(rep, None)
    if not all(rep["checks"].values()):
        sys.exit(EXIT_VERIFY)


def _hexagon_doc(q, doubled_pair_term, beta):
    try:
        H = hexagon(*_triple(q, "q"), doubled_pair_term=doubled_pair_term)
    except RegionError as exc:
        _fail_config(str(exc))
    doc = H.to_json()
    doc["version"] = __version__
    if beta:
        b = _triple(beta, "beta")
        doc["classification"] = classify_estimate(H, b)
    return doc


@rwt.command("hexagon")
@click.option("--q", "q", default="2,2,2")
@click.option("--doubled-pair-term", is_flag=True, help="Use rho + 2/(q_u(q_u-1)) as the pairwise bound.")
@click.option("--beta", default=None, help="Classify this exponent triple.")
def rwt_hexagon_cmd(q, doubled_pair_term, beta):
    _emit(_hexagon_doc(q, doubled_pair_term, beta), None)


@main.command("hexagon")
@click.option("--q", "q", default="2,2,2")
@click.option("--doubled-pair-term", is_flag=True)
@click.option("--beta", default=None)
def hexagon_cmd(q, doubled_pair_term, beta):
    """Shortcut for ``rwt hexagon``."""
    _emit(_hexagon_doc(q, doubled_pair_term, beta), None)


@rwt.command("example")
@click.option("--q", "q", type=float, required=True)
@click.option("--samples", type=int, default=0, help="Random consistency check against the hexagon.")
def rwt_example_cmd(q, samples):
    try:
        doc = duality_example_region(q)
    except RegionError as exc:
        _fail_config(str(exc))
    if samples:
        doc["consistency"] = duality_example_consistency(q, samples)
    doc["version"] = __version__
    _emit(doc, None)


# --- corpus ------------------------------------------------------------------------

@main.group()
def corpus():
    """Seeded random instances."""


@corpus.command("generate")
@click.option("--seed", type=int, required=True)
@click.option("--count", type=int, required=True)
@click.option("--kind", type=click.Choice(["collections", "trees", "sets", "functions"]),
              default="collections")
@click.option("--K", "K", type=int, default=1)
@click.option("--N", "N", type=int, default=4)
@click.option("--dim", type=int, default=1)
@click.option("--out", default=None)
def corpus_generate_cmd(seed, count, kind, K, N, dim, out):
    if seed < 0 or count < 0:
        _fail_config("seed and count must be nonnegative")
    grid = Grid(K, N)
    items = []
    for i in range(count):
        rng = rng_for(seed, 0, i)
        if kind == "collections":
            items.append([P.to_json() for P in sorted(random_convex_collection(rng, grid))])
        elif kind == "trees":
            items.append(random_convex_tree(rng, grid).to_json())
        elif kind == "sets":
            items.append(sorted(random_dyadic_set(rng, grid)))
        else:
            items.append(random_function(rng, grid, dim).to_json())
    _emit({"kind": kind, "seed": seed, "count": count, "grid": [K, N], "items": items,
           "version": __version__}, out)


if __name__ == "__main__":
    main()
