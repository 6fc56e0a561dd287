"""Seeded instance builders and corpus runners shared by the CLI and the scripts."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

from . import __version__
from .config import ExperimentConfig, thread_cap
from .corpus import (Grid, random_bounded_function, random_convex_collection, random_dyadic_set,
                     random_function, rng_for)
from .decomp import DecompositionResult, full_decomposition, verify_decomposition
from .dyadic import DyadicInterval, StepFunction
from .phase_plane import Quartile, QuartileCollection, convexify
from .rwt import DyadicSet, ExponentTriple, exceptional_set, rwt_above
from .spaces import TrilinearForm

__all__ = [
    "form_for",
    "decomp_instance",
    "run_decomposition",
    "replay_decomposition",
    "rwt_instance",
    "run_rwt_above",
    "run_corpus",
    "envelope",
]

DECOMP_STREAM = 1
RWT_STREAM = 2


def envelope(cfg: ExperimentConfig, kind: str, index: int) -> dict:
    return {"kind": kind, "index": index, "config": cfg.to_json(), "seed": cfg.seed,
            "version": __version__}


def form_for(cfg: ExperimentConfig) -> TrilinearForm:
    if cfg.form == "duality":
        return TrilinearForm.duality(cfg.dim, cfg.space_p)
    return TrilinearForm.scalar()


def decomp_instance(cfg: ExperimentConfig, index: int):
    rng = rng_for(cfg.seed, DECOMP_STREAM, index)
    grid = Grid(cfg.K, cfg.N)
    Pi = form_for(cfg)
    C = random_convex_collection(rng, grid, cfg.max_quartiles)
    fs = [random_function(rng, grid, Pi.dims[v]) for v in range(3)]
    return QuartileCollection(C), Pi, fs


def run_decomposition(cfg: ExperimentConfig, index: int) -> dict:
    C, Pi, fs = decomp_instance(cfg, index)
    res = full_decomposition(C, Pi, *fs, *cfg.q)
    doc = envelope(cfg, "decomposition", index)
    doc["inputs"] = {"collection": C.to_json(), "form": Pi.to_json(),
                     "functions": [f.to_json() for f in fs]}
    doc["result"] = res.to_json()
    return doc


def replay_decomposition(doc: dict) -> dict:
    """Re-verify a serialized decomposition against its embedded inputs."""
    inp = doc["inputs"]
    C = QuartileCollection.from_json(inp["collection"])
    Pi = TrilinearForm.from_json(inp["form"])
    fs = [StepFunction.from_json(f) for f in inp["functions"]]
    res = DecompositionResult.from_json(doc["result"])
    return verify_decomposition(res, C, Pi, *fs)


def rwt_instance(cfg: ExperimentConfig, index: int):
    rng = rng_for(cfg.seed, RWT_STREAM, index)
    grid = Grid(cfg.K, cfg.N)
    Pi = form_for(cfg)
    E = [DyadicSet(random_dyadic_set(rng, grid), grid.N, grid.K) for _ in range(3)]
    F, tau = exceptional_set(*E)
    base = set(random_convex_collection(rng, grid, cfg.max_quartiles))
    inside = _intervals_inside(F, grid)
    if inside:
        # quartiles living inside F exercise the dropped part of the sum
        for _ in range(8):
            I = inside[int(rng.integers(0, len(inside)))]
            base.add(Quartile(I, int(rng.integers(0, 1 << (grid.N + I.log_length - 2)))))
        base = set(convexify(base).members)
    fs = []
    for v in range(3):
        cells = (E[v] - F).cells if v == tau else E[v].cells
        fs.append(random_bounded_function(rng, grid, cells, Pi.dims[v]))
    return QuartileCollection(frozenset(base)), Pi, E, fs


def _intervals_inside(F: DyadicSet, grid: Grid) -> list:
    """Dyadic intervals inside ``F`` long enough to carry a quartile on the grid."""
    out = []
    for j in range(2 - grid.N, grid.K + 1):
        for pos in range(1 << (grid.K - j)):
            I = DyadicInterval(pos, j)
            if F.contains_interval(I):
                out.append(I)
    return out


def run_rwt_above(cfg: ExperimentConfig, index: int) -> dict:
    C, Pi, E, fs = rwt_instance(cfg, index)
    rep = rwt_above(C, Pi, *E, ExponentTriple(tuple(cfg.alpha)), *cfg.q, *fs)
    doc = envelope(cfg, "rwt_above", index)
    doc["report"] = rep.to_json()
    return doc


def _call(args):
    fn, cfg, i = args
    return fn(cfg, i)


def run_corpus(fn: Callable[[ExperimentConfig, int], dict], cfg: ExperimentConfig,
               indices: Sequence[int], parallel: bool = True) -> list:
    """Results in index order; ``QLAB_THREADS`` caps the worker count."""
    workers = min(thread_cap(), len(indices)) if parallel else 1
    if workers <= 1:
        return [fn(cfg, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_call, [(fn, cfg, i) for i in indices]))
