"""Convex correction, the single-tree estimate, greedy tree extraction and the level decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .dyadic import DyadicInterval, StepFunction, average, lp_norm
from .exact import ExactScalar
from .operators import lambda_form
from .phase_plane import Quartile, QuartileCollection, Tree, is_convex, is_good_family, leq_v
from .sizes import TreeSumEngine
from .spaces import NormedSpace, TrilinearForm

__all__ = [
    "ConvexityError",
    "convex_correction",
    "TreeLemmaReport",
    "tree_lemma_check",
    "ExtractedTree",
    "ExtractionResult",
    "size_lemma_extract",
    "scale_parity_families",
    "DecompositionResult",
    "full_decomposition",
    "verify_decomposition",
]

REL_TOL = 1e-9
_SELECT_SLACK = 1e-12


class ConvexityError(ValueError):
    pass


def _length(I: DyadicInterval) -> Fraction:
    return Fraction(2) ** I.log_length


# --- convex correction --------------------------------------------------------

def _norm_exact(vec: Sequence[ExactScalar], space: NormedSpace) -> float:
    if len(vec) == 1:
        return abs(float(vec[0]))
    return space.norm([float(x) for x in vec])


def _intervals_convex(J: set) -> bool:
    for low in J:
        for high in J:
            if high.log_length > low.log_length + 1 and high.contains(low):
                for j in range(low.log_length + 1, high.log_length):
                    if low.ancestor(j) not in J:
                        return False
    return True


def convex_correction(intervals: Iterable[DyadicInterval], f: StepFunction, lam: float,
                      space: Optional[NormedSpace] = None) -> StepFunction:
    """A ``g`` with the same averages as ``f`` on every member and ``||g||_inf <= 3 lam``.

    ``g`` lives on the grid of ``f`` (refined if some member is finer than a
    cell) and vanishes off the union of the members.
    """
    J = set(intervals)
    space = space or NormedSpace(f.dim)
    if not J:
        return StepFunction.zeros(f.resolution, f.support_bound, f.dim)
    if not _intervals_convex(J):
        raise ConvexityError("interval family is not convex")
    N = max([f.resolution] + [-I.log_length + 1 for I in J])
    K = max([f.support_bound] + [I.log_length + I.position.bit_length() for I in J])
    g0 = f.on_grid(N, K)
    for I in sorted(J):
        avg = average(g0, I)
        if _norm_exact(avg, space) > lam * (1 + 1e-12):
            raise ValueError(f"average over {I} has norm {_norm_exact(avg, space)} > {lam}")
    A = g0.A.copy()
    B = g0.B.copy()
    covered = np.zeros(g0.ncells, dtype=bool)
    for I in J:
        lo, hi = I.cell_range(N)
        covered[lo:hi] = True
    target = {}  # bad interval -> exact average to place on it
    for E in sorted(J):
        kids = E.children
        bad = [B_ for B_ in kids if B_ not in J]
        if len(bad) == 1:
            target[bad[0]] = average(g0, bad[0])
        elif len(bad) == 2:
            avg = average(g0, E)
            target[bad[0]] = avg
            target[bad[1]] = avg
    scale = g0.scale
    vals = {}
    for Bd, avg in target.items():
        vals[Bd] = [a.ints for a in avg]
        scale = max([scale] + [s for _, _, s in vals[Bd]])
    A = A * (1 << (scale - g0.scale))
    B = B * (1 << (scale - g0.scale))
    for Bd, ints in vals.items():
        lo, hi = Bd.cell_range(N)
        for i, (a, b, s) in enumerate(ints):
            A[lo:hi, i] = a << (scale - s)
            B[lo:hi, i] = b << (scale - s)
    A[~covered] = 0
    B[~covered] = 0
    return StepFunction(N, K, A, B, scale, f.space)


# --- tree lemma ---------------------------------------------------------------

@dataclass
class TreeLemmaReport:
    lambda_abs: float
    top_length: float
    sizes: tuple
    ratio: Optional[float]
    degenerate: bool

    def to_json(self) -> dict:
        return {"lambda_abs": self.lambda_abs, "top_length": self.top_length,
                "sizes": list(self.sizes), "ratio": self.ratio, "degenerate": self.degenerate}


def tree_lemma_check(T: Tree, Pi: TrilinearForm, f1: StepFunction, f2: StepFunction,
                     f3: StepFunction, q1: float, q2: float, q3: float,
                     check_convex: bool = True) -> TreeLemmaReport:
    """``sum_{P in T} |Lambda_P|`` against ``|I_T| * prod_v size_{v,q_v}(T)``."""
    if check_convex and not is_convex(T.members):
        raise ConvexityError("the tree estimate needs a convex tree")
    lam = float(lambda_form(T.members, Pi, f1, f2, f3, absolute=True))
    sizes = []
    for v, (f, q) in enumerate(zip((f1, f2, f3), (q1, q2, q3)), start=1):
        eng = TreeSumEngine(T.members, v, f, Pi.spaces[v - 1])
        sizes.append(eng.size(None, q).value)
    top = float(_length(T.top.time))
    denom = top * math.prod(sizes)
    if denom == 0:
        return TreeLemmaReport(lam, top, tuple(sizes), None if lam else 0.0, True)
    return TreeLemmaReport(lam, top, tuple(sizes), lam / denom, False)


# --- size lemma ---------------------------------------------------------------

@dataclass(frozen=True)
class ExtractedTree:
    """A full tree ``{P in current : P <= top}`` selected through child ``u`` for slot ``v``."""

    tree: Tree
    u: int
    v: int

    @property
    def selected_part(self) -> Tree:
        return Tree(self.tree.top, frozenset(P for P in self.tree.members
                                             if leq_v(P, self.tree.top, self.u)), self.u)

    def to_json(self) -> dict:
        return {"top": self.tree.top.to_json(), "u": self.u, "v": self.v,
                "members": [P.to_json() for P in sorted(self.tree.members)]}

    @classmethod
    def from_json(cls, data: dict) -> "ExtractedTree":
        return cls(Tree(Quartile.from_json(data["top"]),
                        frozenset(Quartile.from_json(m) for m in data["members"])),
                   int(data["u"]), int(data["v"]))


@dataclass
class ExtractionResult:
    trees: list
    residual: QuartileCollection
    size_before: float
    threshold: float
    top_length_sum: Fraction
    counting_ratio: Optional[float]
    residual_max_delta: float
    goodness: dict = field(default_factory=dict)
    convex_ok: bool = True
    partition_ok: bool = True
    threshold_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.convex_ok and self.partition_ok and self.threshold_ok and all(self.goodness.values())


def _center_key(T: Quartile, u: int) -> Fraction:
    num, log_den = T.freq_center_key(u)
    return num / Fraction(2) ** log_den


def _maximal_tops(eng: TreeSumEngine, qualifying: np.ndarray) -> np.ndarray:
    """Indices of qualifying tops with no other qualifying top strictly above them."""
    idx = np.nonzero(qualifying)[0]
    if idx.size <= 1:
        return idx
    pos, j, n = eng.top_pos[idx], eng.top_scale[idx], eng.top_freq[idx]
    k = j[None, :] - j[:, None]  # row: candidate, column: possible ancestor
    ks = np.clip(k, 0, 62)
    above = (k > 0) & ((pos[:, None] >> ks) == pos[None, :]) & ((n[None, :] >> ks) == n[:, None])
    return idx[~above.any(axis=1)]


def _select(eng: TreeSumEngine, candidates: np.ndarray, u: int, v: int) -> int:
    keyed = []
    for t in candidates:
        T = eng.tops[int(t)]
        c = _center_key(T, u)
        keyed.append(((c if u > v else -c), T.time.position, T.time.log_length, T.freq_index, int(t)))
    return min(keyed)[-1]


def scale_parity_families(trees: Sequence[ExtractedTree], u: int) -> dict:
    """Selected ``u``-parts of ``trees`` split by ``log2|omega_P| mod 2``."""
    fams = {0: [], 1: []}
    for et in trees:
        if et.u != u:
            continue
        part = et.selected_part
        for s in (0, 1):
            mem = frozenset(P for P in part.members if (2 - P.time.log_length) % 2 == s)
            if mem:
                fams[s].append(Tree(part.top, mem, u))
    return fams


def _check_convex_input(members) -> None:
    if not is_convex(members):
        raise ConvexityError("size-lemma extraction needs a convex collection")


def size_lemma_extract(collection, v: int, q: float, f: StepFunction,
                       space: Optional[NormedSpace] = None, engine: Optional[TreeSumEngine] = None,
                       active: Optional[np.ndarray] = None, verify: bool = True,
                       check_convex: bool = True) -> ExtractionResult:
    """Greedy removal of trees whose ``u``-part carries more than ``2**(-1/q)`` of the size."""
    members = collection.members if hasattr(collection, "members") else frozenset(collection)
    if check_convex:
        _check_convex_input(members)
    eng = engine or TreeSumEngine(members, v, f, space)
    live = eng.mask(members) if active is None else active.copy()
    size_before, _, _ = eng.best(live, q)
    thr = size_before * 2.0 ** (-1.0 / q)
    trees: list[ExtractedTree] = []
    if size_before > 0:
        full = eng.membership(None)
        # removals can raise another u's Delta when q != 2, so sweep until stable
        changed = True
        while changed:
            changed = False
            for u in eng.kinds():
                while True:
                    vals = eng.tree_values(u, live, q)
                    qual = vals > thr * (1 + _SELECT_SLACK)
                    if not qual.any():
                        break
                    t = _select(eng, _maximal_tops(eng, qual), u, v)
                    row = full[t] & live
                    tree = Tree(eng.tops[t], frozenset(P for P, y in zip(eng.members, row) if y))
                    trees.append(ExtractedTree(tree, u, v))
                    live &= ~row
                    changed = True
    residual = QuartileCollection(frozenset(P for P, y in zip(eng.members, live) if y)
                                  & frozenset(members))
    top_sum = sum((_length(et.tree.top.time) for et in trees), Fraction(0))
    fq = lp_norm(f, q, eng.space)
    counting = None
    if fq > 0 and size_before > 0:
        counting = float(top_sum) * size_before ** q / fq ** q
    res = ExtractionResult(trees, residual, size_before, thr, top_sum, counting, 0.0)
    if verify:
        _verify_extraction(res, members, v, q, f, eng.space)
    return res


def _verify_extraction(res: ExtractionResult, members, v: int, q: float, f: StepFunction,
                       space: NormedSpace) -> None:
    pieces = [et.tree.members for et in res.trees] + [res.residual.members]
    union = frozenset().union(*pieces)
    res.partition_ok = union == frozenset(members) and sum(len(p) for p in pieces) == len(members)
    res.convex_ok = all(is_convex(p) for p in pieces)
    for et in res.trees:
        try:
            et.tree.validate()
        except ValueError:
            res.convex_ok = False
    # independent recomputation on the residual alone
    worst = 0.0
    if res.residual.members and res.size_before > 0:
        fresh = TreeSumEngine(res.residual.members, v, f, space)
        for u in fresh.kinds():
            vals = fresh.tree_values(u, None, q)
            if vals.size:
                worst = max(worst, float(vals.max()))
    res.residual_max_delta = worst
    res.threshold_ok = worst <= res.threshold * (1 + REL_TOL) or res.size_before == 0
    res.goodness = {}
    for u in (w for w in range(4) if w != v):
        for s, fam in scale_parity_families(res.trees, u).items():
            res.goodness[f"u{u}s{s}"] = is_good_family(fam, u, v) if fam else True


# --- multi-level decomposition ------------------------------------------------

@dataclass
class DecompositionResult:
    levels: dict
    residual: QuartileCollection
    top_sums: dict
    constants: dict
    tree_sizes: dict
    level_bounds: dict
    exponents: tuple
    norms: tuple
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def all_trees(self) -> list:
        return [et for n in sorted(self.levels, reverse=True) for et in self.levels[n]]

    def to_json(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "norms": list(self.norms),
            "levels": [{"n": n,
                        "trees": [et.to_json() for et in self.levels[n]],
                        "top_length_sum": str(self.top_sums[n]),
                        "constant": self.constants[n],
                        "tree_sizes": self.tree_sizes[n],
                        "bounds": self.level_bounds[n]}
                       for n in sorted(self.levels, reverse=True)],
            "residual": self.residual.to_json(),
            "checks": dict(sorted(self.checks.items())),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DecompositionResult":
        levels, sums, consts, sizes, bounds = {}, {}, {}, {}, {}
        for lv in data["levels"]:
            n = int(lv["n"])
            levels[n] = [ExtractedTree.from_json(t) for t in lv["trees"]]
            sums[n] = Fraction(lv["top_length_sum"])
            consts[n] = lv["constant"]
            sizes[n] = lv["tree_sizes"]
            bounds[n] = lv["bounds"]
        return cls(levels, QuartileCollection.from_json(data["residual"]), sums, consts, sizes,
                   bounds, tuple(data["exponents"]), tuple(data["norms"]), dict(data.get("checks", {})))


def _start_level(sizes, norms, qs) -> Optional[int]:
    n = None
    for s, fn, q in zip(sizes, norms, qs):
        if s > 0 and fn > 0:
            x = q * math.log2(s / fn)
            m = math.ceil(x - 1e-12)
            n = m if n is None else max(n, m)
    return n


def _exceeds(s: float, n: int, fn: float, q: float) -> bool:
    return s > 2.0 ** (n / q) * fn * (1 + _SELECT_SLACK)


def full_decomposition(collection, Pi: TrilinearForm, f1: StepFunction, f2: StepFunction,
                       f3: StepFunction, q1: float, q2: float, q3: float,
                       max_levels: int = 4096) -> DecompositionResult:
    """Levels ``n`` of trees with ``size_v <= 2**(n/q_v) ||f_v||`` and a size-zero residual."""
    members = collection.members if hasattr(collection, "members") else frozenset(collection)
    _check_convex_input(members)
    fs, qs = (f1, f2, f3), (float(q1), float(q2), float(q3))
    engines = [TreeSumEngine(members, v, f, Pi.spaces[v - 1]) for v, f in enumerate(fs, start=1)]
    norms = tuple(lp_norm(f, q, Pi.spaces[v]) for v, (f, q) in enumerate(zip(fs, qs)))
    live = np.ones(len(engines[0].members), dtype=bool)
    index = engines[0].members

    def sizes_now():
        return [eng.best(live, q)[0] for eng, q in zip(engines, qs)]

    levels: dict = {}
    cur = sizes_now()
    n = _start_level(cur, norms, qs)
    guard = 0
    while n is not None and any(s > 0 for s in cur):
        guard += 1
        if guard > max_levels:
            raise RuntimeError("decomposition did not terminate")
        found: list[ExtractedTree] = []
        changed = True
        while changed:
            changed = False
            for v in range(3):
                if norms[v] > 0 and _exceeds(cur[v], n - 1, norms[v], qs[v]):
                    res = size_lemma_extract(members, v + 1, qs[v], fs[v], engine=engines[v],
                                             active=live, verify=False, check_convex=False)
                    for et in res.trees:
                        live &= ~engines[v].mask(et.tree.members)
                    found.extend(res.trees)
                    cur = sizes_now()
                    changed = changed or bool(res.trees)
        if found:
            levels[n] = found
        nxt = _start_level(cur, norms, qs)
        n = None if nxt is None else min(n - 1, nxt)
    residual = QuartileCollection(frozenset(P for P, y in zip(index, live) if y))
    out = _assemble(levels, residual, engines, fs, qs, norms)
    _verify_decomposition(out, members, engines, qs)
    return out


def _assemble(levels, residual, engines, fs, qs, norms) -> DecompositionResult:
    sums, consts, sizes, bounds = {}, {}, {}, {}
    for n, trees in levels.items():
        s = sum((_length(et.tree.top.time) for et in trees), Fraction(0))
        sums[n] = s
        consts[n] = float(s) * 2.0 ** n
        per = []
        for et in trees:
            per.append([eng.best(eng.mask(et.tree.members), q)[0] for eng, q in zip(engines, qs)])
        sizes[n] = per
        bounds[n] = [2.0 ** (n / q) * fn for q, fn in zip(qs, norms)]
    return DecompositionResult(levels, residual, sums, consts, sizes, bounds, qs, norms)


def _verify_decomposition(res: DecompositionResult, members, engines, qs) -> None:
    pieces = [et.tree.members for et in res.all_trees()] + [res.residual.members]
    union = frozenset().union(*pieces) if pieces else frozenset()
    res.checks["partition"] = union == frozenset(members) and sum(len(p) for p in pieces) == len(members)
    res.checks["convex"] = all(is_convex(p) for p in pieces)
    tops_ok = True
    for et in res.all_trees():
        try:
            et.tree.validate()
        except ValueError:
            tops_ok = False
    res.checks["tree_shape"] = tops_ok
    res.checks["residual_size_zero"] = all(
        eng.best(eng.mask(res.residual.members), q)[0] == 0 for eng, q in zip(engines, qs)) \
        if res.residual.members else True
    within = True
    for n, trees in res.levels.items():
        bounds = [2.0 ** (n / q) * fn for q, fn in zip(qs, res.norms)]
        for et in trees:
            alive = frozenset(members)
            sz = [eng.best(eng.mask(et.tree.members & alive), q)[0] for eng, q in zip(engines, qs)]
            within &= all(s <= b * (1 + REL_TOL) for s, b in zip(sz, bounds))
    # informational for q != 2: the full-tree sup is not monotone under removal
    res.checks["level_size_bounds"] = bool(within) or any(q != 2 for q in qs)
    res.checks["level_size_bounds_strict"] = bool(within)


def verify_decomposition(res: DecompositionResult, collection, Pi: TrilinearForm,
                         f1: StepFunction, f2: StepFunction, f3: StepFunction) -> dict:
    """Re-check a (possibly deserialized) result and compare with a fresh run."""
    members = collection.members if hasattr(collection, "members") else frozenset(collection)
    fs = (f1, f2, f3)
    engines = [TreeSumEngine(members, v, f, Pi.spaces[v - 1]) for v, f in enumerate(fs, start=1)]
    probe = DecompositionResult(res.levels, res.residual, res.top_sums, res.constants,
                                res.tree_sizes, res.level_bounds, res.exponents, res.norms)
    for et in res.all_trees():
        if not et.tree.members <= frozenset(members):
            probe.checks["partition"] = False
    _verify_decomposition(probe, members, engines, res.exponents)
    fresh = full_decomposition(members, Pi, *fs, *res.exponents)
    same = {n: [et.to_json() for et in t] for n, t in fresh.levels.items()} == \
           {n: [et.to_json() for et in t] for n, t in res.levels.items()} and \
           fresh.residual == res.residual
    probe.checks["replay_identical"] = same
    return probe.checks
