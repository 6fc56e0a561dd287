"""Restricted weak-type pipelines and the exponent-region arithmetic.

Sets are finite unions of grid cells, so every measure below is an exact
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .decomp import DecompositionResult, full_decomposition
from .dyadic import DyadicInterval, StepFunction, lp_norm, maximal_function
from .operators import lambda_form, lambda_terms
from .sizes import TreeSumEngine
from .spaces import TrilinearForm
from .walsh import ExactPacketField

__all__ = [
    "ExponentTriple",
    "DyadicSet",
    "exceptional_set",
    "RwtReport",
    "rwt_above",
    "level_skeleton",
    "rwt_below_diagnostics",
    "HexagonRegion",
    "hexagon",
    "classify_estimate",
    "duality_example_region",
    "duality_example_contains",
    "duality_example_consistency",
    "RegionError",
]

SUM_TOL = 1e-12


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentTriple:
    beta: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.beta)
        if len(b) != 3:
            raise ValueError("an exponent triple has three entries")
        if abs(sum(b) - 1.0) > SUM_TOL:
            raise ValueError(f"exponents sum to {sum(b)}, not 1")
        object.__setattr__(self, "beta", b)

    def __getitem__(self, i):
        return self.beta[i]

    def __iter__(self):
        return iter(self.beta)

    def to_json(self) -> list:
        return list(self.beta)


# --- sets and the exceptional set ---------------------------------------------

@dataclass(frozen=True)
class DyadicSet:
    """Union of the cells ``[c 2**-N, (c+1) 2**-N)`` inside ``[0, 2**K)``."""

    cells: frozenset
    resolution: int
    support_bound: int

    def __post_init__(self):
        object.__setattr__(self, "cells", frozenset(int(c) for c in self.cells))
        n = 1 << (self.resolution + self.support_bound)
        if any(c < 0 or c >= n for c in self.cells):
            raise ValueError("cell outside the grid")

    @property
    def measure(self) -> Fraction:
        return Fraction(len(self.cells), 1 << self.resolution) if self.resolution >= 0 \
            else Fraction(len(self.cells) << -self.resolution)

    def indicator(self) -> StepFunction:
        return StepFunction.from_cells(sorted(self.cells), self.resolution, self.support_bound)

    def on_grid(self, resolution: int, support_bound: int) -> "DyadicSet":
        if resolution < self.resolution or support_bound < self.support_bound:
            raise ValueError("sets only move to finer, larger grids")
        k = resolution - self.resolution
        cells = {(c << k) + i for c in self.cells for i in range(1 << k)}
        return DyadicSet(frozenset(cells), resolution, support_bound)

    def __sub__(self, other: "DyadicSet") -> "DyadicSet":
        a, b = _common_sets(self, other)
        return DyadicSet(a.cells - b.cells, a.resolution, a.support_bound)

    def contains_interval(self, I: DyadicInterval) -> bool:
        bits = I.log_length + self.resolution
        if bits <= 0:
            return (I.position >> -bits) in self.cells
        lo = I.position << bits
        return all(c in self.cells for c in range(lo, lo + (1 << bits)))

    def to_json(self) -> dict:
        return {"resolution": self.resolution, "support_bound": self.support_bound,
                "cells": sorted(self.cells)}

    @classmethod
    def from_json(cls, data: dict) -> "DyadicSet":
        return cls(frozenset(data["cells"]), int(data["resolution"]), int(data["support_bound"]))


def _common_sets(*sets: DyadicSet) -> list:
    N = max(s.resolution for s in sets)
    K = max(s.support_bound for s in sets)
    return [s.on_grid(N, K) for s in sets]


def _argmax_measure(sets: Sequence[DyadicSet]) -> int:
    ms = [s.measure for s in sets]
    return ms.index(max(ms))


def exceptional_set(E1: DyadicSet, E2: DyadicSet, E3: DyadicSet) -> tuple[DyadicSet, int]:
    """``F = union_v {M 1_{E_v} > 8|E_v|/|E_tau|}`` and ``tau`` (0-based)."""
    sets = _common_sets(E1, E2, E3)
    if any(not s.cells for s in sets):
        raise ValueError("exceptional set needs nonempty sets")
    tau = _argmax_measure(sets)
    m_tau = sets[tau].measure
    bad = set()
    for E in sets:
        thr = 8 * E.measure / m_tau
        M = maximal_function(E.indicator())
        for c, val in enumerate(M):
            if val.b.numerator == 0 and val.a.to_fraction() > thr:
                bad.add(c)
            elif val.b.numerator != 0:  # not reachable for indicators
                raise AssertionError("indicator averages are rational")
    F = DyadicSet(frozenset(bad), sets[0].resolution, sets[0].support_bound)
    if F.measure > m_tau / 2:
        raise AssertionError(f"|F| = {F.measure} exceeds |E_tau|/2 = {m_tau / 2}")
    return F, tau


# --- above the quartile types ---------------------------------------------------

@dataclass
class RwtReport:
    measures: tuple
    tau: int
    exceptional_measure: Fraction
    major_measure: Fraction
    lambda_value: float
    dropped_count: int
    dropped_vanish: bool
    bound: float
    ratio: float
    levels: list = field(default_factory=list)
    size_constants: tuple = ()
    skeleton_sum: float = 0.0
    decomposition: Optional[DecompositionResult] = None

    def to_json(self) -> dict:
        return {
            "measures": [str(m) for m in self.measures],
            "tau": self.tau + 1,
            "exceptional_measure": str(self.exceptional_measure),
            "major_measure": str(self.major_measure),
            "lambda": self.lambda_value,
            "dropped_count": self.dropped_count,
            "dropped_vanish": self.dropped_vanish,
            "bound": self.bound,
            "ratio": self.ratio,
            "levels": self.levels,
            "size_constants": list(self.size_constants),
            "skeleton_sum": self.skeleton_sum,
        }


def _check_dominated(f: StepFunction, E: DyadicSet, v: int, space) -> None:
    vals = f.on_grid(max(f.resolution, E.resolution), max(f.support_bound, E.support_bound))
    E = E.on_grid(vals.resolution, vals.support_bound)
    norms = space.vector_norms(vals.to_float())
    for c in vals.nonzero_cells():
        c = int(c)
        if c not in E.cells:
            raise ValueError(f"f_{v} is nonzero on cell {c} outside its set")
        if norms[c] > 1 + 1e-12:
            raise ValueError(f"|f_{v}| = {norms[c]} > 1 on cell {c}")


def level_skeleton(levels: Sequence[dict], measures: Sequence[Fraction], tau: int,
                   norms: Sequence[float], qs: Sequence[float]) -> list[float]:
    """``2**-n prod_v min(|E_v|/|E_tau|, 2**(n/q_v) ||f_v||)`` for each recorded level."""
    out = []
    for lv in levels:
        n = lv["n"]
        prod = 1.0
        for m, fn, q in zip(measures, norms, qs):
            prod *= min(float(m / measures[tau]), 2.0 ** (n / q) * fn)
        out.append(2.0 ** -n * prod)
    return out


def rwt_above(collection, Pi: TrilinearForm, E1: DyadicSet, E2: DyadicSet, E3: DyadicSet,
              alpha: ExponentTriple, q1: float, q2: float, q3: float,
              f1: StepFunction, f2: StepFunction, f3: StepFunction) -> RwtReport:
    """One instance of the local estimate with its level ledger."""
    qs = (float(q1), float(q2), float(q3))
    for v, (a, q) in enumerate(zip(alpha, qs), start=1):
        if not 0 < a < 1 / q:
            raise ValueError(f"alpha_{v} = {a} must lie in (0, 1/q_{v})")
    sets = _common_sets(E1, E2, E3)
    F, tau = exceptional_set(*sets)
    measures = tuple(s.measure for s in sets)
    major = sets[tau] - F
    fs = (f1, f2, f3)
    for v, f in enumerate(fs):
        _check_dominated(f, major if v == tau else sets[v], v + 1, Pi.spaces[v])
    members = collection.members if hasattr(collection, "members") else frozenset(collection)
    dropped = [P for P in members if F.contains_interval(P.time)]
    kept = frozenset(members) - frozenset(dropped)
    fields = [ExactPacketField(f) for f in fs]
    dropped_terms = lambda_terms(dropped, Pi, fields)
    vanish = all(t.value.is_zero() for t in dropped_terms)
    lam = lambda_form(kept, Pi, *fs)
    bound = math.prod(float(m) ** a for m, a in zip(measures, alpha))
    ratio = abs(float(lam)) / bound
    norms = tuple(lp_norm(f, q, Pi.spaces[v]) for v, (f, q) in enumerate(zip(fs, qs)))
    consts = []
    for v, (f, q) in enumerate(zip(fs, qs)):
        s = TreeSumEngine(kept, v + 1, f, Pi.spaces[v]).size(None, q).value if kept else 0.0
        consts.append(s / float(measures[v] / measures[tau]))
    res = None
    levels = []
    skel_sum = 0.0
    if kept and any(norms):
        res = full_decomposition(kept, Pi, *fs, *qs)
        ratio_m = [float(m / measures[tau]) for m in measures]
        for n in sorted(res.levels, reverse=True):
            trees = res.levels[n]
            contrib = sum(abs(float(lambda_form(et.tree.members, Pi, *fs))) for et in trees)
            tree_bound = sum(float(Fraction(2) ** et.tree.top.time.log_length) * math.prod(sz)
                             for et, sz in zip(trees, res.tree_sizes[n]))
            mins = [min(r, 2.0 ** (n / q) * fn) for r, q, fn in zip(ratio_m, qs, norms)]
            levels.append({"n": n, "trees": len(trees), "top_length_sum": str(res.top_sums[n]),
                           "contribution": contrib, "tree_bound": tree_bound,
                           "mins": mins, "skeleton": 2.0 ** -n * math.prod(mins)})
        skel_sum = sum(lv["skeleton"] for lv in levels)
    return RwtReport(measures, tau, F.measure, major.measure, float(lam), len(dropped), vanish,
                     bound, ratio, levels, tuple(consts), skel_sum, res)


# --- below the quartile types ---------------------------------------------------

def _min_series_term(n: int, X: Sequence[float], M: Sequence[float], qs) -> float:
    return 2.0 ** n * math.prod(min(x, 2.0 ** (-n / q) * m ** (1 / q)) for x, m, q in zip(X, M, qs))


def rwt_below_diagnostics(E1, E2, E3, q1: float, q2: float, q3: float, beta: ExponentTriple,
                          eps: float = 0.01) -> dict:
    """``d_v`` values, the four partial sums of the min-series and their closed-form comparisons.

    ``E_v`` may be :class:`DyadicSet` instances or positive measures.
    """
    M = [float(E.measure) if isinstance(E, DyadicSet) else float(E) for E in (E1, E2, E3)]
    if min(M) <= 0:
        raise ValueError("sets must have positive measure")
    qs = (float(q1), float(q2), float(q3))
    rho = sum(1 / q for q in qs) - 1
    if rho <= 0:
        raise RegionError(f"rho = {rho} <= 0")
    tau = M.index(max(M))
    X = [m / M[tau] for m in M]
    key = [(X[v] ** (qs[v] - 1), v) for v in range(3) if v != tau]
    (_, b), (_, a) = sorted(key)
    d = [(M[tau] / M[v]) ** (qs[v] - 1) * M[tau] for v in range(3)]
    if not d[b] >= d[a] >= d[tau] * (1 - 1e-12):
        raise ValueError("ordering hypothesis fails after relabeling")

    lo = math.floor(math.log2(d[tau]))
    hi = math.ceil(math.log2(d[b])) + 1
    # all mins take their first value for 2**n <= d_tau, their second beyond d_b
    low_const = math.prod(X)
    high_const = math.prod(m ** (1 / q) for m, q in zip(M, qs))
    parts = {"I": low_const * 2.0 ** (lo + 1), "II": 0.0, "III": 0.0, "IV": 0.0}
    for n in range(lo + 1, hi + 1):
        t = _min_series_term(n, X, M, qs)
        p = 2.0 ** n
        key_ = "I" if p <= d[tau] else "II" if p <= d[a] else "III" if p <= d[b] else "IV"
        parts[key_] += t
    parts["IV"] += high_const * 2.0 ** (-(hi + 1) * rho) / (1 - 2.0 ** -rho)
    total = sum(parts.values())

    # independent brute-force summation over a wide window
    width = int(math.ceil(60 / min(rho, 1.0)))
    brute = sum(_min_series_term(n, X, M, qs) for n in range(lo - 80, hi + width))
    brute += low_const * 2.0 ** (lo - 80) + high_const * 2.0 ** (-(hi + width) * rho) / (1 - 2.0 ** -rho)

    bt = tuple(beta)
    target = math.prod(m ** bv for m, bv in zip(M, bt))
    qa, qb, qt = qs[a], qs[b], qs[tau]
    Ea, Eb, Et = M[a], M[b], M[tau]
    Xa, Xb = X[a], X[b]
    closed = {"I": Ea * Eb / Et,
              "II": Xa * Xb * Et ** (1 / qt) * d[a] ** (1 - 1 / qt)}
    log_case = abs(1 / qa + 1 / qt - 1) <= 1e-12
    c_eps = None
    tail = Ea ** (1 / qa) * Eb ** (1 / qb) * Et ** (1 / qt) * d[b] ** (-rho)
    if log_case:
        c_eps = 1.0 / (math.e * eps * math.log(2))
        closed["III"] = Xb * Ea ** (1 / qa) * Et ** (1 / qt) * math.log2(d[b] / d[a]) if d[b] > d[a] else 0.0
        closed["III_eps"] = c_eps * Xb ** ((qb - 1) * (1 / (qb - 1) - eps)) * \
            Xa ** ((qa - 1) * (1 / (qa * (qa - 1)) + eps)) * Et
        closed["IV"] = tail
    else:
        closed["III+IV"] = Xb * Ea ** (1 / qa) * Et ** (1 / qt) * d[b] ** (1 - 1 / qa - 1 / qt) + tail

    cond = {
        "beta_b<1": bt[b] < 1,
        "single": bt[b] / (qb - 1) <= rho + 1 / (qb * (qb - 1)) + 1e-12,
        "pair": bt[b] / (qb - 1) + bt[a] / (qa - 1) <= rho + 1 / (qb * (qb - 1)) + 1 / (qa * (qa - 1)) + 1e-12,
    }
    hyp = all(cond.values())
    tol = 1 + 1e-9
    checks = {"I_le_min": closed["I"] <= min(Ea, Eb) * tol,
              "I_le_target": closed["I"] <= target * tol or not hyp,
              "II_le_target": closed["II"] <= target * tol or not hyp,
              "split_matches_brute": math.isclose(total, brute, rel_tol=1e-12)}
    if log_case:
        checks["III_le_eps_bound"] = closed["III"] <= closed["III_eps"] * tol
        checks["III_eps_le_target"] = closed["III_eps"] <= c_eps * target * tol or not hyp
        checks["IV_le_target"] = tail <= target * tol or not hyp
    else:
        checks["III+IV_le_target"] = closed["III+IV"] <= 2 * target * tol or not hyp
    ratios = {k: (parts[k] / closed[k] if closed.get(k) else None) for k in ("I", "II")}
    if log_case:
        ratios["III"] = parts["III"] / closed["III"] if closed["III"] else None
        ratios["IV"] = parts["IV"] / closed["IV"] if closed["IV"] else None
    else:
        ratios["III+IV"] = (parts["III"] + parts["IV"]) / closed["III+IV"]
    return {"labels": {"tau": tau + 1, "a": a + 1, "b": b + 1}, "rho": rho,
            "d": d, "parts": parts, "total": total, "brute_total": brute,
            "closed_forms": closed, "ratios": ratios, "target": target,
            "total_over_target": total / target, "log_case": log_case,
            "eps": eps, "eps_constant": c_eps, "conditions": cond, "hypotheses_hold": hyp,
            "checks": checks}


# --- exponent regions -------------------------------------------------------------

_LINE_NAMES = ("restriction", "side")


@dataclass(frozen=True)
class HexagonRegion:
    q: tuple
    rho: float
    vertices: dict
    doubled_pair_term: bool = False

    def restriction_value(self, v: int) -> float:
        """The value of ``beta_v`` on the ``v``-th restriction line."""
        q = self.q[v]
        return 1 / q + (q - 1) * self.rho

    def defining_lines(self) -> dict:
        """Per vertex: the coordinate on a restriction line and the coordinate on a triangle side."""
        return {"A": (2, 1), "B": (2, 0), "C": (0, 2), "D": (0, 1), "E": (1, 0), "F": (1, 2)}

    def line_residuals(self) -> dict:
        out = {}
        for name, (r, s) in self.defining_lines().items():
            b = self.vertices[name]
            out[name] = (abs(sum(b) - 1), abs(b[r] - self.restriction_value(r)),
                         abs(b[s] - 1 / self.q[s]))
        return out

    def pair_bound(self, v: int, u: int) -> float:
        qv, qu = self.q[v], self.q[u]
        if self.doubled_pair_term:
            return self.rho + 2 / (qu * (qu - 1))
        return self.rho + 1 / (qv * (qv - 1)) + 1 / (qu * (qu - 1))

    def slack(self, beta) -> float:
        """Smallest margin over the defining strict inequalities; positive means inside."""
        b = tuple(beta)
        q = self.q
        margins = []
        for v in range(3):
            margins.append(1 - b[v])
            margins.append(self.rho + 1 / (q[v] * (q[v] - 1)) - b[v] / (q[v] - 1))
            for u in range(3):
                if u != v:
                    margins.append(self.pair_bound(v, u) - b[v] / (q[v] - 1) - b[u] / (q[u] - 1))
        return min(margins)

    def contains(self, beta, tol: float = 1e-12) -> bool:
        b = tuple(beta)
        if abs(sum(b) - 1) > SUM_TOL:
            return False
        return self.slack(b) > tol

    def in_local_triangle(self, beta) -> bool:
        return abs(sum(beta) - 1) <= SUM_TOL and all(0 < bv < 1 / q for bv, q in zip(beta, self.q))

    def to_json(self) -> dict:
        return {"q": list(self.q), "rho": self.rho, "doubled_pair_term": self.doubled_pair_term,
                "vertices": {k: list(v.beta) for k, v in self.vertices.items()}}


def hexagon(q1: float, q2: float, q3: float, doubled_pair_term: bool = False) -> HexagonRegion:
    q = (float(q1), float(q2), float(q3))
    if min(q) < 2:
        raise RegionError("quartile types are at least 2")
    rho = sum(1 / x for x in q) - 1
    if rho <= 0:
        raise RegionError(f"rho = {rho} <= 0: the reciprocal exponents must sum past 1")
    i1, i2, i3 = (1 / x for x in q)
    r = rho
    V = {
        "A": (i1 - r * q[2], i2, i3 + r * q[2] - r),
        "B": (i1, i2 - r * q[2], i3 + r * q[2] - r),
        "C": (i1 + r * q[0] - r, i2 - r * q[0], i3),
        "D": (i1 + r * q[0] - r, i2, i3 - r * q[0]),
        "E": (i1, i2 + r * q[1] - r, i3 - r * q[1]),
        "F": (i1 - r * q[1], i2 + r * q[1] - r, i3),
    }
    return HexagonRegion(q, rho, {k: ExponentTriple(v) for k, v in V.items()}, doubled_pair_term)


def classify_estimate(region: HexagonRegion, beta) -> dict:
    b = tuple(beta)
    if not region.contains(b):
        return {"kind": "outside"}
    nonpos = [v for v in range(3) if b[v] <= 0]
    if not nonpos:
        return {"kind": "strong", "p": [1 / x for x in b]}
    if len(nonpos) == 1:
        j = nonpos[0]
        others = [v for v in range(3) if v != j]
        return {"kind": "bilinear", "slot": j + 1,
                "sources": {str(v + 1): 1 / b[v] for v in others},
                "target": 1 / (1 - b[j])}
    return {"kind": "outside"}


def duality_example_region(q: float) -> dict:
    if not 2 < q < 4:
        raise RegionError("the duality example needs 2 < q < 4")
    p_min = 1 / ((5 - q) / 2 - 1 / q)
    out = {"q": q, "r_interval": [2 / (5 - q), q / (q - 2)], "p_lower": p_min,
           "extra": None}
    if q >= 3:
        out["extra"] = {"threshold": (q * q - 3 * q + 1) / q, "weights": [[q - 1, q - 2], [q - 2, q - 1]]}
    return out


def duality_example_contains(q: float, inv_p1: float, inv_p2: float) -> bool:
    """The printed conditions, in reciprocal exponents ``1/p1``, ``1/p2`` (``1/r`` is their sum)."""
    reg = duality_example_region(q)
    lo_r, hi_r = reg["r_interval"]
    s = inv_p1 + inv_p2
    if not (1 / hi_r < s < 1 / lo_r):
        return False
    bound = 1 / reg["p_lower"]
    if not (0 <= inv_p1 < bound and 0 <= inv_p2 < bound):
        return False
    if reg["extra"] is not None:
        thr = reg["extra"]["threshold"]
        if not thr < min((q - 1) * inv_p1 + (q - 2) * inv_p2, (q - 2) * inv_p1 + (q - 1) * inv_p2):
            return False
    return True


def duality_example_consistency(q: float, samples: int = 20000, seed: int = 0) -> dict:
    """Compare the printed region with the hexagon for types ``(q, q, 2)`` on random points."""
    H = hexagon(q, q, 2.0)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, size=(samples, 2))
    agree = 0
    mismatches = []
    for x, y in pts:
        a = duality_example_contains(q, x, y)
        b = H.contains((x, y, 1 - x - y))
        if a == b:
            agree += 1
        elif len(mismatches) < 10:
            mismatches.append([float(x), float(y), a, b])
    return {"q": q, "samples": samples, "agree": agree, "mismatches": mismatches}
