"""Tree sums, the ``(v, p)``-size of a collection, and the per-tree ``Delta_u``.

The heavy lifting is done by :class:`TreeSumEngine`: for a fixed function,
slot ``v`` and member list it stores every member's float contribution
``<f, w_{P_v}> w_{P_v}`` once, plus boolean membership matrices of members
against every candidate top. A tree sum is then a row of a matrix product.
Exact tree sums are available separately through :func:`tree_sum`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .dyadic import StepFunction, lp_norm
from .phase_plane import Quartile, Tile, Tree, leq_v, quartile_universe
from .spaces import NormedSpace
from .walsh import LINF, ExactPacketField, FloatPacketField, packet_sum, wave_packet

__all__ = [
    "SizeReport",
    "TreeSumEngine",
    "tree_sum",
    "tree_sum_factorized",
    "size",
    "delta_u",
    "size_equivalence_report",
    "EXHAUSTIVE_CAP",
]

EXHAUSTIVE_CAP = 12
FULL_TREE_SUP = "full_tree_sup"
EXHAUSTIVE = "exhaustive_subsets"


def _fits(I) -> int:
    return I.log_length + I.position.bit_length()


def tree_sum(T, v: int, f: StepFunction) -> StepFunction:
    """``sum_{P in T} <f, w_{P_v}> w_{P_v}`` exactly."""
    members = T.members if isinstance(T, Tree) else frozenset(T)
    fld = ExactPacketField(f)
    terms = [(P.tile(v), fld.coefficient(P.tile(v))) for P in sorted(members)]
    terms = [(t, c) for t, c in terms if any(not x.is_zero() for x in c)]
    K = max([f.support_bound] + [_fits(P.time) for P in members])
    return packet_sum(terms, f.resolution, K, f.dim, space=f.space)


def tree_sum_factorized(T: Tree, v: int, f: StepFunction) -> StepFunction:
    """The same sum for a ``u``-tree, via ``w_{T_u}^inf * sum <f w_{T_u}^inf, w_{I_P,m}> w_{I_P,m}``."""
    from .phase_plane import factorize_wave_packet

    u = T.kind
    if u is None:
        raise ValueError("the factorized form needs a u-tree")
    top_tile = T.top.tile(u)
    N = max(f.resolution, top_tile.freq_index.bit_length() - top_tile.time.log_length)
    K = max([f.support_bound, _fits(T.top.time)])
    g = f.on_grid(N, K)
    top = wave_packet(top_tile, LINF, N, K)
    modulated = g.pointwise(top)
    fld = ExactPacketField(modulated)
    terms = []
    for P in sorted(T.members):
        _, m = factorize_wave_packet(T, P, v)
        local = Tile(P.time, m)
        terms.append((local, fld.coefficient(local)))
    inner = packet_sum(terms, N, K, f.dim)
    return inner.pointwise(top)


@dataclass
class SizeReport:
    v: int
    p: float
    value: float
    witness_tree: Optional[Tree]
    method: str

    def to_json(self) -> dict:
        return {"v": self.v, "p": self.p, "value": self.value,
                "witness_top": None if self.witness_tree is None else self.witness_tree.top.to_json(),
                "witness_kind": None if self.witness_tree is None else self.witness_tree.kind,
                "method": self.method}


class TreeSumEngine:
    """Float tree sums of one function against subsets of a fixed member list."""

    def __init__(self, members: Iterable[Quartile], v: int, f: StepFunction,
                 space: Optional[NormedSpace] = None, exact_support: bool = True):
        self.members = sorted(set(members))
        self.index = {P: i for i, P in enumerate(self.members)}
        self.v = v
        self.space = space or NormedSpace(f.dim)
        K = max([f.support_bound] + [_fits(P.time) for P in self.members])
        self.K = K
        self.N = f.resolution
        g = f.extend(K)
        self.f = g
        fld = FloatPacketField(g)
        ncells = 1 << (K + self.N)
        self.ncells = ncells
        self.dim = g.dim
        m = len(self.members)
        contrib = np.zeros((m, ncells, g.dim))
        coefs = np.zeros((m, g.dim))
        exact = ExactPacketField(g) if exact_support else None
        for i, P in enumerate(self.members):
            t = P.tile(v)
            # float round-off must not turn an exactly vanishing pairing into a tree
            if exact is not None and exact.is_zero(t):
                continue
            c = fld.coefficient(t)
            coefs[i] = c
            if np.any(c):
                fld.add_packet(contrib[i], t, c)
        self.coefs = coefs
        self.contrib = contrib.reshape(m, ncells * g.dim)
        self.nonzero = np.any(coefs != 0, axis=1)
        tops = list(quartile_universe(K, self.N))
        self.tops = tops
        self.top_pos = np.array([T.time.position for T in tops], dtype=np.int64)
        self.top_scale = np.array([T.time.log_length for T in tops], dtype=np.int64)
        self.top_freq = np.array([T.freq_index for T in tops], dtype=np.int64)
        self._mem_pos = np.array([P.time.position for P in self.members], dtype=np.int64)
        self._mem_scale = np.array([P.time.log_length for P in self.members], dtype=np.int64)
        self._mem_freq = np.array([P.freq_index for P in self.members], dtype=np.int64)
        self._membership: dict = {}

    # membership -------------------------------------------------------

    def _time_ok(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.top_scale[:, None] - self._mem_scale[None, :]
        ks = np.clip(k, 0, 62)
        ok = (k >= 0) & ((self._mem_pos[None, :] >> ks) == self.top_pos[:, None])
        return ok, ks

    def membership(self, u: Optional[int]) -> np.ndarray:
        """``tops x members``: ``P <=_u T`` (or ``P <= T`` when ``u`` is None)."""
        if u in self._membership:
            return self._membership[u]
        ok, ks = self._time_ok()
        if u is None:
            ok &= (self.top_freq[:, None] >> ks) == self._mem_freq[None, :]
        else:
            ok &= ((4 * self.top_freq[:, None] + u) >> ks) == (4 * self._mem_freq[None, :] + u)
        self._membership[u] = ok
        return ok

    def mask(self, members: Iterable[Quartile]) -> np.ndarray:
        out = np.zeros(len(self.members), dtype=bool)
        for P in members:
            out[self.index[P]] = True
        return out

    # values -----------------------------------------------------------

    def _integrals(self, rows: np.ndarray, cols: np.ndarray, p: float) -> np.ndarray:
        """``int ||sum_{P in row} contrib_P||**p`` for each boolean row."""
        if rows.shape[0] == 0:
            return np.zeros(0)
        if not np.any(cols):
            return np.zeros(rows.shape[0])
        sub = rows[:, cols]
        uniq, inverse = np.unique(sub, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        F = self.contrib[cols]
        out = np.zeros(uniq.shape[0])
        step = max(1, 4_000_000 // max(F.shape[1], 1))
        for a in range(0, uniq.shape[0], step):
            S = uniq[a:a + step].astype(float) @ F
            S = S.reshape(-1, self.ncells, self.dim)
            norms = self.space.vector_norms(S)
            if math.isinf(p):
                out[a:a + step] = norms.max(axis=1)
            else:
                out[a:a + step] = (norms ** p).sum(axis=1) * 2.0 ** -self.N
        return out[inverse]

    def tree_values(self, u: int, active: Optional[np.ndarray], p: float) -> np.ndarray:
        """``(|I_T|**-1 int ||sum_{P <=_u T, P active} ...||**p)**(1/p)`` for every top."""
        M = self.membership(u)
        cols = self.nonzero.copy() if active is None else (active & self.nonzero)
        ints = self._integrals(M, cols, p)
        if math.isinf(p):
            return ints
        return (ints * 2.0 ** (-self.top_scale.astype(float))) ** (1.0 / p)

    def values_for_rows(self, rows: np.ndarray, top_scales: np.ndarray, p: float) -> np.ndarray:
        ints = self._integrals(rows, self.nonzero.copy(), p)
        if math.isinf(p):
            return ints
        return (ints * 2.0 ** (-top_scales.astype(float))) ** (1.0 / p)

    def kinds(self) -> list[int]:
        return [u for u in range(4) if u != self.v]

    def best(self, active: Optional[np.ndarray], p: float,
             kinds: Optional[Sequence[int]] = None) -> tuple[float, Optional[int], Optional[int]]:
        """``(value, top index, u)`` maximizing over tops and kinds; ties go to the smallest top."""
        best_val, best_t, best_u = 0.0, None, None
        for u in (kinds or self.kinds()):
            vals = self.tree_values(u, active, p)
            if vals.size == 0:
                continue
            i = int(np.argmax(vals))  # first index of the max; tops are in sorted order
            if vals[i] > best_val:
                best_val, best_t, best_u = float(vals[i]), i, u
        return best_val, best_t, best_u

    def witness(self, t: Optional[int], u: Optional[int], active: Optional[np.ndarray]) -> Optional[Tree]:
        if t is None:
            return None
        row = self.membership(u)[t]
        if active is not None:
            row = row & active
        return Tree(self.tops[t], frozenset(P for P, y in zip(self.members, row) if y), u)

    def size(self, active: Optional[np.ndarray], p: float) -> SizeReport:
        val, t, u = self.best(active, p)
        return SizeReport(self.v, p, val, self.witness(t, u, active), FULL_TREE_SUP)

    def exhaustive(self, active: Optional[np.ndarray], p: float,
                   cap: int = EXHAUSTIVE_CAP) -> SizeReport:
        live = np.ones(len(self.members), dtype=bool) if active is None else active
        if int(live.sum()) > cap:
            raise ValueError(f"exhaustive subsets refused above {cap} members")
        best_val, best_tree = 0.0, None
        for u in self.kinds():
            M = self.membership(u) & live[None, :]
            uniq, first = np.unique(M, axis=0, return_index=True)
            for row, t0 in zip(uniq, first):
                idx = np.nonzero(row)[0]
                if idx.size == 0:
                    continue
                # the smallest top with this full tree gives the largest normalization
                same = np.all(M == row[None, :], axis=1)
                cand = np.nonzero(same)[0]
                t = int(cand[np.argmin(self.top_scale[cand] * (1 << 40) + cand)])
                subsets = np.array(list(itertools.product((False, True), repeat=idx.size)))[1:]
                rows = np.zeros((subsets.shape[0], len(self.members)), dtype=bool)
                rows[:, idx] = subsets
                vals = self.values_for_rows(rows, np.full(rows.shape[0], self.top_scale[t]), p)
                i = int(np.argmax(vals))
                if vals[i] > best_val:
                    best_val = float(vals[i])
                    chosen = [self.members[j] for j in np.nonzero(rows[i])[0]]
                    best_tree = Tree(self.tops[t], frozenset(chosen), u)
        return SizeReport(self.v, p, best_val, best_tree, EXHAUSTIVE)


def size(collection, v: int, p: float, f: StepFunction, method: str = FULL_TREE_SUP,
         space: Optional[NormedSpace] = None, engine: Optional[TreeSumEngine] = None) -> SizeReport:
    """``size_{v,p}`` of a quartile collection with respect to ``f``."""
    members = collection.members if hasattr(collection, "members") else frozenset(collection)
    if method == EXHAUSTIVE and len(members) > EXHAUSTIVE_CAP:
        raise ValueError(f"exhaustive subsets refused above {EXHAUSTIVE_CAP} members")
    eng = engine or TreeSumEngine(members, v, f, space)
    active = None if engine is None else eng.mask(members)
    if method == FULL_TREE_SUP:
        return eng.size(active, p)
    if method == EXHAUSTIVE:
        return eng.exhaustive(active, p)
    raise ValueError(f"unknown size method {method!r}")


def delta_u(T: Tree, u: int, v: int, q: float, f: StepFunction,
            space: Optional[NormedSpace] = None) -> float:
    """``Delta_u``: the normalized ``L^q`` norm of the ``u``-part of ``T``."""
    if u == v:
        raise ValueError("Delta_u needs u != v")
    part = [P for P in T.members if leq_v(P, T.top, u)]
    if not part:
        return 0.0
    s = tree_sum(part, v, f)
    K = max(s.support_bound, _fits(T.top.time))
    s = s.extend(K)
    space = space or NormedSpace(f.dim)
    norm = lp_norm(s, q, space)
    if math.isinf(q):
        return norm
    return norm * 2.0 ** (-T.top.time.log_length / q)


def size_equivalence_report(collection, v: int, f: StepFunction, p_list: Sequence[float],
                            space: Optional[NormedSpace] = None) -> dict:
    """``size_{v,p}`` for each ``p`` and all pairwise ratios."""
    members = collection.members if hasattr(collection, "members") else frozenset(collection)
    eng = TreeSumEngine(members, v, f, space)
    sizes = {float(p): eng.size(None, p).value for p in p_list}
    ratios = {}
    for p, q in itertools.permutations(sizes, 2):
        a, b = sizes[p], sizes[q]
        ratios[f"{p:g}/{q:g}"] = (a / b) if b > 0 else (math.nan if a == 0 else math.inf)
    finite = [r for r in ratios.values() if math.isfinite(r)]
    return {"sizes": sizes, "ratios": ratios, "max_ratio": max(finite) if finite else math.nan}
