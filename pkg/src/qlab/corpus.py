"""Seeded random instances: quartiles, convex collections, trees, good families, sets, functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dyadic import DyadicInterval, StepFunction
from .exact import DyadicRational
from .phase_plane import Quartile, Tree, convexify, leq_v, tiles_intersect

__all__ = [
    "Grid",
    "rng_for",
    "random_quartile",
    "random_convex_collection",
    "random_tree",
    "random_convex_tree",
    "random_u_tree",
    "random_good_family",
    "random_dyadic_set",
    "random_function",
    "random_bounded_function",
    "random_interval",
    "random_convex_intervals",
]


@dataclass(frozen=True)
class Grid:
    """Support ``[0, 2**K)`` sampled on cells of length ``2**-N``."""

    K: int = 0
    N: int = 4

    @property
    def ncells(self) -> int:
        return 1 << (self.K + self.N)


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def random_interval(rng, grid: Grid, min_scale: Optional[int] = None) -> DyadicInterval:
    lo = -grid.N if min_scale is None else min_scale
    j = int(rng.integers(lo, grid.K + 1))
    return DyadicInterval(int(rng.integers(0, 1 << (grid.K - j))), j)


def random_quartile(rng, grid: Grid) -> Quartile:
    """A quartile whose tiles are all representable on the grid."""
    j = int(rng.integers(-grid.N + 2, grid.K + 1)) if grid.N >= 2 else grid.K
    I = DyadicInterval(int(rng.integers(0, 1 << (grid.K - j))), j)
    return Quartile(I, int(rng.integers(0, 1 << max(grid.N + j - 2, 0))))


def random_convex_collection(rng, grid: Grid, max_size: int = 200, seeds: int = 6) -> frozenset:
    for _ in range(64):
        k = int(rng.integers(1, seeds + 1))
        base = {random_quartile(rng, grid) for _ in range(k)}
        # a couple of random trees give the collection comparable pairs to fill in
        for _ in range(int(rng.integers(0, 3))):
            base |= random_tree(rng, grid, max(1, max_size // 8)).members
        C = convexify(base).members
        if len(C) <= max_size:
            return C
        seeds = max(1, seeds - 1)
    return frozenset([random_quartile(rng, grid)])


def _descendant(rng, top: Quartile, j: int) -> Quartile:
    """A random ``P <= top`` at scale ``j``."""
    k = top.time.log_length - j
    pos = (top.time.position << k) + int(rng.integers(0, 1 << k))
    return Quartile(DyadicInterval(pos, j), top.freq_index >> k)


def random_tree(rng, grid: Grid, max_members: int = 32, top: Optional[Quartile] = None) -> Tree:
    top = top or random_quartile(rng, grid)
    depth = top.time.log_length + grid.N - 2
    m = int(rng.integers(1, max_members + 1))
    members = {top} if rng.random() < 0.5 else set()
    for _ in range(m):
        j = top.time.log_length - int(rng.integers(0, depth + 1))
        members.add(_descendant(rng, top, j))
    return Tree(top, frozenset(members))


def random_convex_tree(rng, grid: Grid, max_members: int = 64) -> Tree:
    for _ in range(64):
        T = random_tree(rng, grid, max(1, max_members // 4))
        C = convexify(T.members).members
        if len(C) <= max_members:
            return Tree(T.top, C)
    return Tree(T.top, frozenset([T.top]))


def _patterned_index(rng, u: int, bits: int) -> int:
    if bits <= 0:
        return 0
    if rng.random() < 0.5:
        return int(rng.integers(0, 1 << bits))
    n = 0
    for _ in range((bits + 1) // 2):
        n = (n << 2) | u
    return n & ((1 << bits) - 1)


def random_u_tree(rng, grid: Grid, u: int, max_members: int = 16) -> Tree:
    """A ``u``-tree; members are drawn from the admissible scales below a random top."""
    j = int(rng.integers(-grid.N + 2, grid.K + 1))
    I = DyadicInterval(int(rng.integers(0, 1 << (grid.K - j))), j)
    top = Quartile(I, _patterned_index(rng, u, grid.N + j - 2))
    members = {top}
    n_top = 4 * top.freq_index + u
    ks = [k for k in range(0, j + grid.N - 1) if ((n_top >> k) & 3) == u]
    for _ in range(int(rng.integers(0, max_members))):
        k = int(rng.choice(ks))
        pos = (I.position << k) + int(rng.integers(0, 1 << k))
        members.add(Quartile(DyadicInterval(pos, j - k), (n_top >> k) >> 2))
    T = Tree(top, frozenset(members), u)
    assert all(leq_v(P, top, u) for P in members)
    return T


def random_good_family(rng, grid: Grid, v: int, u: int, trees: int = 4,
                       max_members: int = 12) -> list[Tree]:
    """Disjoint ``v``-trees, thinned so their ``u``-tiles do not meet across trees."""
    out: list[Tree] = []
    used: set = set()
    placed: list = []  # (u-tile, tree index)
    for t in range(trees):
        T = random_u_tree(rng, grid, v, max_members)
        keep = set()
        for P in sorted(T.members):
            if P in used:
                continue
            tile = P.tile(u)
            if any(tiles_intersect(tile, S) for S, _ in placed):
                continue
            keep.add(P)
        if not keep:
            continue
        for P in keep:
            placed.append((P.tile(u), t))
        used |= keep
        out.append(Tree(T.top, frozenset(keep), v))
    return out


def random_dyadic_set(rng, grid: Grid, density: Optional[float] = None,
                      clustered: bool = True) -> frozenset:
    """A nonempty union of grid cells, optionally packed into a random dyadic block."""
    d = 2.0 ** float(rng.uniform(-4, 0)) if density is None else density
    lo, hi = 0, grid.ncells
    if clustered and rng.random() < 0.7:
        k = int(rng.integers(0, grid.K + grid.N + 1))
        size = grid.ncells >> k
        lo = int(rng.integers(0, 1 << k)) * size
        hi = lo + size
    cells = lo + np.nonzero(rng.random(hi - lo) < d)[0]
    if cells.size == 0:
        cells = np.array([int(rng.integers(lo, hi))])
    return frozenset(int(c) for c in cells)


def _dyadic_values(rng, shape, bits: int = 3, amplitude: int = 4) -> np.ndarray:
    nums = rng.integers(-amplitude << bits, (amplitude << bits) + 1, size=shape)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(shape):
        out[idx] = DyadicRational(int(nums[idx]), bits)
    return out


def random_function(rng, grid: Grid, dim: int = 1, sparsity: float = 0.0) -> StepFunction:
    vals = _dyadic_values(rng, (grid.ncells, dim))
    if sparsity:
        vals[rng.random(grid.ncells) < sparsity] = DyadicRational(0)
    return StepFunction.from_values(grid.N, grid.K, vals)


def random_bounded_function(rng, grid: Grid, cells: frozenset, dim: int = 1) -> StepFunction:
    """Values in ``[-1, 1]`` (sup norm per coordinate scaled by ``1/dim``) supported on ``cells``."""
    vals = np.empty((grid.ncells, dim), dtype=object)
    vals[:] = DyadicRational(0)
    bits = 3
    for c in cells:
        for i in range(dim):
            num = int(rng.integers(-(1 << bits), (1 << bits) + 1))
            vals[c, i] = DyadicRational(num, bits) * DyadicRational(1, (dim - 1).bit_length())
    return StepFunction.from_values(grid.N, grid.K, vals)


def random_convex_intervals(rng, grid: Grid, seeds: int = 4) -> frozenset:
    """A family of dyadic intervals closed under betweenness."""
    base = {random_interval(rng, grid) for _ in range(int(rng.integers(1, seeds + 1)))}
    out = set(base)
    for a in base:
        for b in base:
            if b.contains(a):
                for j in range(a.log_length, b.log_length + 1):
                    out.add(a.ancestor(j))
    return frozenset(out)
