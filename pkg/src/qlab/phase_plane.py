"""Tiles, quartiles, the order relations, trees and convexity.

A tile with time interval ``I`` (length ``2**j``) and frequency index ``n``
occupies ``I x [n 2**-j, (n+1) 2**-j)``; a quartile with index ``n`` occupies
``I x [4n 2**-j, 4(n+1) 2**-j)`` and splits into the four tiles ``4n + v``.
Frequency intervals are represented as :class:`DyadicInterval` as well.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .dyadic import DyadicInterval, StepFunction
from .walsh import LINF, L2, wave_packet

__all__ = [
    "Tile",
    "Quartile",
    "Tree",
    "QuartileCollection",
    "leq",
    "leq_v",
    "is_tree",
    "is_u_tree",
    "split_tree",
    "partition_tree",
    "quartiles_between",
    "is_convex",
    "convexify",
    "factorize_wave_packet",
    "is_good_family",
    "tiles_intersect",
    "quartile_universe",
    "universe_size",
    "tree_from_top",
    "factorized_packet",
]


@dataclass(frozen=True, order=True)
class Tile:
    time: DyadicInterval
    freq_index: int

    @property
    def freq(self) -> DyadicInterval:
        return DyadicInterval(self.freq_index, -self.time.log_length)

    @property
    def area_log(self) -> int:
        return 0

    def packet(self, normalization: str = L2, resolution: Optional[int] = None,
               support_bound: Optional[int] = None) -> StepFunction:
        return wave_packet(self, normalization, resolution, support_bound)


@dataclass(frozen=True, order=True)
class Quartile:
    time: DyadicInterval
    freq_index: int

    @classmethod
    def make(cls, position: int, log_length: int, freq_index: int) -> "Quartile":
        return cls(DyadicInterval(position, log_length), freq_index)

    @property
    def freq(self) -> DyadicInterval:
        return DyadicInterval(self.freq_index, 2 - self.time.log_length)

    @property
    def area_log(self) -> int:
        return 2

    @property
    def scale(self) -> int:
        return self.time.log_length

    def tile(self, v: int) -> Tile:
        if not 0 <= v <= 3:
            raise ValueError("quartile children are indexed 0..3")
        return Tile(self.time, 4 * self.freq_index + v)

    @property
    def tiles(self) -> tuple[Tile, Tile, Tile, Tile]:
        return tuple(self.tile(v) for v in range(4))

    def freq_center_key(self, v: int) -> tuple[int, int]:
        """Center of ``omega_{P_v}`` as ``(numerator, log_denominator)`` over ``2**j``."""
        return 2 * (4 * self.freq_index + v) + 1, self.time.log_length + 1

    def to_json(self) -> list[int]:
        return [self.time.position, self.time.log_length, self.freq_index]

    @classmethod
    def from_json(cls, item: Sequence[int]) -> "Quartile":
        pos, j, n = (int(x) for x in item)
        return cls(DyadicInterval(pos, j), n)

    def __str__(self):
        return f"Q({self.time.position},{self.time.log_length},{self.freq_index})"


def leq(P, Q) -> bool:
    """``I_P`` inside ``I_Q`` and ``omega_Q`` inside ``omega_P``."""
    if P.area_log != Q.area_log:
        raise ValueError("the order compares rectangles of equal area")
    return Q.time.contains(P.time) and P.freq.contains(Q.freq)


def leq_v(P: Quartile, Q: Quartile, v: int) -> bool:
    """``P_v <= Q_v``."""
    k = Q.time.log_length - P.time.log_length
    if k < 0 or (P.time.position >> k) != Q.time.position:
        return False
    return ((4 * Q.freq_index + v) >> k) == 4 * P.freq_index + v


@dataclass(frozen=True)
class Tree:
    top: Quartile
    members: frozenset = field(default_factory=frozenset)
    kind: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self) -> Iterator[Quartile]:
        return iter(sorted(self.members))

    def __contains__(self, P) -> bool:
        return P in self.members

    def validate(self) -> None:
        for P in self.members:
            if not leq(P, self.top):
                raise ValueError(f"{P} is not below the top {self.top}")
            if self.kind is not None and not leq_v(P, self.top, self.kind):
                raise ValueError(f"{P} is not below the top {self.top} through child {self.kind}")

    def to_json(self) -> dict:
        return {"top": self.top.to_json(), "members": [P.to_json() for P in sorted(self.members)],
                "kind": self.kind}

    @classmethod
    def from_json(cls, data: dict) -> "Tree":
        return cls(Quartile.from_json(data["top"]),
                   frozenset(Quartile.from_json(m) for m in data["members"]),
                   None if data.get("kind") is None else int(data["kind"]))


@dataclass(frozen=True)
class QuartileCollection:
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self) -> Iterator[Quartile]:
        return iter(sorted(self.members))

    def __contains__(self, P) -> bool:
        return P in self.members

    @property
    def convex(self) -> bool:
        return is_convex(self.members)

    def to_json(self) -> list:
        return [P.to_json() for P in sorted(self.members)]

    @classmethod
    def from_json(cls, data) -> "QuartileCollection":
        return cls(frozenset(Quartile.from_json(m) for m in data))


def _members(C) -> frozenset:
    if isinstance(C, (QuartileCollection, Tree)):
        return C.members
    return frozenset(C)


def is_tree(members: Iterable[Quartile], top: Quartile) -> bool:
    return all(leq(P, top) for P in members)


def is_u_tree(members: Iterable[Quartile], top: Quartile, u: int) -> bool:
    return all(leq_v(P, top, u) for P in members)


def split_tree(T: Tree) -> tuple[Tree, Tree, Tree, Tree]:
    """The four parts ``{P in T : P <=_v top}``; a member may sit in several."""
    parts = [set() for _ in range(4)]
    for P in T.members:
        hit = False
        for v in range(4):
            if leq_v(P, T.top, v):
                parts[v].add(P)
                hit = True
        if not hit:
            raise ValueError(f"{P} lies in no part of the tree with top {T.top}")
    return tuple(Tree(T.top, frozenset(parts[v]), v) for v in range(4))


def partition_tree(T: Tree) -> tuple[Tree, Tree, Tree, Tree]:
    """Like :func:`split_tree` but each member goes to its lowest qualifying part."""
    parts = [set() for _ in range(4)]
    for P in T.members:
        for v in range(4):
            if leq_v(P, T.top, v):
                parts[v].add(P)
                break
        else:
            raise ValueError(f"{P} lies in no part of the tree with top {T.top}")
    return tuple(Tree(T.top, frozenset(parts[v]), v) for v in range(4))


def quartiles_between(low: Quartile, high: Quartile) -> list[Quartile]:
    """All ``P`` with ``low <= P <= high``: one per intermediate scale."""
    if not leq(low, high):
        return []
    out = []
    for j in range(low.time.log_length, high.time.log_length + 1):
        I = low.time.ancestor(j)
        # omega_P has length 2**(2-j) and must contain omega_high
        omega = high.freq.ancestor(2 - j)
        out.append(Quartile(I, omega.position))
    return out


def _comparable_pairs(members: Sequence[Quartile]) -> Iterator[tuple[Quartile, Quartile]]:
    by_scale = defaultdict(list)
    for P in members:
        by_scale[P.time.log_length].append(P)
    scales = sorted(by_scale)
    for ja in scales:
        for jb in (j for j in scales if j >= ja + 2):
            for low in by_scale[ja]:
                for high in by_scale[jb]:
                    if leq(low, high):
                        yield low, high


def is_convex(C) -> bool:
    members = _members(C)
    for low, high in _comparable_pairs(list(members)):
        for P in quartiles_between(low, high):
            if P not in members:
                return False
    return True


def convexify(C) -> QuartileCollection:
    """Smallest convex superset, by adding order paths until nothing changes."""
    members = set(_members(C))
    while True:
        added = set()
        for low, high in _comparable_pairs(list(members)):
            for P in quartiles_between(low, high):
                if P not in members:
                    added.add(P)
        if not added:
            return QuartileCollection(frozenset(members))
        members |= added


def factorize_wave_packet(T: Tree, P: Quartile, v: int) -> tuple[int, int]:
    """``(eps, m)`` with ``w_{P_v} = eps * w_{T_u}^inf * w_{I_P, m}``, ``u = T.kind``."""
    u = T.kind
    if u is None:
        raise ValueError("factorization needs a u-tree")
    if not leq_v(P, T.top, u):
        raise ValueError(f"{P} is not below {T.top} through child {u}")
    k = T.top.time.log_length - P.time.log_length
    n_top = 4 * T.top.freq_index + u
    rel = P.time.position - (T.top.time.position << k)
    # the product of r_i(x/|I_T|)**n_i over i < k is constant on I_P
    parity = 0
    for i in range(k):
        parity ^= ((n_top >> i) & 1) & ((rel >> (k - 1 - i)) & 1)
    return (-1 if parity else 1), u ^ v


def tiles_intersect(S: Tile, R: Tile) -> bool:
    return S.time.intersects(R.time) and S.freq.intersects(R.freq)


def is_good_family(trees: Sequence[Tree], v: int, u: int) -> bool:
    """``(v, u)``-good: disjoint ``v``-trees with globally disjoint ``u``-tiles across trees."""
    if u == v:
        raise ValueError("good families need u != v")
    seen = set()
    for T in trees:
        if not is_u_tree(T.members, T.top, v):
            return False
        if seen & T.members:
            return False
        seen |= T.members
    # index u-tiles by an (i, omega) pair of dyadic intervals; two tiles meet
    # iff one time interval contains the other and likewise for frequency
    labelled = [(P.tile(u), t) for t, T in enumerate(trees) for P in T.members]
    labelled.sort(key=lambda x: x[0].time.log_length)
    for a in range(len(labelled)):
        S, ts = labelled[a]
        for b in range(a + 1, len(labelled)):
            R, tr = labelled[b]
            if ts != tr and tiles_intersect(S, R):
                return False
    return True


def quartile_universe(K: int, N: int) -> Iterator[Quartile]:
    """Every quartile with ``I`` in ``[0, 2**K)``, ``|I| >= 2**-N``, ``omega`` in ``[0, 2**(N+2))``."""
    for j in range(-N, K + 1):
        for pos in range(1 << (K - j)):
            I = DyadicInterval(pos, j)
            for n in range(1 << (N + j)):
                yield Quartile(I, n)


def universe_size(K: int, N: int) -> int:
    return (K + N + 1) << (K + N)


def tree_from_top(collection, top: Quartile, u: Optional[int] = None) -> Tree:
    """Members of ``collection`` below ``top`` (through child ``u`` if given)."""
    members = _members(collection)
    if u is None:
        return Tree(top, frozenset(P for P in members if leq(P, top)), None)
    return Tree(top, frozenset(P for P in members if leq_v(P, top, u)), u)


def factorized_packet(T: Tree, P: Quartile, v: int, resolution: int,
                      support_bound: int) -> StepFunction:
    """Right-hand side ``eps * w_{T_u}^inf * w_{I_P,m}`` built from the factorization."""
    eps, m = factorize_wave_packet(T, P, v)
    top_packet = wave_packet(T.top.tile(T.kind), LINF, resolution, support_bound)
    local = wave_packet(Tile(P.time, m), L2, resolution, support_bound)
    return top_packet.pointwise(local).scaled(eps)
