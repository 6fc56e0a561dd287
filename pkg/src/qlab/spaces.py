"""Finite-dimensional value spaces, trilinear forms and the quartile-type estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dyadic import StepFunction, lp_norm
from .exact import ExactScalar, ZERO
from .phase_plane import Tree, is_good_family

__all__ = [
    "NormedSpace",
    "TrilinearForm",
    "GoodFamily",
    "QuartileTypeEstimate",
    "trilinear_eval",
    "induced_bilinear",
    "quartile_type_ratio",
    "estimate_quartile_type",
    "conjugate_exponent",
]


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormedSpace:
    """``l^p`` on ``R^dim``."""

    dim: int = 1
    p: float = 2.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not (self.p >= 1):
            raise ValueError("l^p needs p >= 1")

    @property
    def tag(self) -> str:
        p = "inf" if math.isinf(self.p) else format(self.p, "g")
        return f"l{p}_{self.dim}"

    def dual(self) -> "NormedSpace":
        return NormedSpace(self.dim, conjugate_exponent(self.p))

    def vector_norms(self, values: np.ndarray) -> np.ndarray:
        """Norms along the last axis of a float array."""
        a = np.abs(values)
        if self.dim == 1:
            return a[..., 0]
        if math.isinf(self.p):
            return a.max(axis=-1)
        if self.p == 2:
            return np.sqrt((a * a).sum(axis=-1))
        if self.p == 1:
            return a.sum(axis=-1)
        return (a ** self.p).sum(axis=-1) ** (1.0 / self.p)

    def norm(self, vector: Sequence) -> float:
        return float(self.vector_norms(np.array([[float(x) for x in vector]]))[0])

    def to_json(self) -> dict:
        return {"dim": self.dim, "p": "inf" if math.isinf(self.p) else self.p}

    @classmethod
    def from_json(cls, data: dict) -> "NormedSpace":
        p = data.get("p", 2.0)
        return cls(int(data.get("dim", 1)), math.inf if p in ("inf", math.inf) else float(p))


@dataclass(frozen=True)
class TrilinearForm:
    """``Pi(x1, x2, x3) = sum t_ijk x1_i x2_j x3_k`` stored as sparse entries.

    Build with :meth:`duality`, :meth:`scalar` or :meth:`from_tensor`.
    """

    kind: str
    spaces: tuple[NormedSpace, NormedSpace, NormedSpace]
    entries: tuple = ()
    bound_constant: float = 1.0

    @classmethod
    def duality(cls, dim: int, p: float = 2.0) -> "TrilinearForm":
        X1 = NormedSpace(dim, p)
        entries = tuple((i, i, 0, ExactScalar(1)) for i in range(dim))
        return cls("duality", (X1, X1.dual(), NormedSpace(1, 2.0)), entries, 1.0)

    @classmethod
    def scalar(cls) -> "TrilinearForm":
        S = NormedSpace(1, 2.0)
        return cls("scalar", (S, S, S), ((0, 0, 0, ExactScalar(1)),), 1.0)

    @classmethod
    def from_tensor(cls, tensor, spaces: Optional[Sequence[NormedSpace]] = None
                    ) -> "TrilinearForm":
        arr = np.array(tensor, dtype=object)
        if arr.ndim != 3:
            raise ValueError("a trilinear tensor has three axes")
        d1, d2, d3 = arr.shape
        if spaces is None:
            spaces = (NormedSpace(d1), NormedSpace(d2), NormedSpace(d3))
        spaces = tuple(spaces)
        if tuple(X.dim for X in spaces) != arr.shape:
            raise ValueError("tensor shape does not match the spaces")
        entries = []
        total = 0.0
        for idx in np.ndindex(arr.shape):
            c = ExactScalar.coerce(arr[idx])
            if c:
                entries.append((*idx, c))
                total += abs(float(c))
        # |x_i| <= ||x||_p for every l^p norm, so sum |t| bounds the form
        return cls("tensor", spaces, tuple(entries), total)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(X.dim for X in self.spaces)

    def dense_float(self) -> np.ndarray:
        t = np.zeros(self.dims)
        for i, j, k, c in self.entries:
            t[i, j, k] += float(c)
        return t

    def to_json(self) -> dict:
        if self.kind == "duality":
            return {"kind": "duality", "dim": self.spaces[0].dim, "p": self.spaces[0].to_json()["p"]}
        if self.kind == "scalar":
            return {"kind": "scalar"}
        return {"kind": "tensor", "spaces": [X.to_json() for X in self.spaces],
                "entries": [[i, j, k, c.to_tuple()] for i, j, k, c in self.entries]}

    @classmethod
    def from_json(cls, data) -> "TrilinearForm":
        if data == "duality" or data == "scalar":
            data = {"kind": data}
        kind = data.get("kind", "tensor" if "tensor" in data else "scalar")
        if kind == "scalar":
            return cls.scalar()
        if kind == "duality":
            p = data.get("p", 2.0)
            return cls.duality(int(data.get("dim", 1)), math.inf if p == "inf" else float(p))
        if "tensor" in data:
            spaces = data.get("spaces")
            return cls.from_tensor(data["tensor"],
                                   None if spaces is None else [NormedSpace.from_json(s) for s in spaces])
        spaces = tuple(NormedSpace.from_json(s) for s in data["spaces"])
        entries = tuple((int(i), int(j), int(k), ExactScalar.from_tuple(c))
                        for i, j, k, c in data["entries"])
        total = sum(abs(float(e[3])) for e in entries)
        return cls("tensor", spaces, entries, total)


def _check_dims(Pi: TrilinearForm, vecs, slots) -> None:
    for x, s in zip(vecs, slots):
        if len(x) != Pi.dims[s]:
            raise ValueError(f"slot {s + 1} expects dimension {Pi.dims[s]}, got {len(x)}")


def trilinear_eval(Pi: TrilinearForm, x1, x2, x3) -> ExactScalar:
    _check_dims(Pi, (x1, x2, x3), (0, 1, 2))
    x1 = [ExactScalar.coerce(x) for x in x1]
    x2 = [ExactScalar.coerce(x) for x in x2]
    x3 = [ExactScalar.coerce(x) for x in x3]
    total = ZERO
    for i, j, k, c in Pi.entries:
        total = total + c * x1[i] * x2[j] * x3[k]
    return total


def induced_bilinear(Pi: TrilinearForm, slot: int, x, y) -> list[ExactScalar]:
    """``Pi_slot``: the two given vectors fill the other slots in increasing order.

    The result is the coordinate functional ``z -> Pi(..., z, ...)``.
    """
    if slot not in (1, 2, 3):
        raise ValueError("slot is 1, 2 or 3")
    others = [s for s in (0, 1, 2) if s != slot - 1]
    _check_dims(Pi, (x, y), others)
    x = [ExactScalar.coerce(t) for t in x]
    y = [ExactScalar.coerce(t) for t in y]
    out = [ZERO] * Pi.dims[slot - 1]
    for e in Pi.entries:
        idx, c = e[:3], e[3]
        out[idx[slot - 1]] = out[idx[slot - 1]] + c * x[idx[others[0]]] * y[idx[others[1]]]
    return out


@dataclass(frozen=True)
class GoodFamily:
    trees: tuple
    v: int
    u: int

    def validate(self) -> None:
        if not is_good_family(list(self.trees), self.v, self.u):
            raise ValueError(f"family is not ({self.v},{self.u})-good")

    def to_json(self) -> dict:
        return {"v": self.v, "u": self.u, "trees": [T.to_json() for T in self.trees]}

    @classmethod
    def from_json(cls, data: dict) -> "GoodFamily":
        return cls(tuple(Tree.from_json(t) for t in data["trees"]), int(data["v"]), int(data["u"]))


@dataclass
class QuartileTypeEstimate:
    q: float
    worst_ratio: float
    witness: Optional[dict] = None
    ratios: list = field(default_factory=list)


def quartile_type_ratio(space: NormedSpace, q: float, family: GoodFamily, f: StepFunction,
                        check: bool = True) -> float:
    """``(sum_T ||sum_P <f,w_{P_u}> w_{P_u}||_q**q)**(1/q) / ||f||_q`` for one family."""
    from .walsh import FloatPacketField

    if check:
        family.validate()
    fnorm = lp_norm(f, q, space)
    if fnorm == 0:
        return 0.0
    field_ = FloatPacketField(f)
    total = 0.0
    for T in family.trees:
        tiles = [P.tile(family.u) for P in T.members]
        proj = field_.projection(tiles)
        total += float(np.sum(space.vector_norms(proj) ** q) * 2.0 ** -f.resolution)
    return total ** (1.0 / q) / fnorm


def estimate_quartile_type(space: NormedSpace, q: float, families: Sequence[GoodFamily],
                           f, ) -> QuartileTypeEstimate:
    """Worst ratio over ``families``; ``f`` is one function or one per family.

    This is a lower bound for the quartile-type constant of ``space``.
    """
    fs = list(f) if isinstance(f, (list, tuple)) else [f] * len(families)
    if len(fs) != len(families):
        raise ValueError("need one function per family")
    worst, witness = 0.0, None
    ratios = []
    for fam, g in zip(families, fs):
        r = quartile_type_ratio(space, q, fam, g)
        ratios.append(r)
        if r > worst or witness is None:
            worst = r
            witness = {"family": fam.to_json(), "function": g.to_json(), "ratio": r}
    return QuartileTypeEstimate(q, worst, witness, ratios)
