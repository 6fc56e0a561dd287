"""Dyadic intervals and exact step functions on the truncated half-line.

A :class:`StepFunction` lives on ``[0, 2**K)`` and is constant on the cells
``[c 2**-N, (c+1) 2**-N)``. Values are coordinate vectors in the ring
``{a + b sqrt(2)}``; internally the whole function is stored as two integer
arrays ``A``, ``B`` of shape ``(2**(K+N), dim)`` and one common scale ``s``,
so that cell ``c``, coordinate ``i`` holds ``(A[c,i] + B[c,i] sqrt(2)) / 2**s``.
The integer arrays use ``dtype=object`` (Python ints), so nothing overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .exact import DyadicRational, ExactScalar, ZERO, _trailing_zeros

__all__ = [
    "DyadicInterval",
    "StepFunction",
    "ResolutionError",
    "average",
    "conditional_expectation",
    "dyadic_maximal",
    "maximal_function",
    "bmo_norm",
    "lp_norm",
    "l2_squared_exact",
    "integral",
]

SQRT2_F = math.sqrt(2.0)


class ResolutionError(ValueError):
    """A requested object is not representable at the available resolution."""


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """``[position * 2**log_length, (position + 1) * 2**log_length)``."""

    position: int
    log_length: int

    def __post_init__(self):
        if self.position < 0:
            raise ValueError("dyadic intervals live on the half-line")

    @property
    def length(self) -> DyadicRational:
        return DyadicRational(1, -self.log_length)

    @property
    def left(self) -> DyadicRational:
        return DyadicRational(self.position, -self.log_length)

    @property
    def right(self) -> DyadicRational:
        return DyadicRational(self.position + 1, -self.log_length)

    @property
    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.position >> 1, self.log_length + 1)

    def ancestor(self, log_length: int) -> "DyadicInterval":
        k = log_length - self.log_length
        if k < 0:
            raise ValueError("ancestor must be at least as long")
        return DyadicInterval(self.position >> k, log_length)

    @property
    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        p, j = 2 * self.position, self.log_length - 1
        return DyadicInterval(p, j), DyadicInterval(p + 1, j)

    @property
    def left_child(self) -> "DyadicInterval":
        return self.children[0]

    @property
    def right_child(self) -> "DyadicInterval":
        return self.children[1]

    @property
    def sibling(self) -> "DyadicInterval":
        return DyadicInterval(self.position ^ 1, self.log_length)

    def contains(self, other: "DyadicInterval") -> bool:
        k = self.log_length - other.log_length
        return k >= 0 and (other.position >> k) == self.position

    def __contains__(self, other: "DyadicInterval") -> bool:
        return self.contains(other)

    def intersects(self, other: "DyadicInterval") -> bool:
        return self.contains(other) or other.contains(self)

    def descendants(self, log_length: int) -> Iterator["DyadicInterval"]:
        k = self.log_length - log_length
        if k < 0:
            return
        base = self.position << k
        for i in range(1 << k):
            yield DyadicInterval(base + i, log_length)

    def cell_range(self, resolution: int) -> tuple[int, int]:
        """Half-open range of cell indices covered at ``resolution``."""
        k = self.log_length + resolution
        if k < 0:
            raise ResolutionError(f"{self} is finer than cells of length 2**-{resolution}")
        return self.position << k, (self.position + 1) << k

    def __str__(self):
        return f"[{self.left}, {self.right})"


def _as_int_arrays(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Convert an array of ints/Fractions/DyadicRationals/ExactScalars."""
    flat = values.ravel()
    exacts = [ExactScalar.coerce(v) for v in flat]
    s = max((e.ints[2] for e in exacts), default=0)
    A = np.empty(len(exacts), dtype=object)
    B = np.empty(len(exacts), dtype=object)
    for idx, e in enumerate(exacts):
        a, b, t = e.ints
        A[idx] = a << (s - t)
        B[idx] = b << (s - t)
    return A.reshape(values.shape), B.reshape(values.shape), s


def _obj_zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(0)
    return out


class StepFunction:
    """A finite dyadic step function with values in a coordinate space.

    ``resolution`` is ``N`` (cells of length ``2**-N``), ``support_bound`` is
    ``K`` (support inside ``[0, 2**K)``). ``space`` is a free-form tag naming the
    normed space the values live in; it only participates in sanity checks.
    """

    __slots__ = ("resolution", "support_bound", "A", "B", "scale", "space")

    def __init__(self, resolution: int, support_bound: int, A: np.ndarray, B: np.ndarray,
                 scale: int = 0, space: str = "scalar", reduce: bool = False):
        if resolution + support_bound < 0:
            raise ValueError("support must contain at least one cell")
        n = 1 << (resolution + support_bound)
        A = np.asarray(A, dtype=object)
        B = np.asarray(B, dtype=object)
        if A.ndim == 1:
            A = A.reshape(-1, 1)
            B = B.reshape(-1, 1)
        if A.shape[0] != n or A.shape != B.shape:
            raise ValueError(f"expected {n} cells, got arrays of shape {A.shape}, {B.shape}")
        self.resolution = int(resolution)
        self.support_bound = int(support_bound)
        self.A = A
        self.B = B
        self.scale = int(scale)
        self.space = space
        if reduce:
            self._reduce()

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, resolution: int, support_bound: int, dim: int = 1,
              space: str = "scalar") -> "StepFunction":
        n = 1 << (resolution + support_bound)
        return cls(resolution, support_bound, _obj_zeros((n, dim)), _obj_zeros((n, dim)), 0, space)

    @classmethod
    def from_values(cls, resolution: int, support_bound: int, values,
                    space: str = "scalar") -> "StepFunction":
        """Build from a per-cell array (shape ``(cells,)`` or ``(cells, dim)``)."""
        arr = np.empty(np.shape(values), dtype=object)
        arr[...] = values
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        A, B, s = _as_int_arrays(arr)
        return cls(resolution, support_bound, A, B, s, space, reduce=True)

    @classmethod
    def indicator(cls, intervals: Iterable[DyadicInterval], resolution: int,
                  support_bound: int, space: str = "scalar") -> "StepFunction":
        f = cls.zeros(resolution, support_bound, 1, space)
        for I in intervals:
            lo, hi = I.cell_range(resolution)
            f.A[lo:hi, 0] = 1
        return f

    @classmethod
    def from_cells(cls, cells: Iterable[int], resolution: int, support_bound: int,
                   space: str = "scalar") -> "StepFunction":
        f = cls.zeros(resolution, support_bound, 1, space)
        for c in cells:
            f.A[int(c), 0] = 1
        return f

    def _reduce(self) -> None:
        acc = 0
        for arr in (self.A, self.B):
            if arr.size:
                acc |= int(np.bitwise_or.reduce(arr.ravel()))
        if acc == 0:
            self.scale = 0
            return
        tz = _trailing_zeros(acc)
        if tz:
            self.A = self.A >> tz
            self.B = self.B >> tz
            self.scale -= tz

    def reduced(self) -> "StepFunction":
        """Same function with the smallest common scale."""
        g = self.copy()
        g._reduce()
        return g

    def copy(self) -> "StepFunction":
        return StepFunction(self.resolution, self.support_bound, self.A.copy(), self.B.copy(),
                            self.scale, self.space)

    # shape --------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def ncells(self) -> int:
        return self.A.shape[0]

    @property
    def domain(self) -> DyadicInterval:
        return DyadicInterval(0, self.support_bound)

    def refine(self, resolution: int) -> "StepFunction":
        if resolution < self.resolution:
            raise ResolutionError("refine() only goes to finer cells")
        if resolution == self.resolution:
            return self
        r = 1 << (resolution - self.resolution)
        return StepFunction(resolution, self.support_bound, np.repeat(self.A, r, axis=0),
                            np.repeat(self.B, r, axis=0), self.scale, self.space)

    def extend(self, support_bound: int) -> "StepFunction":
        if support_bound < self.support_bound:
            nz = self.nonzero_cells()
            n = 1 << (support_bound + self.resolution)
            if len(nz) and nz[-1] >= n:
                raise ValueError("cannot shrink support below nonzero cells")
            return StepFunction(self.resolution, support_bound, self.A[:n], self.B[:n],
                                self.scale, self.space)
        if support_bound == self.support_bound:
            return self
        n = 1 << (support_bound + self.resolution)
        A = _obj_zeros((n, self.dim))
        B = _obj_zeros((n, self.dim))
        A[: self.ncells] = self.A
        B[: self.ncells] = self.B
        return StepFunction(self.resolution, support_bound, A, B, self.scale, self.space)

    def on_grid(self, resolution: int, support_bound: int) -> "StepFunction":
        f = self.refine(max(resolution, self.resolution))
        return f.extend(support_bound)

    def _common(self, other: "StepFunction") -> tuple["StepFunction", "StepFunction"]:
        N = max(self.resolution, other.resolution)
        K = max(self.support_bound, other.support_bound)
        return self.on_grid(N, K), other.on_grid(N, K)

    def _at_scale(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        k = s - self.scale
        if k < 0:
            raise ValueError("can only raise the common scale")
        if k == 0:
            return self.A, self.B
        return self.A << k, self.B << k

    # arithmetic ---------------------------------------------------------

    def __add__(self, other: "StepFunction") -> "StepFunction":
        if not isinstance(other, StepFunction):
            return NotImplemented
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        f, g = self._common(other)
        s = max(f.scale, g.scale)
        fA, fB = f._at_scale(s)
        gA, gB = g._at_scale(s)
        return StepFunction(f.resolution, f.support_bound, fA + gA, fB + gB, s, self.space)

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.resolution, self.support_bound, -self.A, -self.B,
                            self.scale, self.space)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + (-other)

    def scaled(self, c) -> "StepFunction":
        """Multiply every value by the exact scalar ``c``."""
        ca, cb, cs = ExactScalar.coerce(c).ints
        A = self.A * ca + 2 * cb * self.B
        B = self.A * cb + self.B * ca
        return StepFunction(self.resolution, self.support_bound, A, B, self.scale + cs, self.space)

    def __mul__(self, c):
        if isinstance(c, StepFunction):
            return self.pointwise(c)
        return self.scaled(c)

    __rmul__ = __mul__

    def pointwise(self, g: "StepFunction") -> "StepFunction":
        """Pointwise product with a scalar-valued step function ``g``."""
        if g.dim != 1 and self.dim != 1 and g.dim != self.dim:
            raise ValueError("pointwise product needs a scalar factor or equal dims")
        f, g = self._common(g)
        A = f.A * g.A + 2 * f.B * g.B
        B = f.A * g.B + f.B * g.A
        return StepFunction(f.resolution, f.support_bound, A, B, f.scale + g.scale,
                            self.space if self.dim >= g.dim else g.space)

    def coordinate(self, i: int) -> "StepFunction":
        return StepFunction(self.resolution, self.support_bound, self.A[:, i:i + 1].copy(),
                            self.B[:, i:i + 1].copy(), self.scale)

    def tensor(self, vector: Sequence) -> "StepFunction":
        """``self`` (scalar) times a constant coordinate vector."""
        if self.dim != 1:
            raise ValueError("tensor() needs a scalar function")
        cols = [self.scaled(c) for c in vector]
        s = max(c.scale for c in cols)
        A = np.concatenate([c._at_scale(s)[0] for c in cols], axis=1)
        B = np.concatenate([c._at_scale(s)[1] for c in cols], axis=1)
        return StepFunction(self.resolution, self.support_bound, A, B, s)

    def restrict(self, I: DyadicInterval) -> "StepFunction":
        f = self.refine(max(self.resolution, -I.log_length))
        lo, hi = I.cell_range(f.resolution)
        A = _obj_zeros(f.A.shape)
        B = _obj_zeros(f.B.shape)
        A[lo:hi] = f.A[lo:hi]
        B[lo:hi] = f.B[lo:hi]
        return StepFunction(f.resolution, f.support_bound, A, B, f.scale, f.space)

    # inspection ---------------------------------------------------------

    def value(self, cell: int) -> list[ExactScalar]:
        if not 0 <= cell < self.ncells:
            return [ZERO] * self.dim
        return [ExactScalar.from_ints(self.A[cell, i], self.B[cell, i], self.scale)
                for i in range(self.dim)]

    def nonzero_cells(self) -> np.ndarray:
        mask = np.any(self.A != 0, axis=1) | np.any(self.B != 0, axis=1)
        return np.nonzero(mask)[0]

    def cells(self) -> dict[int, list[ExactScalar]]:
        return {int(c): self.value(int(c)) for c in self.nonzero_cells()}

    def is_zero(self) -> bool:
        return len(self.nonzero_cells()) == 0

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        if self.dim != other.dim:
            return False
        f, g = self._common(other)
        s = max(f.scale, g.scale)
        fA, fB = f._at_scale(s)
        gA, gB = g._at_scale(s)
        return bool(np.array_equal(fA, gA) and np.array_equal(fB, gB))

    __hash__ = None

    def to_float(self) -> np.ndarray:
        """Binary64 values, shape ``(cells, dim)``."""
        A = _ints_to_float(self.A, self.scale)
        B = _ints_to_float(self.B, self.scale)
        return A + SQRT2_F * B

    def is_rational(self) -> bool:
        return not np.any(self.B != 0)

    def __repr__(self):
        return (f"StepFunction(N={self.resolution}, K={self.support_bound}, dim={self.dim}, "
                f"nonzero={len(self.nonzero_cells())}, space={self.space!r})")

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        cells = []
        for c, vec in self.cells().items():
            cells.append([c, [v.to_tuple() for v in vec]])
        return {
            "resolution": self.resolution,
            "support_bound": self.support_bound,
            "space": self.space,
            "dim": self.dim,
            "cells": cells,
        }

    @classmethod
    def from_json(cls, data: dict) -> "StepFunction":
        N = int(data["resolution"])
        K = int(data["support_bound"])
        cells = data.get("cells", [])
        dim = int(data.get("dim", len(cells[0][1]) if cells else 1))
        f = cls.zeros(N, K, dim, data.get("space", "scalar"))
        entries = []
        for index, coords in cells:
            if len(coords) != dim:
                raise ValueError(f"cell {index} has {len(coords)} coordinates, expected {dim}")
            entries.append((int(index), [ExactScalar.from_tuple(c) for c in coords]))
        s = max((e.ints[2] for _, vec in entries for e in vec), default=0)
        for index, vec in entries:
            if not 0 <= index < f.ncells:
                raise ValueError(f"cell {index} outside [0, 2**{K})")
            for i, e in enumerate(vec):
                a, b, t = e.ints
                f.A[index, i] = a << (s - t)
                f.B[index, i] = b << (s - t)
        f.scale = s
        f._reduce()
        return f


def _ints_to_float(arr: np.ndarray, scale: int) -> np.ndarray:
    if -1000 < scale < 1000:
        try:
            return np.ldexp(arr.astype(float), -scale)
        except OverflowError:
            pass
    out = np.empty(arr.shape, dtype=float)
    flat = arr.ravel()
    o = out.ravel()
    for i, x in enumerate(flat):
        x = int(x)
        if abs(x) < (1 << 1000):
            o[i] = math.ldexp(float(x), -scale)
        else:
            o[i] = float(DyadicRational(x, scale))
    return out


def _exact_sum(A: np.ndarray, B: np.ndarray, scale: int) -> list[ExactScalar]:
    sa = A.sum(axis=0) if A.shape[0] else [0] * A.shape[1]
    sb = B.sum(axis=0) if B.shape[0] else [0] * B.shape[1]
    return [ExactScalar.from_ints(int(a), int(b), scale) for a, b in zip(sa, sb)]


def integral(f: StepFunction, I: Optional[DyadicInterval] = None) -> list[ExactScalar]:
    """``int_I f`` coordinatewise (the whole line when ``I`` is None)."""
    if I is None:
        return _exact_sum(f.A, f.B, f.scale + f.resolution)
    if I.log_length < -f.resolution:
        vals = f.value(I.position >> (-f.resolution - I.log_length))
        return [v.half(-I.log_length) for v in vals]
    lo, hi = I.cell_range(f.resolution)
    lo, hi = min(lo, f.ncells), min(hi, f.ncells)
    return _exact_sum(f.A[lo:hi], f.B[lo:hi], f.scale + f.resolution)


def average(f: StepFunction, I: DyadicInterval) -> list[ExactScalar]:
    """``|I|**-1 int_I f`` exactly."""
    return [v.half(I.log_length) for v in integral(f, I)]


def conditional_expectation(f: StepFunction, scale: int) -> StepFunction:
    """Replace ``f`` by its averages over the dyadic intervals of length ``2**scale``."""
    if scale < -f.resolution:
        raise ResolutionError("conditional expectation below the resolution")
    g = f.extend(max(f.support_bound, scale))
    k = scale + g.resolution
    if k == 0:
        return g
    blocks = g.ncells >> k
    size = 1 << k
    A = g.A.reshape(blocks, size, g.dim).sum(axis=1)
    B = g.B.reshape(blocks, size, g.dim).sum(axis=1)
    return StepFunction(g.resolution, g.support_bound, np.repeat(A, size, axis=0),
                        np.repeat(B, size, axis=0), g.scale + k, g.space)


def _ancestor_sums(f: StepFunction) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Per level ``k`` (block of ``2**k`` cells): block sums of A and B, one row per cell."""
    out = []
    A = f.A[:, 0]
    B = f.B[:, 0]
    levels = f.support_bound + f.resolution
    for k in range(levels + 1):
        size = 1 << k
        sa = A.reshape(-1, size).sum(axis=1)
        sb = B.reshape(-1, size).sum(axis=1)
        out.append((k, np.repeat(sa, size), np.repeat(sb, size)))
    return out


def _check_nonnegative(f: StepFunction) -> None:
    if f.dim != 1:
        raise ValueError("the maximal function is defined for scalar step functions")
    if f.is_rational():
        if np.any(f.A < 0):
            raise ValueError("dyadic_maximal needs a nonnegative function")
        return
    for c in f.nonzero_cells():
        if f.value(int(c))[0].sign() < 0:
            raise ValueError(f"dyadic_maximal needs a nonnegative function (cell {c})")


def maximal_function(f: StepFunction) -> list[ExactScalar]:
    """Dyadic maximal function at every cell, exactly."""
    _check_nonnegative(f)
    levels = f.support_bound + f.resolution
    if f.is_rational():
        # compare sum_k / 2**k at the common denominator 2**levels
        best = np.zeros(f.ncells, dtype=object)
        for k, sa, _ in _ancestor_sums(f):
            cand = sa * (1 << (levels - k))
            best = np.where(cand > best, cand, best)
        return [ExactScalar.from_ints(int(b), 0, f.scale + levels) for b in best]
    best = [ZERO] * f.ncells
    for k, sa, sb in _ancestor_sums(f):
        for c in range(f.ncells):
            cand = ExactScalar.from_ints(int(sa[c]), int(sb[c]), f.scale + k)
            if cand > best[c]:
                best[c] = cand
    return best


def dyadic_maximal(f: StepFunction, x_cell: int) -> ExactScalar:
    """``sup`` of ``<f>_I`` over the dyadic ``I`` containing cell ``x_cell``."""
    _check_nonnegative(f)
    if not 0 <= x_cell < f.ncells:
        raise ValueError("cell outside the support bound")
    best = ZERO
    for k in range(f.support_bound + f.resolution + 1):
        I = DyadicInterval(x_cell >> k, k - f.resolution)
        val = average(f, I)[0]
        if val > best:
            best = val
    return best


def _vector_norms(values: np.ndarray, space) -> np.ndarray:
    if space is not None:
        return space.vector_norms(values)
    if values.shape[-1] == 1:
        return np.abs(values[..., 0])
    return np.linalg.norm(values, axis=-1)


def lp_norm(f: StepFunction, p: float, space=None) -> float:
    """``(sum_cells 2**-N |f|_X**p)**(1/p)``; ``p = inf`` gives the max."""
    norms = _vector_norms(f.to_float(), space)
    if math.isinf(p):
        return float(norms.max(initial=0.0))
    if p < 1:
        raise ValueError("L^p norms need p >= 1")
    return float((np.sum(norms ** p) * 2.0 ** -f.resolution) ** (1.0 / p))


def l2_squared_exact(f: StepFunction) -> ExactScalar:
    """``int |f|_2**2`` exactly, Euclidean norm on the coordinates."""
    A, B = f.A, f.B
    sa = int((A * A + 2 * B * B).sum())
    sb = int((2 * A * B).sum())
    return ExactScalar.from_ints(sa, sb, 2 * f.scale + f.resolution)


def bmo_norm(f: StepFunction, p: float, space=None) -> float:
    """Dyadic ``BMO_p`` norm over intervals inside ``[0, 2**K)``."""
    if p < 1:
        raise ValueError("BMO_p needs p >= 1")
    F = f.to_float()
    ncells, dim = F.shape
    levels = f.support_bound + f.resolution
    best = 0.0
    for k in range(1, levels + 1):
        size = 1 << k
        blocks = F.reshape(ncells // size, size, dim)
        means = blocks.mean(axis=1, keepdims=True)
        dev = _vector_norms(blocks - means, space)
        if math.isinf(p):
            osc = dev.max(axis=1)
        else:
            osc = (dev ** p).mean(axis=1) ** (1.0 / p)
        best = max(best, float(osc.max(initial=0.0)))
    return best
