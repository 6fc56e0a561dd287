"""Rademacher and Walsh functions, wave packets, and exact pairings.

Walsh functions use the Paley ordering: ``w_n = prod_i r_i**n_i`` where
``r_i(x)`` is ``+1`` or ``-1`` according to the parity of ``floor(2**(i+1) x)``.
On the ``2**M`` cells of ``[0, 1)`` this gives

    w_n(cell c) = (-1) ** popcount(n & bitreverse_M(c)),

which is how everything below is evaluated. No trigonometric functions are
ever involved.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .dyadic import DyadicInterval, ResolutionError, StepFunction, _obj_zeros
from .exact import DyadicRational, ExactScalar, inv_sqrt_pow2

__all__ = [
    "rademacher_eval",
    "walsh_eval",
    "walsh_signs",
    "wave_packet",
    "packet_signs",
    "min_resolution",
    "inner_product",
    "pair",
    "walsh_transform",
    "fwht",
    "walsh_coefficients_float",
    "FloatPacketField",
    "ExactPacketField",
    "packet_sum",
]

L2 = "L2"
LINF = "Linf"


def _as_fraction(x) -> Fraction:
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    if isinstance(x, ExactScalar):
        if x.b:
            raise ValueError("Walsh functions are evaluated at rational points")
        return x.a.to_fraction()
    return Fraction(x)


def rademacher_eval(i: int, x) -> int:
    """``r_i(x)`` on half-open cells: ``+1`` iff ``floor(2**(i+1) x)`` is even."""
    if i < 0:
        raise ValueError("Rademacher index must be nonnegative")
    x = _as_fraction(x)
    if x < 0:
        raise ValueError("Walsh functions live on the half-line")
    return 1 if math.floor(x * (1 << (i + 1))) % 2 == 0 else -1


def walsh_eval(n: int, x) -> int:
    if n < 0:
        raise ValueError("Walsh index must be nonnegative")
    x = _as_fraction(x)
    if x < 0:
        raise ValueError("Walsh functions live on the half-line")
    sign = 1
    i = 0
    while n >> i:
        if (n >> i) & 1:
            sign *= rademacher_eval(i, x)
        i += 1
    return sign


def _bitreverse(values: np.ndarray, bits: int) -> np.ndarray:
    out = np.zeros_like(values)
    for b in range(bits):
        out |= ((values >> b) & 1) << (bits - 1 - b)
    return out


def _parity(values: np.ndarray) -> np.ndarray:
    values = values.copy()
    out = np.zeros_like(values)
    while np.any(values):
        out ^= values & 1
        values >>= 1
    return out


@lru_cache(maxsize=4096)
def _signs_cached(n: int, bits: int) -> np.ndarray:
    cells = np.arange(1 << bits, dtype=np.int64)
    par = _parity(_bitreverse(cells, bits) & n)
    out = (1 - 2 * par).astype(np.int8)
    out.setflags(write=False)
    return out


def walsh_signs(n: int, bits: int) -> np.ndarray:
    """Values of ``w_n`` on the ``2**bits`` equal cells of ``[0, 1)``."""
    if n >= (1 << bits):
        raise ResolutionError(f"w_{n} is not constant on cells of length 2**-{bits}")
    return _signs_cached(int(n), int(bits))


def min_resolution(interval: DyadicInterval, freq_index: int) -> int:
    """Coarsest ``N`` at which the packet of ``(interval, freq_index)`` is a step function."""
    return freq_index.bit_length() - interval.log_length


def _interval_and_index(tile) -> tuple[DyadicInterval, int]:
    if isinstance(tile, tuple):
        return tile
    return tile.time, tile.freq_index


def packet_signs(tile, resolution: int) -> tuple[int, np.ndarray]:
    """``(first cell, +-1 signs over I)`` for the L-infinity packet of ``tile``."""
    I, n = _interval_and_index(tile)
    bits = I.log_length + resolution
    if bits < 0 or n >= (1 << bits):
        raise ResolutionError(f"packet ({I}, {n}) is not representable at resolution {resolution}")
    lo, _ = I.cell_range(resolution)
    return lo, walsh_signs(n, bits)


def wave_packet(tile, normalization: str = L2, resolution: Optional[int] = None,
                support_bound: Optional[int] = None) -> StepFunction:
    """``w_P`` (``L2``) or ``w_P^inf`` (``Linf``) as an exact step function.

    ``tile`` is anything with ``time`` and ``freq_index`` attributes, or an
    ``(interval, freq_index)`` pair. Resolution and support bound default to
    the smallest grid carrying the packet.
    """
    I, n = _interval_and_index(tile)
    need = max(min_resolution(I, n), -I.log_length)
    if resolution is None:
        resolution = need
    elif resolution < need:
        raise ResolutionError(
            f"packet ({I}, {n}) needs resolution {need}, got {resolution}")
    top = I.log_length + I.position.bit_length()
    if support_bound is None:
        support_bound = max(top, -resolution)
    elif support_bound < top:
        raise ValueError(f"{I} does not fit inside [0, 2**{support_bound})")
    lo, signs = packet_signs((I, n), resolution)
    ncells = 1 << (support_bound + resolution)
    A = _obj_zeros((ncells, 1))
    B = _obj_zeros((ncells, 1))
    col = signs.astype(object)
    if normalization == LINF:
        A[lo:lo + len(col), 0] = col
        return StepFunction(resolution, support_bound, A, B, 0)
    if normalization != L2:
        raise ValueError(f"unknown normalization {normalization!r}")
    a, b, s = inv_sqrt_pow2(I.log_length).ints
    if b:
        B[lo:lo + len(col), 0] = col * b
    else:
        A[lo:lo + len(col), 0] = col * a
    return StepFunction(resolution, support_bound, A, B, s)


def inner_product(f: StepFunction, g: StepFunction) -> list[ExactScalar]:
    """``int f g`` per coordinate of ``f``; ``g`` must be scalar valued."""
    if g.dim != 1:
        raise ValueError("inner_product pairs against a scalar function")
    f, g = f._common(g)
    gA = g.A[:, 0:1]
    gB = g.B[:, 0:1]
    A = (f.A * gA + 2 * f.B * gB).sum(axis=0)
    B = (f.A * gB + f.B * gA).sum(axis=0)
    s = f.scale + g.scale + f.resolution
    return [ExactScalar.from_ints(int(a), int(b), s) for a, b in zip(A, B)]


def pair(f: StepFunction, g: StepFunction) -> ExactScalar:
    """Full contraction ``int sum_i f_i g_i`` of two functions of equal dimension."""
    if f.dim != g.dim:
        raise ValueError(f"cannot pair dimensions {f.dim} and {g.dim}")
    f, g = f._common(g)
    A = int((f.A * g.A + 2 * f.B * g.B).sum())
    B = int((f.A * g.B + f.B * g.A).sum())
    return ExactScalar.from_ints(A, B, f.scale + g.scale + f.resolution)


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0 in natural order.

    Works on any dtype with ``+`` and ``-``; with Python ints it is exact.
    """
    h = values.copy()
    n = h.shape[0]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    step = 1
    while step < n:
        h = h.reshape(n // (2 * step), 2, step, *h.shape[1:])
        top = h[:, 0] + h[:, 1]
        bottom = h[:, 0] - h[:, 1]
        h = np.stack([top, bottom], axis=1).reshape(n, *values.shape[1:])
        step *= 2
    return h


def _paley_order(bits: int) -> np.ndarray:
    return _bitreverse(np.arange(1 << bits, dtype=np.int64), bits)


def walsh_coefficient_ints(f: StepFunction, I: DyadicInterval
                           ) -> tuple[np.ndarray, np.ndarray, int]:
    """``<f, w_{I,n}>`` for all ``n < |I| 2**N`` as integer arrays ``(A, B, s)``."""
    N = max(f.resolution, -I.log_length)
    f = f.refine(N)
    lo, hi = I.cell_range(N)
    if hi > f.ncells:
        f = f.extend(I.log_length + I.position.bit_length())
    bits = I.log_length + N
    order = _paley_order(bits)
    HA = fwht(f.A[lo:hi])[order]
    HB = fwht(f.B[lo:hi])[order]
    a, b, s = inv_sqrt_pow2(I.log_length).ints
    # (HA + HB sqrt2)(a + b sqrt2)
    A = HA * a + 2 * HB * b
    B = HA * b + HB * a
    return A, B, f.scale + s + N


def walsh_transform(f: StepFunction, I: DyadicInterval) -> np.ndarray:
    """All pairings ``<f, w_{I,n}>``, shape ``(|I| 2**N, dim)`` of :class:`ExactScalar`.

    Only the part of ``f`` on ``I`` contributes.
    """
    A, B, s = walsh_coefficient_ints(f, I)
    out = np.empty(A.shape, dtype=object)
    for idx in np.ndindex(A.shape):
        out[idx] = ExactScalar.from_ints(int(A[idx]), int(B[idx]), s)
    return out


def walsh_coefficients_float(f_values: np.ndarray, resolution: int, I: DyadicInterval
                             ) -> np.ndarray:
    """Binary64 version of :func:`walsh_transform` from per-cell float values."""
    lo, hi = I.cell_range(resolution)
    bits = I.log_length + resolution
    H = fwht(np.asarray(f_values[lo:hi], dtype=float))[_paley_order(bits)]
    return H * (2.0 ** (-I.log_length / 2.0)) * 2.0 ** -resolution


class FloatPacketField:
    """Binary64 pairings of one fixed step function with many wave packets.

    The full transform over each time interval is computed once and cached,
    so pairing with every tile over that interval costs a lookup.
    """

    def __init__(self, f: StepFunction):
        self.resolution = f.resolution
        self.support_bound = f.support_bound
        self.values = f.to_float()
        self.dim = self.values.shape[1]
        self._cache: dict[DyadicInterval, np.ndarray] = {}

    def _inside(self, I: DyadicInterval) -> bool:
        return I.position < (1 << max(self.support_bound - I.log_length, 0)) \
            and I.log_length <= self.support_bound

    def transform(self, I: DyadicInterval) -> np.ndarray:
        out = self._cache.get(I)
        if out is None:
            out = walsh_coefficients_float(self.values, self.resolution, I)
            self._cache[I] = out
        return out

    def coefficient(self, tile) -> np.ndarray:
        I, n = _interval_and_index(tile)
        if not self._inside(I):
            return np.zeros(self.dim)
        bits = I.log_length + self.resolution
        if bits < 0:
            if n:
                return np.zeros(self.dim)
            cell = I.position >> -bits
            return self.values[cell] * 2.0 ** (I.log_length / 2.0)
        if n >= (1 << bits):
            return np.zeros(self.dim)
        return self.transform(I)[n]

    def add_packet(self, out: np.ndarray, tile, coef: np.ndarray) -> None:
        """``out += coef * w_tile`` on the field's grid (tiles finer than cells rejected)."""
        I, n = _interval_and_index(tile)
        bits = I.log_length + self.resolution
        if bits < 0:
            raise ResolutionError("tile finer than the grid")
        if n >= (1 << bits):
            return
        lo, hi = I.cell_range(self.resolution)
        signs = walsh_signs(n, bits).astype(float) * 2.0 ** (-I.log_length / 2.0)
        out[lo:hi] += signs[:, None] * coef[None, :]

    def projection(self, tiles) -> np.ndarray:
        """``sum_t <f, w_t> w_t`` as a float array of shape ``(cells, dim)``."""
        out = np.zeros_like(self.values)
        for t in tiles:
            self.add_packet(out, t, self.coefficient(t))
        return out


class ExactPacketField:
    """Exact pairings of one step function with many wave packets (cached per interval)."""

    def __init__(self, f: StepFunction):
        self.f = f
        self.resolution = f.resolution
        self.support_bound = f.support_bound
        self.dim = f.dim
        self._cache: dict[DyadicInterval, tuple[np.ndarray, np.ndarray, int]] = {}

    def _inside(self, I: DyadicInterval) -> bool:
        return I.log_length <= self.support_bound and \
            I.position < (1 << (self.support_bound - I.log_length))

    def transform(self, I: DyadicInterval) -> tuple[np.ndarray, np.ndarray, int]:
        out = self._cache.get(I)
        if out is None:
            out = walsh_coefficient_ints(self.f, I)
            self._cache[I] = out
        return out

    def coefficient(self, tile) -> list[ExactScalar]:
        I, n = _interval_and_index(tile)
        if not self._inside(I):
            return [ExactScalar(0)] * self.dim
        bits = I.log_length + self.resolution
        if bits < 0:
            if n:
                return [ExactScalar(0)] * self.dim
            vals = self.f.value(I.position >> -bits)
            return [v * inv_sqrt_pow2(-I.log_length) for v in vals]
        if n >= (1 << bits):
            return [ExactScalar(0)] * self.dim
        A, B, s = self.transform(I)
        return [ExactScalar.from_ints(int(A[n, i]), int(B[n, i]), s) for i in range(self.dim)]

    def is_zero(self, tile) -> bool:
        return all(c.is_zero() for c in self.coefficient(tile))


def packet_sum(terms, resolution: int, support_bound: int, dim: int,
               normalization: str = L2, space: str = "scalar") -> StepFunction:
    """``sum coef * w_tile`` exactly; ``terms`` yields ``(tile, coefficient vector)``."""
    prepared = []
    top_scale = 0
    for tile, coef in terms:
        I, n = _interval_and_index(tile)
        if len(coef) != dim:
            raise ValueError("coefficient dimension mismatch")
        norm = inv_sqrt_pow2(I.log_length) if normalization == L2 else ExactScalar(1)
        ints = [(ExactScalar.coerce(c) * norm).ints for c in coef]
        if all(a == 0 and b == 0 for a, b, _ in ints):
            continue
        lo, signs = packet_signs((I, n), resolution)
        prepared.append((lo, signs, ints))
        top_scale = max([top_scale] + [s for _, _, s in ints])
    ncells = 1 << (support_bound + resolution)
    A = _obj_zeros((ncells, dim))
    B = _obj_zeros((ncells, dim))
    for lo, signs, ints in prepared:
        col = signs.astype(object)
        hi = lo + len(col)
        for i, (a, b, s) in enumerate(ints):
            k = top_scale - s
            if a:
                A[lo:hi, i] += col * (a << k)
            if b:
                B[lo:hi, i] += col * (b << k)
    return StepFunction(resolution, support_bound, A, B, top_scale, space)
