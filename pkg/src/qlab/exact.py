"""Exact arithmetic in the ring generated by 1/2 and sqrt(2).

Two scalar types live here:

* :class:`DyadicRational` -- ``numerator / 2**scale`` with an arbitrary
  precision numerator. Canonical form has an odd numerator (or ``0/2**0``).
* :class:`ExactScalar` -- ``a + b*sqrt(2)`` with dyadic rational ``a`` and ``b``.

Every wave-packet coefficient, average and trilinear-form value in the package
is an :class:`ExactScalar`; floats only appear once a non-integer power of a
norm is taken.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Integral
from typing import Union

__all__ = [
    "DyadicRational",
    "ExactScalar",
    "SQRT2",
    "ZERO",
    "ONE",
    "inv_sqrt_pow2",
    "as_exact",
]


def _trailing_zeros(n: int) -> int:
    return (n & -n).bit_length() - 1


class DyadicRational:
    """The number ``numerator / 2**scale``; ``scale`` may be negative."""

    __slots__ = ("numerator", "scale")

    def __init__(self, numerator: int = 0, scale: int = 0):
        numerator = int(numerator)
        scale = int(scale)
        if numerator == 0:
            scale = 0
        else:
            tz = _trailing_zeros(numerator)
            if tz:
                numerator >>= tz
                scale -= tz
        self.numerator = numerator
        self.scale = scale

    @classmethod
    def from_fraction(cls, value: Union[Fraction, int]) -> "DyadicRational":
        value = Fraction(value)
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return cls(value.numerator, den.bit_length() - 1)

    @classmethod
    def coerce(cls, value) -> "DyadicRational":
        if isinstance(value, DyadicRational):
            return value
        if isinstance(value, Integral):
            return cls(int(value), 0)
        if isinstance(value, Fraction):
            return cls.from_fraction(value)
        if isinstance(value, float):
            return cls.from_fraction(Fraction(value))
        raise TypeError(f"cannot interpret {value!r} as a dyadic rational")

    def _aligned(self, other: "DyadicRational") -> tuple[int, int, int]:
        s = max(self.scale, other.scale)
        return self.numerator << (s - self.scale), other.numerator << (s - other.scale), s

    def __add__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        x, y, s = self._aligned(other)
        return DyadicRational(x + y, s)

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.scale)

    def __sub__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        return DyadicRational(self.numerator * other.numerator, self.scale + other.scale)

    __rmul__ = __mul__

    def half(self, times: int = 1) -> "DyadicRational":
        return DyadicRational(self.numerator, self.scale + times)

    def __abs__(self):
        return DyadicRational(abs(self.numerator), self.scale)

    def sign(self) -> int:
        return (self.numerator > 0) - (self.numerator < 0)

    def _cmp(self, other) -> int:
        other = DyadicRational.coerce(other)
        x, y, _ = self._aligned(other)
        return (x > y) - (x < y)

    def __eq__(self, other):
        try:
            other = DyadicRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.numerator == other.numerator and self.scale == other.scale

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __bool__(self):
        return self.numerator != 0

    def to_fraction(self) -> Fraction:
        if self.scale >= 0:
            return Fraction(self.numerator, 1 << self.scale)
        return Fraction(self.numerator << -self.scale)

    def __float__(self):
        return math.ldexp(float(self.numerator), -self.scale) if abs(self.numerator) < 2**1000 \
            else float(self.to_fraction())

    def __repr__(self):
        return f"DyadicRational({self.numerator}, {self.scale})"

    def __str__(self):
        return str(self.to_fraction())


class ExactScalar:
    """The real number ``a + b*sqrt(2)`` with dyadic rational ``a``, ``b``.

    Stored as three integers ``(A, B, s)`` meaning ``(A + B*sqrt(2)) / 2**s``,
    reduced so that ``A`` and ``B`` are not both even.
    """

    __slots__ = ("_A", "_B", "_s")

    def __init__(self, a=0, b=0):
        a = DyadicRational.coerce(a)
        b = DyadicRational.coerce(b)
        s = max(a.scale, b.scale)
        self._set(a.numerator << (s - a.scale), b.numerator << (s - b.scale), s)

    def _set(self, A: int, B: int, s: int) -> None:
        if A == 0 and B == 0:
            s = 0
        else:
            # the lowest set bit of A | B is the common power of two
            tz = _trailing_zeros(A | B)
            if tz:
                A >>= tz
                B >>= tz
                s -= tz
        self._A, self._B, self._s = A, B, s

    @classmethod
    def from_ints(cls, A: int, B: int, s: int) -> "ExactScalar":
        obj = cls.__new__(cls)
        obj._set(int(A), int(B), int(s))
        return obj

    @property
    def a(self) -> DyadicRational:
        return DyadicRational(self._A, self._s)

    @property
    def b(self) -> DyadicRational:
        return DyadicRational(self._B, self._s)

    @property
    def ints(self) -> tuple[int, int, int]:
        return self._A, self._B, self._s

    @classmethod
    def coerce(cls, value) -> "ExactScalar":
        if isinstance(value, ExactScalar):
            return value
        return cls(DyadicRational.coerce(value), 0)

    def _aligned(self, other: "ExactScalar"):
        s = max(self._s, other._s)
        return (self._A << (s - self._s), self._B << (s - self._s),
                other._A << (s - other._s), other._B << (s - other._s), s)

    def __add__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        A1, B1, A2, B2, s = self._aligned(other)
        return ExactScalar.from_ints(A1 + A2, B1 + B2, s)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar.from_ints(-self._A, -self._B, self._s)

    def __sub__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        A1, B1, s1 = self._A, self._B, self._s
        A2, B2, s2 = other._A, other._B, other._s
        return ExactScalar.from_ints(A1 * A2 + 2 * B1 * B2, A1 * B2 + B1 * A2, s1 + s2)

    __rmul__ = __mul__

    def times_sqrt2(self) -> "ExactScalar":
        return ExactScalar.from_ints(2 * self._B, self._A, self._s)

    def half(self, times: int = 1) -> "ExactScalar":
        return ExactScalar.from_ints(self._A, self._B, self._s + times)

    def conjugate(self) -> "ExactScalar":
        """Galois conjugate ``a - b*sqrt(2)``."""
        return ExactScalar.from_ints(self._A, -self._B, self._s)

    def norm(self) -> DyadicRational:
        """Field norm ``a**2 - 2 b**2`` (nonzero unless the scalar is zero)."""
        return DyadicRational(self._A * self._A - 2 * self._B * self._B, 2 * self._s)

    def __truediv__(self, other):
        other = ExactScalar.coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by exact zero")
        n = other.norm()
        if abs(n.numerator) != 1:
            raise ValueError("quotient leaves the dyadic ring")
        # 1/x = conj(x) / N(x) and N(x) = +-2**k
        inv = other.conjugate() * ExactScalar(DyadicRational(n.numerator, -n.scale))
        return self * inv

    def sign(self) -> int:
        A, B = self._A, self._B
        if B == 0:
            return (A > 0) - (A < 0)
        if A == 0:
            return (B > 0) - (B < 0)
        if (A > 0) == (B > 0):
            return 1 if A > 0 else -1
        d = A * A - 2 * B * B  # never zero since sqrt(2) is irrational
        return (1 if d > 0 else -1) * (1 if A > 0 else -1)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def is_zero(self) -> bool:
        return self._A == 0 and self._B == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        try:
            other = ExactScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self._A == other._A and self._B == other._B and self._s == other._s

    def __hash__(self):
        return hash((self._A, self._B, self._s))

    def __lt__(self, other):
        return (self - ExactScalar.coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - ExactScalar.coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - ExactScalar.coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - ExactScalar.coerce(other)).sign() >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    def to_tuple(self) -> list[str]:
        """JSON form ``[a_num, a_scale, b_num, b_scale]`` as decimal strings."""
        a, b = self.a, self.b
        return [str(a.numerator), str(a.scale), str(b.numerator), str(b.scale)]

    @classmethod
    def from_tuple(cls, item) -> "ExactScalar":
        an, asc, bn, bsc = (int(x) for x in item)
        return cls(DyadicRational(an, asc), DyadicRational(bn, bsc))

    def __repr__(self):
        if self._B == 0:
            return f"ExactScalar({self.a})"
        return f"ExactScalar({self.a} + {self.b}*sqrt2)"

    def __str__(self):
        if self._B == 0:
            return str(self.a)
        return f"{self.a} + {self.b}*sqrt2"


ZERO = ExactScalar(0)
ONE = ExactScalar(1)
SQRT2 = ExactScalar(0, 1)


def inv_sqrt_pow2(j: int) -> ExactScalar:
    """``2**(-j/2)`` exactly, i.e. ``|I|**-0.5`` for an interval of length ``2**j``."""
    if j % 2 == 0:
        return ExactScalar(DyadicRational(1, j // 2))
    # 2**(-j/2) = sqrt(2) * 2**(-(j+1)/2)
    return ExactScalar(0, DyadicRational(1, (j + 1) // 2))


def as_exact(value) -> ExactScalar:
    return ExactScalar.coerce(value)
