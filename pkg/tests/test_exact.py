import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlab.exact import DyadicRational, ExactScalar, inv_sqrt_pow2

from conftest import dyadics, scalars

SQRT2 = math.sqrt(2)


def test_dyadic_normalizes_trailing_zeros():
    d = DyadicRational(12, 4)
    assert (d.numerator, d.scale) == (3, 2)
    assert d == Fraction(3, 4)


def test_non_dyadic_fraction_rejected():
    with pytest.raises(ValueError):
        DyadicRational.from_fraction(Fraction(1, 3))


def test_inv_sqrt_pow2_values():
    assert inv_sqrt_pow2(0) == ExactScalar(1)
    assert inv_sqrt_pow2(2) == ExactScalar(DyadicRational(1, 1))
    assert inv_sqrt_pow2(1) == ExactScalar(0, DyadicRational(1, 1))
    assert inv_sqrt_pow2(-1) == ExactScalar(0, 1)


def test_sqrt2_squared_is_two():
    r = ExactScalar(0, 1)
    assert r * r == ExactScalar(2)


def test_division_by_conjugate():
    x = ExactScalar(3, 1)
    y = ExactScalar(1, 1)
    assert (x / y) * y == x


@given(dyadics, dyadics)
def test_dyadic_matches_fraction(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)


@given(scalars, scalars, scalars)
def test_ring_axioms(x, y, z):
    assert (x + y) * z == x * z + y * z
    assert (x * y) * z == x * (y * z)
    assert x - x == ExactScalar(0)


@given(scalars, scalars)
def test_norm_multiplicative(x, y):
    assert (x * y).norm() == x.norm() * y.norm()


@given(scalars)
def test_sign_agrees_with_float(x):
    f = float(x.a) + float(x.b) * SQRT2
    if abs(f) > 1e-6 * (abs(float(x.a)) + abs(float(x.b)) + 1):
        assert x.sign() == (1 if f > 0 else -1)
    assert (x.sign() == 0) == x.is_zero()


@given(scalars)
def test_tuple_roundtrip(x):
    assert ExactScalar.from_tuple(x.to_tuple()) == x


@given(scalars, st.integers(0, 20))
def test_half_is_division_by_power(x, k):
    assert x.half(k) * ExactScalar(1 << k) == x
