import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlab.corpus import Grid, random_function, random_good_family, rng_for
from qlab.dyadic import DyadicInterval
from qlab.exact import DyadicRational, ExactScalar
from qlab.phase_plane import Quartile, Tree
from qlab.spaces import (GoodFamily, NormedSpace, TrilinearForm, conjugate_exponent,
                         induced_bilinear, quartile_type_ratio, trilinear_eval)
from qlab.walsh import wave_packet

from conftest import dyadics

vectors = st.lists(dyadics, min_size=3, max_size=3)


def test_duality_examples():
    Pi = TrilinearForm.duality(3)
    e1 = [1, 0, 0]
    assert trilinear_eval(Pi, e1, e1, [1]) == ExactScalar(1)
    assert trilinear_eval(Pi, e1, [0, 1, 0], [1]) == ExactScalar(0)
    assert induced_bilinear(Pi, 3, e1, e1) == [ExactScalar(1)]
    assert all(c.is_zero() for c in induced_bilinear(Pi, 1, [0, 0, 0], [1]))


@given(vectors, vectors, st.sampled_from([1.5, 2.0, 3.0, 7.0]))
def test_holder(x, y, p):
    Pi = TrilinearForm.duality(3, p)
    val = abs(float(trilinear_eval(Pi, x, y, [1])))
    X, Y = Pi.spaces[0], Pi.spaces[1]
    assert val <= X.norm(x) * Y.norm(y) * (1 + 1e-9) + 1e-300


@given(vectors, vectors, dyadics)
def test_induced_pairing_consistency(x, y, z):
    Pi = TrilinearForm.duality(3)
    full = trilinear_eval(Pi, x, y, [z])
    for slot, (a, b, c) in ((1, (y, [z], x)), (2, (x, [z], y)), (3, (x, y, [z]))):
        lin = induced_bilinear(Pi, slot, a, b)
        acc = ExactScalar(0)
        for li, ci in zip(lin, c):
            acc = acc + li * ExactScalar.coerce(ci)
        assert acc == full


def test_conjugates():
    assert conjugate_exponent(2) == 2
    assert conjugate_exponent(1) == math.inf
    assert NormedSpace(3, 4).dual().p == pytest.approx(4 / 3)


def test_tensor_roundtrip():
    t = np.zeros((2, 1, 2), dtype=object)
    t[0, 0, 1] = DyadicRational(3, 2)
    t[1, 0, 0] = -1
    Pi = TrilinearForm.from_tensor(t)
    assert TrilinearForm.from_json(Pi.to_json()) == Pi
    assert trilinear_eval(Pi, [1, 1], [2], [1, 1]) == ExactScalar(DyadicRational(-1, 1))


def test_quartile_type_equality_case():
    P = Quartile(DyadicInterval(1, -1), 2)
    fam = GoodFamily((Tree(P, frozenset([P]), 0),), 0, 1)
    f = wave_packet(P.tile(1), resolution=5, support_bound=1)
    assert quartile_type_ratio(NormedSpace(1), 2.0, fam, f) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 10**6), st.integers(1, 8))
def test_hilbert_ratio_at_most_one(seed, d):
    rng = rng_for(seed)
    grid = Grid(1, 5)
    v, u = (int(x) for x in rng.choice(4, 2, replace=False))
    trees = random_good_family(rng, grid, v, u)
    f = random_function(rng, grid, d)
    r = quartile_type_ratio(NormedSpace(d, 2.0), 2.0, GoodFamily(tuple(trees), v, u), f)
    assert r <= 1 + 1e-9
