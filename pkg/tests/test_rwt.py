import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlab.config import ExperimentConfig
from qlab.corpus import Grid, random_dyadic_set, rng_for
from qlab.experiments import rwt_instance
from qlab.rwt import (DyadicSet, ExponentTriple, RegionError, classify_estimate,
                      duality_example_consistency,
                      duality_example_region, exceptional_set, hexagon, rwt_above,
                      rwt_below_diagnostics)

THIRDS = ExponentTriple((1 / 3, 1 / 3, 1 / 3))


def unit_set(N=2):
    return DyadicSet(frozenset(range(1 << N)), N, 0)


def test_exceptional_empty_for_equal_sets():
    F, tau = exceptional_set(unit_set(), unit_set(), unit_set())
    assert F.measure == 0 and tau == 0


def test_tau_is_largest():
    small = DyadicSet(frozenset([0]), 2, 0)
    F, tau = exceptional_set(small, unit_set(), small)
    assert tau == 1


@given(st.integers(0, 10**6))
def test_exceptional_measure_bound(seed):
    rng = rng_for(seed)
    grid = Grid(2, 4)
    E = [DyadicSet(random_dyadic_set(rng, grid), grid.N, grid.K) for _ in range(3)]
    F, tau = exceptional_set(*E)
    assert F.measure <= Fraction(3, 8) * E[tau].measure


def test_exponent_triple_sum():
    with pytest.raises(ValueError):
        ExponentTriple((0.5, 0.5, 0.5))


def test_rwt_zero_function():
    cfg = ExperimentConfig(K=1, N=4, max_quartiles=30)
    C, Pi, E, fs = rwt_instance(cfg, 0)
    zero = fs[0].scaled(0)
    rep = rwt_above(C, Pi, *E, THIRDS, 2, 2, 2, zero, fs[1], fs[2])
    assert rep.ratio == 0


@given(st.integers(0, 400))
def test_rwt_dropped_terms_vanish(index):
    cfg = ExperimentConfig(K=2, N=4, max_quartiles=40)
    C, Pi, E, fs = rwt_instance(cfg, index)
    rep = rwt_above(C, Pi, *E, THIRDS, 2, 2, 2, *fs)
    assert rep.dropped_vanish
    assert math.isfinite(rep.ratio)
    assert rep.exceptional_measure <= rep.measures[rep.tau] / 2


def test_rwt_rejects_alpha_outside_range():
    cfg = ExperimentConfig(K=1, N=4, max_quartiles=20)
    C, Pi, E, fs = rwt_instance(cfg, 0)
    with pytest.raises(ValueError):
        rwt_above(C, Pi, *E, ExponentTriple((0.6, 0.2, 0.2)), 2, 2, 2, *fs)


def test_below_equal_sets():
    rep = rwt_below_diagnostics(1, 1, 1, 2.5, 2.5, 2.5, THIRDS)
    assert rep["d"] == [1.0, 1.0, 1.0]
    assert rep["parts"]["II"] == 0 and rep["parts"]["III"] == 0
    assert all(rep["checks"].values())


def test_below_example_values():
    rep = rwt_below_diagnostics(1, 0.25, 0.0625, 2, 2, 2, THIRDS)
    assert rep["d"] == [1.0, 4.0, 16.0]
    assert rep["log_case"]
    assert rep["total"] == pytest.approx(rep["brute_total"], rel=1e-12)
    assert all(rep["checks"].values())
    assert rep["eps_constant"] == pytest.approx(1 / (math.e * 0.01 * math.log(2)))


@given(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(2.0, 3.0), st.floats(2.0, 3.0))
def test_below_split_matches_brute(m2, m3, q2, q3):
    rep = rwt_below_diagnostics(1, m2, m3, 2.2, q2, q3, THIRDS)
    assert rep["checks"]["split_matches_brute"]


def test_hexagon_q2_vertices():
    H = hexagon(2, 2, 2)
    assert H.rho == pytest.approx(0.5)
    assert H.vertices["A"].beta == pytest.approx((-0.5, 0.5, 1.0))
    assert H.vertices["C"].beta == pytest.approx((1.0, -0.5, 0.5))
    for b in H.vertices.values():
        assert sum(b.beta) == pytest.approx(1.0, abs=1e-12)
    assert H.contains((1 / 3, 1 / 3, 1 / 3))


@given(st.floats(2, 3.2), st.floats(2, 3.2), st.floats(2, 3.2))
def test_hexagon_line_residuals(q1, q2, q3):
    if 1 / q1 + 1 / q2 + 1 / q3 <= 1 + 1e-9:
        return
    H = hexagon(q1, q2, q3)
    for res in H.line_residuals().values():
        assert max(res) <= 1e-12


def test_hexagon_rejects_bad_types():
    with pytest.raises(RegionError):
        hexagon(1.5, 2, 2)
    with pytest.raises(RegionError):
        hexagon(3, 3, 3)


def test_classification():
    H = hexagon(2, 2, 2)
    strong = classify_estimate(H, (1 / 3, 1 / 3, 1 / 3))
    assert strong["kind"] == "strong" and strong["p"] == pytest.approx([3, 3, 3])
    bil = classify_estimate(H, (5 / 8, 5 / 8, -1 / 4))
    assert bil["kind"] == "bilinear" and bil["slot"] == 3
    assert bil["target"] == pytest.approx(0.8)
    assert classify_estimate(H, H.vertices["A"].beta)["kind"] == "outside"


def test_doubled_pair_term_changes_only_pair_bound():
    a, b = hexagon(2, 2.5, 3), hexagon(2, 2.5, 3, doubled_pair_term=True)
    assert a.vertices == b.vertices
    assert a.pair_bound(0, 1) != b.pair_bound(0, 1)


def test_duality_example_values():
    reg = duality_example_region(2.5)
    assert reg["r_interval"] == pytest.approx([0.8, 5.0])
    lo, hi = duality_example_region(3.999)["r_interval"]
    assert lo < hi and hi - lo < 0.01
    assert duality_example_region(3)["extra"]["threshold"] == pytest.approx(1 / 3)
    with pytest.raises(RegionError):
        duality_example_region(4)


@pytest.mark.parametrize("q", [2.5, 3.0, 3.5])
def test_duality_example_agrees_with_hexagon(q):
    rep = duality_example_consistency(q, samples=2000, seed=1)
    assert rep["agree"] == rep["samples"]
