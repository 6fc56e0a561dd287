import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlab.corpus import Grid, random_convex_collection, random_function, random_u_tree, rng_for
from qlab.dyadic import DyadicInterval, StepFunction, l2_squared_exact
from qlab.exact import ExactScalar
from qlab.operators import (HaarShiftSpec, bilinear_B, convergence_brute_force,
                            convergence_oracle, haar_shift, lambda_form, ledger_csv,
                            randomized_projection_moment, walsh_shift, walsh_shift_expanded)
from qlab.phase_plane import Quartile, Tree
from qlab.spaces import TrilinearForm
from qlab.walsh import ExactPacketField, pair, wave_packet

from conftest import intervals, step_functions

UNIT = DyadicInterval(0, 0)
SCALAR = TrilinearForm.scalar()


def all_intervals(I, min_log):
    out = []
    for j in range(min_log, I.log_length + 1):
        out.extend(I.descendants(j))
    return out


def test_haar_expansion_reproduces_mean_zero():
    f = random_function(rng_for(1), Grid(0, 3))
    f = f - StepFunction.indicator([UNIT], 3, 0).scaled(
        ExactPacketField(f).coefficient((UNIT, 0))[0])
    g = haar_shift(HaarShiftSpec("0", "0", all_intervals(UNIT, -2)), f)
    assert g == f


def test_single_interval_shift():
    f = random_function(rng_for(2), Grid(0, 3))
    I = DyadicInterval(0, 0)
    g = haar_shift(HaarShiftSpec("l", "0", [I]), f)
    c = ExactPacketField(f).coefficient((I, 1))[0]
    expect = wave_packet((I.left_child, 1), resolution=3, support_bound=0).scaled(c)
    assert g == expect


@given(step_functions(N=3, K=1), st.sampled_from("0lr"), st.sampled_from("0lr"))
def test_shift_l2_contraction(f, a, b):
    spec = HaarShiftSpec(a, b, all_intervals(DyadicInterval(0, 1), -1))
    g = haar_shift(spec, f)
    assert float(l2_squared_exact(g)) <= float(l2_squared_exact(f)) * (1 + 1e-9) + 1e-300


@given(step_functions(N=3, K=0), st.sampled_from([1, 2, 3]))
def test_walsh_shift_two_paths(f, m):
    J = all_intervals(UNIT, -1)
    assert walsh_shift(m, J, f) == walsh_shift_expanded(m, J, f)


def test_walsh_shift_m1_is_haar():
    f = random_function(rng_for(4), Grid(0, 3))
    J = [UNIT, DyadicInterval(1, -1)]
    assert walsh_shift(1, J, f) == haar_shift(HaarShiftSpec("0", "0", J), f)


def test_walsh_shift_m2_projection():
    w = wave_packet((UNIT, 2), resolution=3)
    assert walsh_shift(2, [UNIT], w) == w
    assert walsh_shift(2, [UNIT], wave_packet((UNIT, 3), resolution=3)).is_zero()


def test_lambda_examples():
    P = Quartile(UNIT, 0)
    fs = [wave_packet(P.tile(v), resolution=2) for v in (1, 2, 3)]
    assert lambda_form([], SCALAR, *fs) == ExactScalar(0)
    assert lambda_form([P], SCALAR, *fs) == ExactScalar(1)
    B3 = bilinear_B([P], SCALAR, 3, fs[0], fs[1])
    assert B3 == fs[2]
    assert bilinear_B([], SCALAR, 3, fs[0], fs[1]).is_zero()


@given(st.integers(0, 10**6), st.sampled_from(["scalar", "duality"]))
def test_lambda_duality_identities(seed, kind):
    rng = rng_for(seed)
    grid = Grid(1, 4)
    Pi = SCALAR if kind == "scalar" else TrilinearForm.duality(2)
    C = random_convex_collection(rng, grid, 40)
    f1, f2, f3 = (random_function(rng, grid, d) for d in Pi.dims)
    lam = lambda_form(C, Pi, f1, f2, f3)
    assert pair(f1, bilinear_B(C, Pi, 1, f2, f3)) == lam
    assert pair(f2, bilinear_B(C, Pi, 2, f1, f3)) == lam
    assert pair(bilinear_B(C, Pi, 3, f1, f2), f3) == lam


def test_ledger_sums_to_lambda():
    rng = rng_for(7)
    grid = Grid(1, 3)
    C = random_convex_collection(rng, grid, 20)
    fs = [random_function(rng, grid) for _ in range(3)]
    res = lambda_form(C, SCALAR, *fs, ledger=True)
    total = ExactScalar(0)
    for t in res.terms:
        total = total + t.value
    assert total == res.value
    assert ledger_csv(res.terms).count("\n") == len(res.terms) + 1


def test_convergence_unit():
    rep = convergence_oracle(UNIT, UNIT, UNIT)
    assert rep.bound == 1 and rep.enumerated_sum <= 1 and rep.ok


def test_convergence_nested():
    rep = convergence_oracle(DyadicInterval(0, -2), DyadicInterval(0, -1), UNIT)
    assert rep.absolute_sum <= DyadicInterval(0, -2).length


@given(intervals(K=1, N=3), intervals(K=1, N=3), intervals(K=1, N=3))
def test_convergence_matches_brute_force(a, b, c):
    rep = convergence_oracle(a, b, c)
    found, total = convergence_brute_force(a, b, c, rep.grid_bound)
    assert sorted(found) == sorted(rep.quartiles)
    assert total == rep.enumerated_sum
    assert rep.ok


def test_moment_singleton():
    P = Quartile(DyadicInterval(0, 0), 1)
    f = random_function(rng_for(5), Grid(0, 5))
    T = Tree(P, frozenset([P]), 0)
    rep = randomized_projection_moment(T, 2, f, 2.0)
    c = float(ExactPacketField(f).coefficient(P.tile(2))[0])
    assert rep.moment == pytest.approx(abs(c), rel=1e-12, abs=1e-15)


@given(st.integers(0, 10**6))
def test_moment_p2_kills_cross_terms(seed):
    rng = rng_for(seed)
    T = random_u_tree(rng, Grid(1, 5), 0, 10)
    f = random_function(rng, Grid(1, 5))
    rep = randomized_projection_moment(T, 1, f, 2.0)
    fld = ExactPacketField(f)
    expect = sum(float(fld.coefficient(P.tile(1))[0]) ** 2 for P in T.members)
    assert rep.moment ** 2 == pytest.approx(expect, rel=1e-9, abs=1e-12)
    mc = randomized_projection_moment(T, 1, f, 2.0, mode="monte_carlo", seed=seed, samples=256)
    assert np.isfinite(mc.ratio)
