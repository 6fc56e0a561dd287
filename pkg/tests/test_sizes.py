import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlab.corpus import (Grid, random_convex_collection, random_function, random_u_tree,
                         rng_for)
from qlab.dyadic import DyadicInterval, lp_norm
from qlab.phase_plane import Quartile, Tree, leq_v, quartile_universe, tree_from_top
from qlab.sizes import (EXHAUSTIVE, TreeSumEngine, delta_u, size, size_equivalence_report,
                        tree_sum, tree_sum_factorized)
from qlab.walsh import LINF, ExactPacketField, wave_packet

P0 = Quartile(DyadicInterval(1, -1), 3)


def test_tree_sum_examples():
    f = wave_packet(P0.tile(2), resolution=5, support_bound=1)
    assert tree_sum([], 2, f).is_zero()
    assert tree_sum([P0], 2, f) == f


@given(st.integers(0, 10**6), st.integers(0, 3), st.integers(1, 3))
def test_factorized_tree_sum(seed, u, v):
    rng = rng_for(seed)
    grid = Grid(1, 5)
    T = random_u_tree(rng, grid, u, 10)
    f = random_function(rng, grid)
    assert tree_sum_factorized(T, v, f) == tree_sum(T, v, f)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, 4.0])
@pytest.mark.parametrize("v", [1, 2, 3])
def test_singleton_size_is_one(v, p):
    f = wave_packet(P0.tile(v), LINF, 5, 1)
    assert size([P0], v, p, f).value == pytest.approx(1.0, rel=1e-12)
    assert size([P0], v, p, f, method=EXHAUSTIVE).value == pytest.approx(1.0, rel=1e-12)


def test_orthogonal_function_has_size_zero():
    f = wave_packet(P0.tile(0), resolution=5, support_bound=1)
    rep = size([P0], 1, 2.0, f)
    assert rep.value == 0 and rep.witness_tree is None


def parseval_oracle(C, v, f):
    fld = ExactPacketField(f)
    c2 = {P: float(fld.coefficient(P.tile(v))[0]) ** 2 for P in C}
    K = max([f.support_bound] + [P.time.log_length + P.time.position.bit_length() for P in C])
    best = 0.0
    for T in quartile_universe(K, f.resolution):
        for u in range(4):
            if u == v:
                continue
            s = sum(c2[P] for P in C if leq_v(P, T, u))
            best = max(best, s * 2.0 ** -T.time.log_length)
    return math.sqrt(best)


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_p2_size_parseval(seed, v):
    rng = rng_for(seed)
    grid = Grid(1, 4)
    C = random_convex_collection(rng, grid, 30)
    f = random_function(rng, grid)
    assert size(C, v, 2.0, f).value == pytest.approx(parseval_oracle(C, v, f), rel=1e-9, abs=1e-12)


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_p2_monotone_under_inclusion(seed, v):
    rng = rng_for(seed)
    grid = Grid(1, 4)
    C = sorted(random_convex_collection(rng, grid, 30))
    sub = [P for P in C if rng.random() < 0.5]
    f = random_function(rng, grid)
    assert size(sub, v, 2.0, f).value <= size(C, v, 2.0, f).value * (1 + 1e-12)


@given(st.integers(0, 10**6), st.sampled_from([1.5, 2.0, 4.0]))
def test_exhaustive_dominates_full_trees(seed, p):
    rng = rng_for(seed)
    grid = Grid(1, 4)
    C = sorted(random_convex_collection(rng, grid, 12, seeds=3))[:12]
    f = random_function(rng, grid)
    full = size(C, 1, p, f).value
    ex = size(C, 1, p, f, method=EXHAUSTIVE).value
    assert ex >= full * (1 - 1e-12)


def test_exhaustive_cap():
    C = list(itertools.islice(quartile_universe(1, 3), 13))
    f = random_function(rng_for(0), Grid(1, 3))
    with pytest.raises(ValueError):
        size(C, 1, 2.0, f, method=EXHAUSTIVE)


@given(st.integers(0, 10**6), st.sampled_from([1.0, 2.0, 3.0]))
def test_delta_examples(seed, q):
    rng = rng_for(seed)
    grid = Grid(1, 4)
    C = random_convex_collection(rng, grid, 40)
    f = random_function(rng, grid)
    rep = size(C, 2, q, f)
    if rep.witness_tree is None:
        return
    W = rep.witness_tree
    full = tree_from_top(C, W.top)
    assert delta_u(full, W.kind, 2, q, f) == pytest.approx(rep.value, rel=1e-9)
    for u in (0, 1, 3):
        assert delta_u(full, u, 2, q, f) <= rep.value * (1 + 1e-9)


def test_delta_empty_part():
    T = Tree(P0, frozenset(), None)
    f = random_function(rng_for(1), Grid(1, 5))
    assert delta_u(T, 0, 1, 2.0, f) == 0.0


@given(st.integers(0, 10**6))
def test_size_equivalence_scaling(seed):
    rng = rng_for(seed)
    grid = Grid(1, 4)
    C = random_convex_collection(rng, grid, 30)
    f = random_function(rng, grid)
    a = size_equivalence_report(C, 1, f, [1.0, 2.0, 4.0])
    b = size_equivalence_report(C, 1, f.scaled(8), [1.0, 2.0, 4.0])
    for k, r in a["ratios"].items():
        if math.isfinite(r):
            assert b["ratios"][k] == pytest.approx(r, rel=1e-9)


@given(st.integers(0, 10**6))
def test_single_quartile_sizes_agree(seed):
    rng = rng_for(seed)
    grid = Grid(1, 5)
    f = random_function(rng, grid)
    rep = size_equivalence_report([P0], 1, f, [1.0, 2.0, 3.0, 4.0])
    vals = list(rep["sizes"].values())
    assert max(vals) == pytest.approx(min(vals), rel=1e-12)


def test_engine_ties_go_to_first_top():
    f = wave_packet(P0.tile(1), LINF, 5, 1)
    eng = TreeSumEngine([P0], 1, f)
    val, t, u = eng.best(None, 2.0)
    assert eng.tops[t] == P0 and u == 0


def brute_subtree_size(C, v, p, f):
    best = 0.0
    K = max(1, f.support_bound)
    for T in quartile_universe(K, f.resolution):
        for u in range(4):
            if u == v:
                continue
            mem = [P for P in C if leq_v(P, T, u)]
            for r in range(1, len(mem) + 1):
                for S in itertools.combinations(mem, r):
                    s = tree_sum(S, v, f).extend(max(K, T.time.log_length))
                    best = max(best, lp_norm(s, p) * 2.0 ** (-T.time.log_length / p))
    return best


@pytest.mark.parametrize("seed", range(6))
def test_exhaustive_matches_brute_force(seed):
    rng = rng_for(9, seed)
    grid = Grid(1, 3)
    C = sorted(random_convex_collection(rng, grid, 6, seeds=2))[:6]
    f = random_function(rng, grid)
    for p in (1.0, 4.0):
        assert size(C, 1, p, f, method=EXHAUSTIVE).value == \
            pytest.approx(brute_subtree_size(C, 1, p, f), rel=1e-12, abs=1e-15)
