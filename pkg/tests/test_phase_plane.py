import itertools

from hypothesis import given
from hypothesis import strategies as st

from qlab.corpus import Grid, random_convex_collection, random_tree, random_u_tree, rng_for
from qlab.dyadic import DyadicInterval
from qlab.phase_plane import (Quartile, Tree, convexify, factorize_wave_packet,
                              factorized_packet, is_convex, is_good_family, leq, leq_v,
                              partition_tree, quartile_universe, quartiles_between,
                              split_tree, universe_size)
from qlab.walsh import wave_packet


def small_quartiles(max_scale=2, min_scale=-2):
    for j in range(min_scale, max_scale + 1):
        for pos in range(1 << (max_scale - j)):
            for n in range(1 << max(0, 2 - j)):
                yield Quartile(DyadicInterval(pos, j), n)


ALL = list(small_quartiles())


def test_order_examples():
    P = Quartile(DyadicInterval(0, -1), 0)   # omega = [0, 8)
    Q = Quartile(DyadicInterval(0, 0), 0)    # omega = [0, 4)
    assert leq(P, Q) and leq(P, P)
    assert not leq(Quartile(DyadicInterval(1, 0), 0), Q)


def test_leq_v_exhaustive():
    for P, Q in itertools.product(ALL, repeat=2):
        for v in range(4):
            if leq_v(P, Q, v):
                assert leq(P, Q)
        if P != Q and leq_v(P, Q, 0):
            assert not leq_v(P, Q, 1)
    for P in ALL:
        assert all(leq_v(P, P, v) for v in range(4))


def test_split_examples():
    T = Quartile(DyadicInterval(0, 0), 1)
    parts = split_tree(Tree(T, frozenset([T])))
    assert all(T in p.members for p in parts)
    rng = rng_for(3)
    U = random_u_tree(rng, Grid(2, 5), 1)
    assert split_tree(U)[1].members == U.members


@given(st.integers(0, 10**6))
def test_split_and_partition_cover(seed):
    T = random_tree(rng_for(seed), Grid(2, 5))
    parts = split_tree(T)
    assert frozenset().union(*(p.members for p in parts)) == T.members
    pieces = partition_tree(T)
    assert sum(len(p) for p in pieces) == len(T)
    assert frozenset().union(*(p.members for p in pieces)) == T.members


def test_convexify_examples():
    low = Quartile(DyadicInterval(0, -2), 0)
    high = Quartile(DyadicInterval(0, 0), 0)
    C = convexify({low, high}).members
    assert C == {low, high, Quartile(DyadicInterval(0, -1), 0)}
    assert quartiles_between(low, high)[1] == Quartile(DyadicInterval(0, -1), 0)


@given(st.integers(0, 10**6))
def test_convexify_idempotent(seed):
    C = random_convex_collection(rng_for(seed), Grid(1, 4), 60)
    assert is_convex(C)
    assert convexify(C).members == C


def test_factorization_examples():
    top = Quartile(DyadicInterval(0, 0), 2)
    T = Tree(top, frozenset([top]), 1)
    assert factorize_wave_packet(T, top, 2)[1] == 3
    for v in range(4):
        eps, m = factorize_wave_packet(Tree(top, frozenset([top]), v), top, v)
        assert m == 0


@given(st.integers(0, 10**6), st.integers(0, 3))
def test_factorization_exact(seed, u):
    T = random_u_tree(rng_for(seed), Grid(2, 6), u)
    N, K = 6, 2
    for P in T.members:
        for v in range(4):
            assert factorized_packet(T, P, v, N, K) == wave_packet(P.tile(v), resolution=N,
                                                                     support_bound=K)


def test_good_family_examples():
    top = Quartile(DyadicInterval(0, 0), 0)
    one = Tree(top, frozenset([top]), 0)
    assert is_good_family([one], 0, 1)
    # u-tiles [0,1)x[1,2) and [0,4)x[5/4,3/2) overlap
    wide = Quartile(DyadicInterval(0, 2), 1)
    clash = Tree(wide, frozenset([wide]), 0)
    assert not is_good_family([one, clash], 0, 1)
    far = Quartile(DyadicInterval(1, 2), 1)
    assert is_good_family([one, Tree(far, frozenset([far]), 0)], 0, 1)


def test_universe_size():
    assert len(list(quartile_universe(1, 3))) == universe_size(1, 3)
