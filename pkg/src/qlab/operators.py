"""Haar and Walsh shifts, the quartile operator and its trilinear form.

Also here: the absolute-convergence oracle for indicator inputs and the
randomized projection moments used in the single-tree estimate.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dyadic import DyadicInterval, ResolutionError, StepFunction
from .exact import DyadicRational, ExactScalar, ZERO, inv_sqrt_pow2
from .phase_plane import Quartile, Tree, quartile_universe
from .spaces import NormedSpace, TrilinearForm, induced_bilinear, trilinear_eval
from .walsh import ExactPacketField, FloatPacketField, packet_sum

__all__ = [
    "HaarShiftSpec",
    "LambdaTerm",
    "LambdaResult",
    "haar_shift",
    "walsh_shift",
    "walsh_shift_expanded",
    "lambda_form",
    "bilinear_B",
    "ledger_csv",
    "ConvergenceReport",
    "convergence_oracle",
    "convergence_brute_force",
    "randomized_projection_moment",
    "MomentReport",
]

SIDES = ("0", "l", "r")


def _side(I: DyadicInterval, a: str) -> DyadicInterval:
    if a == "0":
        return I
    if a == "l":
        return I.left_child
    if a == "r":
        return I.right_child
    raise ValueError(f"side must be one of 0, l, r; got {a!r}")


@dataclass(frozen=True)
class HaarShiftSpec:
    a: str
    b: str
    interval_set: tuple

    def __post_init__(self):
        _side(DyadicInterval(0, 0), self.a)
        _side(DyadicInterval(0, 0), self.b)
        object.__setattr__(self, "interval_set", tuple(self.interval_set))
        if len(set(self.interval_set)) != len(self.interval_set):
            raise ValueError("intervals in a Haar shift must be distinct")


def haar_shift(spec: HaarShiftSpec, f: StepFunction) -> StepFunction:
    """``sum_I h_{I_a} <h_{I_b}, f>`` exactly."""
    field_ = ExactPacketField(f)
    terms = []
    out_resolution = f.resolution
    for I in spec.interval_set:
        Ib = _side(I, spec.b)
        if Ib.log_length - 1 < -f.resolution:
            raise ResolutionError(f"h on {Ib} is not constant on the cells of f")
        Ia = _side(I, spec.a)
        out_resolution = max(out_resolution, 1 - Ia.log_length)
        terms.append(((Ia, 1), field_.coefficient((Ib, 1))))
    K = max([f.support_bound] + [I.log_length + I.position.bit_length() for I in spec.interval_set])
    return packet_sum(terms, out_resolution, K, f.dim, space=f.space)


def walsh_shift(m: int, interval_set: Sequence[DyadicInterval], f: StepFunction) -> StepFunction:
    """``sum_I w_{I,m} <w_{I,m}, f>`` computed directly from the packets."""
    if m not in (1, 2, 3):
        raise ValueError("walsh_shift takes m in 1..3")
    field_ = ExactPacketField(f)
    res = f.resolution
    for I in interval_set:
        if I.log_length + f.resolution < m.bit_length():
            raise ResolutionError(f"w_{{I,{m}}} on {I} is not constant on the cells of f")
    terms = [((I, m), field_.coefficient((I, m))) for I in interval_set]
    K = max([f.support_bound] + [I.log_length + I.position.bit_length() for I in interval_set])
    return packet_sum(terms, res, K, f.dim, space=f.space)


# m = 2, 3 through w_{I,2} = (h_l + h_r)/sqrt2 and w_{I,3} = (h_l - h_r)/sqrt2
_EXPANSIONS = {
    1: [(1, "0", "0")],
    2: [(1, "l", "l"), (1, "l", "r"), (1, "r", "l"), (1, "r", "r")],
    3: [(1, "l", "l"), (-1, "l", "r"), (-1, "r", "l"), (1, "r", "r")],
}


def walsh_shift_expanded(m: int, interval_set: Sequence[DyadicInterval],
                         f: StepFunction) -> StepFunction:
    """The same operator assembled from Haar shifts."""
    intervals = tuple(interval_set)
    total = None
    for sign, a, b in _EXPANSIONS[m]:
        part = haar_shift(HaarShiftSpec(a, b, intervals), f)
        part = part if sign > 0 else -part
        total = part if total is None else total + part
    if m > 1:
        total = total.scaled(DyadicRational(1, 1))
    return total


@dataclass(frozen=True)
class LambdaTerm:
    quartile: Quartile
    c1: tuple
    c2: tuple
    c3: tuple
    value: ExactScalar


@dataclass
class LambdaResult:
    value: ExactScalar
    terms: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


def _check_spaces(Pi: TrilinearForm, fs: Sequence[StepFunction]) -> None:
    for v, f in enumerate(fs):
        if f.dim != Pi.dims[v]:
            raise ValueError(f"f_{v + 1} has dimension {f.dim} but X_{v + 1} has {Pi.dims[v]}")


def lambda_terms(collection: Iterable[Quartile], Pi: TrilinearForm,
                 fields: Sequence[ExactPacketField]) -> list[LambdaTerm]:
    out = []
    for P in sorted(collection):
        c = [tuple(fields[v].coefficient(P.tile(v + 1))) for v in range(3)]
        val = trilinear_eval(Pi, *c) * inv_sqrt_pow2(P.time.log_length)
        out.append(LambdaTerm(P, c[0], c[1], c[2], val))
    return out


def lambda_form(collection: Iterable[Quartile], Pi: TrilinearForm, f1: StepFunction,
                f2: StepFunction, f3: StepFunction, absolute: bool = False,
                ledger: bool = False):
    """``sum_P |I_P|**-0.5 Pi(<f1,w_{P_1}>, <f2,w_{P_2}>, <f3,w_{P_3}>)``.

    With ``absolute`` every summand is replaced by its absolute value. Returns
    an :class:`ExactScalar`, or a :class:`LambdaResult` carrying the term
    ledger when ``ledger`` is set.
    """
    _check_spaces(Pi, (f1, f2, f3))
    fields = [ExactPacketField(f) for f in (f1, f2, f3)]
    terms = lambda_terms(collection, Pi, fields)
    total = ZERO
    for t in terms:
        total = total + (abs(t.value) if absolute else t.value)
    if ledger:
        return LambdaResult(total, terms)
    return total


def ledger_csv(terms: Sequence[LambdaTerm]) -> str:
    """CSV with columns quartile, c1, c2, c3, value; exact numbers as ``a_num:a_scale:b_num:b_scale``."""

    def fmt(x: ExactScalar) -> str:
        return ":".join(x.to_tuple())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quartile", "c1", "c2", "c3", "value"])
    for t in terms:
        q = "/".join(str(x) for x in t.quartile.to_json())
        w.writerow([q] + [" ".join(fmt(x) for x in c) for c in (t.c1, t.c2, t.c3)] + [fmt(t.value)])
    return buf.getvalue()


def bilinear_B(collection: Iterable[Quartile], Pi: TrilinearForm, slot: int,
               f: StepFunction, g: StepFunction) -> StepFunction:
    """``B_slot``: ``f``, ``g`` fill the two other slots in increasing order."""
    others = [s for s in (1, 2, 3) if s != slot]
    if slot not in (1, 2, 3):
        raise ValueError("slot is 1, 2 or 3")
    for h, s in zip((f, g), others):
        if h.dim != Pi.dims[s - 1]:
            raise ValueError(f"slot {s} expects dimension {Pi.dims[s - 1]}, got {h.dim}")
    ff, fg = ExactPacketField(f), ExactPacketField(g)
    N = max(f.resolution, g.resolution)
    K = max(f.support_bound, g.support_bound)
    terms = []
    for P in sorted(collection):
        x = ff.coefficient(P.tile(others[0]))
        y = fg.coefficient(P.tile(others[1]))
        vec = induced_bilinear(Pi, slot, x, y)
        scale = inv_sqrt_pow2(P.time.log_length)
        if any(not c.is_zero() for c in vec):
            terms.append((P.tile(slot), [c * scale for c in vec]))
    for t, _ in terms:
        N = max(N, t.freq_index.bit_length() - t.time.log_length)
        K = max(K, t.time.log_length + t.time.position.bit_length())
    return packet_sum(terms, N, K, Pi.dims[slot - 1])


# --- absolute convergence -----------------------------------------------------

@dataclass
class ConvergenceReport:
    quartiles: list
    absolute_sum: DyadicRational
    bound: DyadicRational
    enumerated_sum: DyadicRational
    tail: DyadicRational
    grid_bound: int

    @property
    def ok(self) -> bool:
        return self.absolute_sum <= self.bound


def _fits(I: DyadicInterval) -> int:
    return I.log_length + I.position.bit_length()


def convergence_oracle(J1: DyadicInterval, J2: DyadicInterval, J3: DyadicInterval,
                       support_bound: Optional[int] = None) -> ConvergenceReport:
    """Quartiles with nonzero pairings against ``1_{J_i}`` and the absolute series.

    A quartile ``I x [4n, 4n+4)/|I|`` contributes iff ``I`` strictly contains
    every ``J_i`` and ``4n + i < |I|/|J_i|``; its term is then
    ``|J1||J2||J3| / |I|**2``. The quartiles inside ``[0, 2**K)`` are listed;
    the ancestors ``[0, 2**k)``, ``k > K``, are summed in closed form.
    """
    Js = (J1, J2, J3)
    jmax = max(J.log_length for J in Js)
    K = max([_fits(J) for J in Js] + [jmax + 1] + ([support_bound] if support_bound is not None else []))
    prod_log = sum(J.log_length for J in Js)
    quartiles = []
    enumerated = DyadicRational(0)
    for j in range(jmax + 1, K + 1):
        I = Js[0].ancestor(j)
        if not all(I.contains(J) for J in Js):
            continue
        count = min(((1 << (j - J.log_length)) - i + 3) // 4 for i, J in enumerate(Js, start=1))
        for n in range(max(count, 0)):
            quartiles.append(Quartile(I, n))
        term = DyadicRational(1, 2 * j - prod_log)
        enumerated = enumerated + term * max(count, 0)
    # levels k > K: 2**(k - jmax - 2) quartiles each contributing |J1 J2 J3| 4**-k
    tail = DyadicRational(1, jmax + 2 + K - prod_log)
    bound = min(J.length for J in Js)
    return ConvergenceReport(quartiles, enumerated + tail, bound, enumerated, tail, K)


def convergence_brute_force(J1: DyadicInterval, J2: DyadicInterval, J3: DyadicInterval,
                            support_bound: int) -> tuple[list, DyadicRational]:
    """Every grid quartile with all three pairings nonzero, and the exact absolute sum."""
    Js = (J1, J2, J3)
    N = max(0, max(-J.log_length for J in Js))
    fields = [ExactPacketField(StepFunction.indicator([J], N, support_bound)) for J in Js]
    found = []
    total = ExactScalar(0)
    for P in quartile_universe(support_bound, N):
        cs = [fields[i].coefficient(P.tile(i + 1))[0] for i in range(3)]
        if any(c.is_zero() for c in cs):
            continue
        found.append(P)
        total = total + abs(cs[0] * cs[1] * cs[2] * inv_sqrt_pow2(P.time.log_length))
    if total.b:
        raise AssertionError("absolute series left the dyadic rationals")
    return found, total.a


# --- randomized projections ---------------------------------------------------

@dataclass
class MomentReport:
    moment: float
    size_bound: float
    ratio: float
    mode: str
    samples: int


def _roots(n_roots: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n_roots) / n_roots)


def randomized_projection_moment(T: Tree, v: int, f: StepFunction, p: float, n_roots: int = 2,
                                 mode: str = "exact", seed: Optional[int] = None,
                                 samples: int = 4096, space: Optional[NormedSpace] = None,
                                 member_cap: int = 12) -> MomentReport:
    """``(int_{I_T} E|sum_P eta_P <f,w_{P_v}> 1_{I_P}/|I_P|**0.5|**p)**(1/p)``.

    ``eta_P`` are independent uniform ``n_roots``-th roots of unity. In exact
    mode the expectation is an average over all sign patterns; since the
    members covering a cell form a chain, each cell only averages over the
    patterns of its chain.
    """
    from .sizes import size as size_of

    if T.kind is None:
        raise ValueError("randomized projections are taken over a u-tree")
    if v == T.kind or v not in (1, 2, 3):
        raise ValueError("v must be in 1..3 and differ from the tree kind")
    members = sorted(T.members)
    if mode == "exact" and len(members) > member_cap:
        raise ValueError(f"exact mode enumerates at most {member_cap} members, got {len(members)}")
    if mode == "monte_carlo" and seed is None:
        raise ValueError("Monte Carlo mode needs a seed")
    space = space or NormedSpace(f.dim)
    N = max(f.resolution, max((-P.time.log_length for P in members), default=f.resolution))
    K = max(f.support_bound, T.top.time.log_length + T.top.time.position.bit_length())
    g = f.on_grid(N, K)
    fld = FloatPacketField(g)
    ncells = 1 << (K + N)
    cells_of = []
    coefs = np.zeros((len(members), g.dim))
    for idx, P in enumerate(members):
        coefs[idx] = fld.coefficient(P.tile(v)) * 2.0 ** (-P.time.log_length / 2.0)
        cells_of.append(P.time.cell_range(N))
    cover = [[] for _ in range(ncells)]
    for idx, (lo, hi) in enumerate(cells_of):
        for c in range(lo, hi):
            cover[c].append(idx)
    lo_T, hi_T = T.top.time.cell_range(N)
    roots = _roots(n_roots)
    total = 0.0
    if mode == "exact":
        cache: dict[tuple, float] = {}
        for c in range(lo_T, hi_T):
            chain = tuple(cover[c])
            if chain not in cache:
                if not chain:
                    cache[chain] = 0.0
                else:
                    pats = np.array(list(itertools.product(range(n_roots), repeat=len(chain))))
                    eta = roots[pats]  # patterns x chain
                    vals = eta @ coefs[list(chain)]
                    cache[chain] = float(np.mean(space.vector_norms(vals) ** p))
            total += cache[chain]
        used = 0
    elif mode == "monte_carlo":
        rng = np.random.default_rng(seed)
        eta = roots[rng.integers(0, n_roots, size=(samples, len(members)))]
        for c in range(lo_T, hi_T):
            chain = cover[c]
            if chain:
                vals = eta[:, chain] @ coefs[chain]
                total += float(np.mean(space.vector_norms(vals) ** p))
        used = samples
    else:
        raise ValueError(f"unknown mode {mode!r}")
    moment = (total * 2.0 ** -N) ** (1.0 / p)
    sz = size_of(T.members, v, p, g, space=space).value
    bound = sz * T.top.time.length.__float__() ** (1.0 / p)
    ratio = moment / bound if bound > 0 else (0.0 if moment == 0 else math.inf)
    return MomentReport(moment, bound, ratio, mode, used)
