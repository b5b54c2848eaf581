"""Exact collision probabilities for b-bit minima, without approximation.

Let z1, z2 be the ranks of the permutation minima of two sets. Decompose
the agreement event {z1 = z2 mod 2^b} by which set owns the union
minimum:

* union minimum in the intersection: z1 = z2, probability R;
* union minimum in S1 only (z1 = i < z2 = j): summing over slots,

      Pr(z1 = i, z2 = j) = alpha(i) * gamma(j) / den(i)

  with alpha(i) = [C(D-i, x+y) / C(D, x+y)] * x / (D-i),
  gamma(j) = C(D-1-j, y-1), den(i) = C(D-i-1, y), where x counts
  elements of S1 only and y = f2 counts all of S2. The first factor
  places all union elements above slot i with an S1-only element at i;
  the second is the chance the S2 minimum lands exactly at j among the
  remaining slots.
* the symmetric case with x = f2 - a, y = f1.

Summing gamma over the arithmetic progression j = i + 2^b, i + 2*2^b, ...
(one backward recursion per residue) gives the exact agreement
probability in O(D) per pair after O(D) tables. Everything is available
in exact rational arithmetic for small universes and in vectorized
log-space floats (gammaln) for universes up to the configured bound.

A full-permutation enumerator over all D! orderings provides an
independent check for tiny universes, and ``exact_joint_pmf`` exposes
the entire joint law of (z1, z2) for validating samplers.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import OracleCapacityError
from .estimators import PairStats
from .hashing import SparseSet

DEFAULT_MAX_UNIVERSE = 500
RATIONAL_AUTO_MAX = 30
ENUMERATION_MAX_UNIVERSE = 9


def representative_pair(stats: PairStats) -> tuple[SparseSet, SparseSet]:
    """A concrete pair of sets realizing the given (D, f1, f2, a).

    Collision probabilities depend only on these four numbers, so any
    representative works for Monte-Carlo runs.
    """
    d, f1, f2, a = stats.universe_size, stats.f1, stats.f2, stats.a
    s1 = SparseSet(d, np.arange(f1, dtype=np.int64))
    extra = np.arange(f1, f1 + f2 - a, dtype=np.int64)
    s2 = SparseSet(d, np.concatenate([np.arange(a, dtype=np.int64), extra]))
    return s1, s2


def _check_capacity(universe_size: int, max_universe: int) -> None:
    if universe_size > max_universe:
        raise OracleCapacityError(
            f"exact computation refused for universe {universe_size} > {max_universe}; "
            "raise max_universe explicitly if the cost and precision are acceptable"
        )


def _require_nonempty(stats: PairStats) -> None:
    if stats.f1 == 0 or stats.f2 == 0:
        raise ValueError("both sets must be nonempty for minima to exist")


# ----------------------------------------------------------------------
# rational path


def _ordered_congruent_fraction(d: int, x: int, y: int, w: int) -> Fraction:
    """Probability the x-class minimum is at i, the y-class minimum at
    j > i with j = i mod w, summed over all (i, j). Exact."""
    if x == 0:
        return Fraction(0)
    comb = math.comb
    gamma = [comb(d - 1 - j, y - 1) if d - 1 - j >= y - 1 else 0 for j in range(d)]
    tail = [0] * (d + 1)
    for i in range(d - 1, -1, -1):
        nxt = i + w
        tail[i] = (gamma[nxt] + tail[nxt]) if nxt < d else 0
    denom_all = comb(d, x + y)
    total = Fraction(0)
    for i in range(d):
        if tail[i] == 0:
            continue
        cxy = comb(d - i, x + y)
        if cxy == 0:
            continue
        den = comb(d - i - 1, y)
        total += Fraction(cxy * x * tail[i], denom_all * (d - i) * den)
    return total


def exact_pb_fraction(stats: PairStats, b: int, *, max_universe: int = DEFAULT_MAX_UNIVERSE) -> Fraction:
    """Exact rational agreement probability of the lowest b bits."""
    _require_nonempty(stats)
    _check_capacity(stats.universe_size, max_universe)
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    d, f1, f2, a = stats.universe_size, stats.f1, stats.f2, stats.a
    w = 1 << b
    r = Fraction(a, stats.union_size)
    return (
        r
        + _ordered_congruent_fraction(d, f1 - a, f2, w)
        + _ordered_congruent_fraction(d, f2 - a, f1, w)
    )


# ----------------------------------------------------------------------
# float path (vectorized, log-space)


def _log_comb(n: np.ndarray, r) -> np.ndarray:
    """log C(n, r) elementwise, -inf where C(n, r) = 0."""
    n = np.asarray(n, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    n, r = np.broadcast_arrays(n, r)
    valid = (r >= 0) & (n >= r)
    out = np.full(n.shape, -np.inf)
    nv, rv = n[valid], r[valid]
    out[valid] = gammaln(nv + 1.0) - gammaln(rv + 1.0) - gammaln(nv - rv + 1.0)
    return out


def _log_gamma_tail(d: int, y: int, w: int) -> np.ndarray:
    """log sum_{t>=1} C(d-1-(i+t*w), y-1) for each i, -inf where empty."""
    i = np.arange(d)
    log_gamma = _log_comb(d - 1 - i, y - 1)
    finite = np.isfinite(log_gamma)
    if not finite.any():
        return np.full(d, -np.inf)
    shift = log_gamma[finite].max()
    g = np.where(finite, np.exp(log_gamma - shift), 0.0)
    tail = np.zeros(d)
    for r in range(min(w, d)):
        seg = g[r::w]
        csum = np.cumsum(seg[::-1])[::-1]
        tail[r::w] = np.concatenate([csum[1:], [0.0]])
    with np.errstate(divide="ignore"):
        return np.where(tail > 0.0, np.log(tail) + shift, -np.inf)


def _ordered_congruent_float(d: int, x: np.ndarray, y: int, w: int) -> np.ndarray:
    """Float version of the ordered-match probability, vectorized over x."""
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    i = np.arange(d)
    u = x + y  # union-class totals, one per sweep point
    log_first = _log_comb(d - i, u[:, None]) - _log_comb(d, u)[:, None]
    with np.errstate(divide="ignore"):
        log_x = np.where(x > 0, np.log(np.maximum(x, 1)), -np.inf)
    log_alpha = log_first + log_x[:, None] - np.log(d - i)[None, :]
    log_den = _log_comb(d - 1 - i, y)
    log_tail = _log_gamma_tail(d, y, w)
    with np.errstate(invalid="ignore"):
        log_term = log_alpha + (log_tail - log_den)[None, :]
    terms = np.exp(np.where(np.isfinite(log_term), log_term, -np.inf))
    return terms.sum(axis=1)


def exact_pb(
    stats: PairStats,
    b: int,
    *,
    method: str = "auto",
    max_universe: int = DEFAULT_MAX_UNIVERSE,
) -> float:
    """Exact agreement probability of the lowest b bits of the minima.

    method "rational" sums exact fractions (slow, any precision),
    "float" uses vectorized log-space arithmetic (relative error around
    1e-12 for universes within the default bound), "auto" picks rational
    for universes up to 30.
    """
    if method == "auto":
        method = "rational" if stats.universe_size <= RATIONAL_AUTO_MAX else "float"
    if method == "rational":
        return float(exact_pb_fraction(stats, b, max_universe=max_universe))
    if method != "float":
        raise ValueError(f"method must be 'auto', 'rational', or 'float', got {method!r}")
    _require_nonempty(stats)
    _check_capacity(stats.universe_size, max_universe)
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    d, f1, f2, a = stats.universe_size, stats.f1, stats.f2, stats.a
    w = 1 << b
    q1 = _ordered_congruent_float(d, np.array([f1 - a]), f2, w)[0]
    q2 = _ordered_congruent_float(d, np.array([f2 - a]), f1, w)[0]
    return stats.resemblance + q1 + q2


def exact_pb_sweep(
    universe_size: int,
    f1: int,
    f2: int,
    b_values,
    *,
    max_universe: int = DEFAULT_MAX_UNIVERSE,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact P_b for every feasible intersection size at fixed (f1, f2).

    Returns (a_values, matrix) where matrix[bi, ai] is the agreement
    probability at b = b_values[bi], a = a_values[ai]. Requires
    f1 >= f2 >= 1. The log-combinatorial tables are shared across the
    whole sweep, so a full sweep costs little more than a single point.
    """
    d = universe_size
    _check_capacity(d, max_universe)
    if not 1 <= f2 <= f1 <= d:
        raise ValueError(f"need 1 <= f2 <= f1 <= D, got f1={f1}, f2={f2}, D={d}")
    b_values = [int(b) for b in b_values]
    if any(b < 1 for b in b_values):
        raise ValueError("all b values must be >= 1")
    a_values = np.arange(max(0, f1 + f2 - d), f2 + 1, dtype=np.int64)
    resemblance = a_values / (f1 + f2 - a_values)
    out = np.empty((len(b_values), a_values.size))
    for bi, b in enumerate(b_values):
        w = 1 << b
        q1 = _ordered_congruent_float(d, f1 - a_values, f2, w)
        q2 = _ordered_congruent_float(d, f2 - a_values, f1, w)
        out[bi] = resemblance + q1 + q2
    return a_values, out


# ----------------------------------------------------------------------
# joint law and enumeration


def exact_joint_pmf(stats: PairStats, *, max_universe: int = DEFAULT_MAX_UNIVERSE) -> np.ndarray:
    """The full joint law of the two minima as a (D, D) matrix,
    entry [i, j] = Pr(z1 = i, z2 = j)."""
    _require_nonempty(stats)
    _check_capacity(stats.universe_size, max_universe)
    d, f1, f2, a = stats.universe_size, stats.f1, stats.f2, stats.a
    u = stats.union_size
    i = np.arange(d)
    pmf = np.zeros((d, d))

    log_first_u = _log_comb(d - i, u) - _log_comb(d, u) - np.log(d - i)
    if a > 0:
        diag = np.exp(log_first_u + math.log(a))
        np.fill_diagonal(pmf, diag)

    for x, y, transpose in ((f1 - a, f2, False), (f2 - a, f1, True)):
        if x == 0:
            continue
        log_alpha = (
            _log_comb(d - i, x + y) - _log_comb(d, x + y) + math.log(x) - np.log(d - i)
        )
        log_den = _log_comb(d - 1 - i, y)
        log_gamma = _log_comb(d - 1 - i, y - 1)
        with np.errstate(invalid="ignore"):
            log_block = (log_alpha - log_den)[:, None] + log_gamma[None, :]
        block = np.exp(np.where(np.isfinite(log_block), log_block, -np.inf))
        block = np.triu(block, k=1)
        pmf += block.T if transpose else block
    return pmf


def enumerate_joint_counts(
    universe_size: int,
    s1: SparseSet,
    s2: SparseSet,
    *,
    max_universe: int = ENUMERATION_MAX_UNIVERSE,
) -> tuple[np.ndarray, int]:
    """Counts of (z1, z2) over all D! permutations, by brute force."""
    d = universe_size
    if d > max_universe:
        raise OracleCapacityError(
            f"enumeration over {d}! permutations refused (bound {max_universe})"
        )
    if s1.universe_size != d or s2.universe_size != d:
        raise ValueError("sets must live in the stated universe")
    if s1.cardinality == 0 or s2.cardinality == 0:
        raise ValueError("both sets must be nonempty")
    e1 = [int(v) for v in s1.indices]
    e2 = [int(v) for v in s2.indices]
    counts = np.zeros((d, d), dtype=np.int64)
    for perm in itertools.permutations(range(d)):
        z1 = min(perm[e] for e in e1)
        z2 = min(perm[e] for e in e2)
        counts[z1, z2] += 1
    return counts, math.factorial(d)


def enumerate_pb(
    universe_size: int,
    s1: SparseSet,
    s2: SparseSet,
    b: int,
    *,
    max_universe: int = ENUMERATION_MAX_UNIVERSE,
) -> Fraction:
    """Exact agreement probability of the lowest b bits by enumerating
    every permutation. Independent of the combinatorial construction."""
    counts, total = enumerate_joint_counts(universe_size, s1, s2, max_universe=max_universe)
    w = 1 << b
    i, j = np.indices(counts.shape)
    match = counts[(i % w) == (j % w)].sum()
    return Fraction(int(match), total)
