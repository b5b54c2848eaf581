"""Closed-form collision probabilities, estimators, and variances.

For two sets with sparsities r1 = f1/D, r2 = f2/D and resemblance R, the
probability that the lowest b bits of their permutation minima agree is

    P_b = C1 + (1 - C2) * R

where C1 and C2 are functions of (r1, r2, b) built from the per-set
factor A(r, b) = r (1-r)^(2^b - 1) / (1 - (1-r)^(2^b)). As r -> 0 the
factor tends to 2^-b; the implementation evaluates it through log1p and
expm1 so that limit is reached smoothly instead of degrading to 0/0.

From an observed agreement count T out of k coordinates,

    R_hat = (T/k - C1) / (1 - C2)

is unbiased with variance P_b (1 - P_b) / (k (1 - C2)^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BbmhError

MAX_BITS = 64


@dataclass(frozen=True)
class PairStats:
    """Population description of a pair of sets: universe size, the two
    cardinalities, and the intersection size."""

    universe_size: int
    f1: int
    f2: int
    a: int

    def __post_init__(self):
        d, f1, f2, a = self.universe_size, self.f1, self.f2, self.a
        if d < 1:
            raise ValueError(f"universe_size must be >= 1, got {d}")
        if not (0 <= f1 <= d and 0 <= f2 <= d):
            raise ValueError(f"cardinalities must lie in [0, {d}], got f1={f1}, f2={f2}")
        if f1 + f2 == 0:
            raise ValueError("at least one set must be nonempty")
        if not max(0, f1 + f2 - d) <= a <= min(f1, f2):
            raise ValueError(
                f"intersection a={a} outside feasible range "
                f"[{max(0, f1 + f2 - d)}, {min(f1, f2)}] for f1={f1}, f2={f2}, D={d}"
            )

    @property
    def union_size(self) -> int:
        return self.f1 + self.f2 - self.a

    @property
    def resemblance(self) -> float:
        return self.a / self.union_size

    @property
    def r1(self) -> float:
        return self.f1 / self.universe_size

    @property
    def r2(self) -> float:
        return self.f2 / self.universe_size


def _collision_factor(r: float, b: int) -> float:
    """A(r, b) = r (1-r)^(w-1) / (1 - (1-r)^w) with w = 2^b.

    Series-safe: at r = 0 returns the limit 1/w; at r = 1 returns 0.
    """
    w = 2.0**b
    if r == 0.0:
        return 1.0 / w
    if r == 1.0:
        return 0.0
    log1mr = math.log1p(-r)
    return r * math.exp((w - 1.0) * log1mr) / (-math.expm1(w * log1mr))


@dataclass(frozen=True)
class BbitConstants:
    """The constants (A1, A2, C1, C2, P_b) for a pair at a given b."""

    b: int
    a1: float
    a2: float
    c1: float
    c2: float
    collision_probability: float
    resemblance: float


def bbit_constants(stats: PairStats, b: int) -> BbitConstants:
    if not 1 <= b <= MAX_BITS:
        raise ValueError(f"b must be in [1, {MAX_BITS}], got {b}")
    if stats.f1 == 0 or stats.f2 == 0:
        raise ValueError("collision constants need both sets nonempty")
    r1, r2 = stats.r1, stats.r2
    a1 = _collision_factor(r1, b)
    a2 = _collision_factor(r2, b)
    rsum = r1 + r2
    c1 = a1 * (r2 / rsum) + a2 * (r1 / rsum)
    c2 = a1 * (r1 / rsum) + a2 * (r2 / rsum)
    r = stats.resemblance
    pb = c1 + (1.0 - c2) * r
    return BbitConstants(b, a1, a2, c1, c2, pb, r)


def estimate_resemblance_minwise(match: int, k: int) -> float:
    """Unbiased resemblance estimate from full-width minima agreement."""
    _check_match(match, k)
    return match / k


def estimate_resemblance_bbit(match: int, k: int, constants: BbitConstants) -> float:
    """Unbiased resemblance estimate from b-bit agreement; may fall
    outside [0, 1] by sampling noise."""
    _check_match(match, k)
    denom = 1.0 - constants.c2
    if denom <= 0.0:
        raise BbmhError(f"1 - C2 = {denom} is not positive; estimator undefined")
    return (match / k - constants.c1) / denom


def clamp_resemblance(value: float) -> float:
    """Convenience accessor mapping a raw estimate into [0, 1]."""
    return min(1.0, max(0.0, value))


def variance_minwise(r: float, k: int) -> float:
    """Var of the full-width estimator: R (1 - R) / k."""
    _check_probability(r, "resemblance")
    _check_k(k)
    return r * (1.0 - r) / k


def variance_bbit(constants: BbitConstants, k: int) -> float:
    """Var of the b-bit estimator: P_b (1 - P_b) / (k (1 - C2)^2)."""
    _check_k(k)
    pb = constants.collision_probability
    denom = 1.0 - constants.c2
    return pb * (1.0 - pb) / (k * denom * denom)


def variance_bbit_vw(constants: BbitConstants, k: int, m: int) -> float:
    """Var of the b-bit estimator when the expanded k * 2^b indicator
    vector is further compressed to m coordinates by a signed sum sketch.

    Adds (1/m) (1 + P_b^2 - P_b (1 + P_b) / k) / (1 - C2)^2 on top of the
    uncompressed variance.
    """
    _check_k(k)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    pb = constants.collision_probability
    denom = (1.0 - constants.c2) ** 2
    extra = (1.0 + pb * pb - pb * (1.0 + pb) / k) / (m * denom)
    return variance_bbit(constants, k) + extra


def _check_match(match: int, k: int) -> None:
    _check_k(k)
    if not 0 <= match <= k:
        raise ValueError(f"match count {match} outside [0, {k}]")


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")


def _check_probability(p: float, name: str) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
