"""Storage-normalized variance comparison: b-bit minwise hashing versus
signed-sum sketching for binary data.

For binary vectors the inner product is the intersection size a, so a
resemblance estimate converts to an inner-product estimate through
a_hat = (R_hat / (1 + R_hat)) (f1 + f2). The first-order (delta-method)
variance of that transform is

    Var(a_hat) = [(f1 + f2) / (1 + R)^2]^2 Var(R_hat_b).

A b-bit signature coordinate costs b bits while one signed-sum sample
costs a full word, so the storage-normalized ratio is

    G = (Var(a_vw, s=1) * bits_per_sample) / (Var(a_hat_b) * b),

with bits_per_sample defaulting to 32. Both variances scale as 1/k, so
G is independent of k; values above 1 favor the b-bit signatures.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedRatioError
from .estimators import PairStats, bbit_constants, variance_bbit

DEFAULT_BITS_PER_SAMPLE = 32
_REFERENCE_K = 64  # cancels in every ratio; any positive value works


def inner_from_resemblance(r: float, f1: int, f2: int) -> float:
    """a = R (f1 + f2) / (1 + R) for binary data."""
    if f1 + f2 == 0:
        raise ValueError("f1 + f2 must be positive")
    return r * (f1 + f2) / (1.0 + r)


def var_inner_from_bbit(stats: PairStats, b: int, k: int) -> float:
    """Delta-method variance of the inner-product estimate derived from
    the b-bit resemblance estimator."""
    consts = bbit_constants(stats, b)
    factor = (stats.f1 + stats.f2) / (1.0 + stats.resemblance) ** 2
    return factor * factor * variance_bbit(consts, k)


def var_inner_vw_binary(stats: PairStats, k: int, s: float = 1.0) -> float:
    """Variance of the signed-sum inner-product estimator on a binary
    pair: (s-1) a + (f1 f2 + a^2 - 2a) / k."""
    f1, f2, a = stats.f1, stats.f2, stats.a
    return (s - 1.0) * a + (f1 * f2 + a * a - 2.0 * a) / k


@dataclass(frozen=True)
class ComparisonPoint:
    stats: PairStats
    b: int
    bits_per_sample: int = DEFAULT_BITS_PER_SAMPLE

    def __post_init__(self):
        if self.b < 1:
            raise ValueError(f"b must be >= 1, got {self.b}")
        if self.bits_per_sample < 1:
            raise ValueError(f"bits_per_sample must be >= 1, got {self.bits_per_sample}")
        if self.stats.f2 > self.stats.f1:
            raise ValueError("comparison points require f2 <= f1")


def g_ratio(point: ComparisonPoint, k: int = _REFERENCE_K) -> float:
    """Storage-normalized variance ratio; independent of k exactly."""
    var_b = var_inner_from_bbit(point.stats, point.b, k)
    if var_b == 0.0:
        raise UndefinedRatioError(
            f"b-bit variance is zero at {point.stats} (degenerate pair); ratio undefined"
        )
    var_vw = var_inner_vw_binary(point.stats, k, s=1.0)
    return (var_vw * point.bits_per_sample) / (var_b * point.b)


def comparison_grid(
    universe_size: int,
    r1_values,
    b: int,
    bits_per_sample: int = DEFAULT_BITS_PER_SAMPLE,
    *,
    n_f2: int = 10,
    n_a: int = 11,
) -> list[dict]:
    """G over the sparsity grid: f1 = r1 D, f2 from 0.1 f1 to f1, a over
    its feasible range, skipping the degenerate a = f1 = f2 corner.
    Returns one dict per point, ready for CSV emission."""
    rows: list[dict] = []
    for r1 in r1_values:
        f1 = max(1, round(r1 * universe_size))
        f2_values = np.unique(np.round(np.linspace(0.1 * f1, f1, n_f2)).astype(np.int64))
        f2_values = f2_values[f2_values >= 1]
        for f2 in f2_values:
            a_lo = max(0, int(f1) + int(f2) - universe_size)
            a_values = np.unique(np.round(np.linspace(a_lo, int(f2), n_a)).astype(np.int64))
            for a in a_values:
                if a == f1 == f2:
                    continue  # R = 1 makes the b-bit variance zero
                stats = PairStats(universe_size, int(f1), int(f2), int(a))
                point = ComparisonPoint(stats, b, bits_per_sample)
                rows.append(
                    {
                        "D": universe_size,
                        "f1": int(f1),
                        "f2": int(f2),
                        "a": int(a),
                        "b": b,
                        "bits": bits_per_sample,
                        "g_vw": g_ratio(point),
                    }
                )
    return rows


COMPARISON_FIELDS = ("D", "f1", "f2", "a", "b", "bits", "g_vw")


def write_comparison_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=COMPARISON_FIELDS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            out["g_vw"] = repr(float(row["g_vw"]))
            writer.writerow(out)
