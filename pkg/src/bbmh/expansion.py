"""One-hot expansion of b-bit signatures into linear-kernel features.

A signature of k values, b bits each, becomes a binary vector of
dimension k * 2^b with exactly k ones: block j is a one-hot encoding of
value e_j at offset 2^b - 1 - e_j within the block. The inner product
of two expanded vectors is then exactly the number of agreeing
signature coordinates, so a linear kernel on expanded vectors is the
(unnormalized) b-bit agreement kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleSignatureError
from .hashing import BbitSignature
from .sketches import SignDistribution, SketchVector, SparseVector, vw_sketch


@dataclass(frozen=True)
class ExpandedVector:
    """Positions of the k ones in the expanded binary vector."""

    k: int
    b: int
    ones: np.ndarray

    def __post_init__(self):
        ones = np.asarray(self.ones, dtype=np.int64)
        if ones.shape != (self.k,):
            raise ValueError(f"expected {self.k} positions, got shape {ones.shape}")
        object.__setattr__(self, "ones", ones)

    @property
    def dim(self) -> int:
        return self.k << self.b


def expand(sig: BbitSignature) -> ExpandedVector:
    """One-hot encode each signature value within its own block."""
    width = np.int64(1 << sig.b)
    offsets = width - 1 - sig.values.astype(np.int64)
    ones = np.arange(sig.k, dtype=np.int64) * width + offsets
    return ExpandedVector(sig.k, sig.b, ones)


def inner(x: ExpandedVector, y: ExpandedVector) -> int:
    """<expand(x), expand(y)> = number of agreeing signature values."""
    if x.k != y.k or x.b != y.b:
        raise IncompatibleSignatureError(
            f"expanded vectors disagree: (k={x.k}, b={x.b}) vs (k={y.k}, b={y.b})"
        )
    return int(np.count_nonzero(x.ones == y.ones))


def gram_matrix(expanded: list[ExpandedVector]) -> np.ndarray:
    """Pairwise inner products (agreement counts) as an (n, n) matrix."""
    if not expanded:
        return np.empty((0, 0), dtype=np.int64)
    first = expanded[0]
    stacked = np.empty((len(expanded), first.k), dtype=np.int64)
    for i, ev in enumerate(expanded):
        if ev.k != first.k or ev.b != first.b:
            raise IncompatibleSignatureError(
                f"vector {i} has (k={ev.k}, b={ev.b}), expected (k={first.k}, b={first.b})"
            )
        stacked[i] = ev.ones
    n = len(expanded)
    out = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        out[i] = (stacked == stacked[i]).sum(axis=1)
    return out


def to_sparse_vector(ev: ExpandedVector) -> SparseVector:
    """The expanded vector as an explicit sparse binary vector."""
    return SparseVector(ev.dim, ev.ones, np.ones(ev.k))


def expand_then_sketch(
    sig: BbitSignature, m: int, seed: int, sign: SignDistribution = SignDistribution(1.0)
) -> SketchVector:
    """Compress the k * 2^b expanded vector to m signed-sum coordinates,
    preserving inner products in expectation."""
    return vw_sketch(to_sparse_vector(expand(sig)), m, seed, sign)
