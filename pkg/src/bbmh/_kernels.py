"""Compiled inner loops for permutation simulation.

All randomness here is counter-mode splitmix64, so outputs are a pure
function of the seeds passed in and are identical across runs, processes,
and platforms. The mixing constants must stay in sync with
:mod:`bbmh.hashing`, which implements the same finalizer in numpy for
vectorized use; tests assert the two paths agree bit for bit.
"""
from __future__ import annotations

import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)


@numba.njit(numba.uint64(numba.uint64), cache=True, inline="always")
def _mix64(x):
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


@numba.njit(numba.void(numba.uint64[:], numba.int32[:, :]), cache=True)
def fill_permutations(seeds, out):
    """Fisher-Yates shuffle of 0..D-1 into each row of ``out``.

    Row j is driven by the counter stream mix64(seeds[j] + c * GOLDEN),
    c = 1, 2, ...; the modulo draw has bias below D / 2**64, far under
    any tolerance used in this package.
    """
    k, universe = out.shape
    for j in range(k):
        s = seeds[j]
        for t in range(universe):
            out[j, t] = t
        c = np.uint64(0)
        for t in range(universe - 1, 0, -1):
            c += np.uint64(1)
            h = _mix64(s + c * _GOLDEN)
            r = int(h % np.uint64(t + 1))
            tmp = out[j, t]
            out[j, t] = out[j, r]
            out[j, r] = tmp


@numba.njit(numba.void(numba.uint64[:], numba.uint64[:], numba.uint64[:]), cache=True)
def minhash_mixed(mixed, seeds, out):
    """out[j] = min over elements of mix64(mixed[t] ^ seeds[j])."""
    for j in range(seeds.size):
        s = seeds[j]
        best = _U64_MAX
        for t in range(mixed.size):
            h = _mix64(mixed[t] ^ s)
            if h < best:
                best = h
        out[j] = best
