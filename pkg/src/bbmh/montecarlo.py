"""Monte-Carlo machinery for estimator-law verification.

Two sampling routes:

* ``resemblance_estimates_exact`` runs the real pipeline: it builds an
  exact permutation family per run and hashes two concrete sets.
* ``sample_signature_pairs`` draws (z1, z2) minima directly from their
  exact joint law, which makes huge universes and run counts cheap. The
  union minimum's rank W over u occupied slots follows the
  negative-hypergeometric law Pr(W = m) = C(D-1-m, u-1) / C(D, u),
  sampled through its beta-binomial representation
  W | p ~ Binomial(D - u, p), p ~ Beta(1, u). Which set owns the union
  minimum is an independent categorical draw; when one set loses, its
  own minimum is the first of its f slots among the D - W - 1 slots
  above W, another negative-hypergeometric draw.

Tests pin this sampler against full-permutation enumeration and against
the hashing pipeline itself, so both routes certify each other.
"""
from __future__ import annotations

import numpy as np

from .estimators import BbitConstants, PairStats, bbit_constants, estimate_resemblance_bbit
from .hashing import SparseSet, build_family, derive_seed, minhash


def resemblance_estimates_exact(
    s1: SparseSet, s2: SparseSet, k: int, n_runs: int, base_seed: int
) -> np.ndarray:
    """Full-width resemblance estimates from n_runs independent exact
    permutation families (one derived master seed per run)."""
    if s1.universe_size != s2.universe_size:
        raise ValueError("sets must share a universe")
    out = np.empty(n_runs)
    for run in range(n_runs):
        fam = build_family(derive_seed(base_seed, run), k, s1.universe_size, mode="exact")
        z1 = minhash(fam, s1)
        z2 = minhash(fam, s2)
        out[run] = np.count_nonzero(z1.values == z2.values) / k
    return out


def first_occupied(rng: np.random.Generator, slots, marked: int, size: int) -> np.ndarray:
    """Rank of the first marked slot when ``marked`` positions form a
    uniform subset of ``slots`` positions (negative hypergeometric)."""
    slots = np.asarray(slots, dtype=np.int64)
    if marked < 1:
        raise ValueError(f"marked must be >= 1, got {marked}")
    if np.any(slots < marked):
        raise ValueError("slots must be >= marked")
    p = rng.beta(1.0, marked, size=size)
    return rng.binomial(slots - marked, p)


def sample_joint_minima(
    stats: PairStats, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """n independent draws of (z1, z2) under the exact permutation law."""
    if stats.f1 == 0 or stats.f2 == 0:
        raise ValueError("both sets must be nonempty for minima to exist")
    d, f1, f2, a = stats.universe_size, stats.f1, stats.f2, stats.a
    u = stats.union_size
    w = first_occupied(rng, d, u, n)
    cls = rng.random(n)
    z1 = w.copy()
    z2 = w.copy()
    p_shared = a / u
    p_first = (f1 - a) / u
    only1 = (cls >= p_shared) & (cls < p_shared + p_first)
    only2 = cls >= p_shared + p_first
    if only1.any():
        base = w[only1]
        z2[only1] = base + 1 + first_occupied(rng, d - base - 1, f2, int(only1.sum()))
    if only2.any():
        base = w[only2]
        z1[only2] = base + 1 + first_occupied(rng, d - base - 1, f1, int(only2.sum()))
    return z1, z2


def sample_signature_pairs(
    stats: PairStats, k: int, n_runs: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """(n_runs, k) matrices of paired minima, one row per independent
    k-permutation signature."""
    rng = np.random.default_rng(seed)
    z1, z2 = sample_joint_minima(stats, n_runs * k, rng)
    return z1.reshape(n_runs, k), z2.reshape(n_runs, k)


def bbit_estimate_samples(
    stats: PairStats,
    b: int,
    k: int,
    n_runs: int,
    seed: int,
    *,
    chunk_runs: int = 4096,
) -> np.ndarray:
    """n_runs independent b-bit resemblance estimates at signature
    length k, drawn from the exact joint law in bounded memory."""
    consts = bbit_constants(stats, b)
    rng = np.random.default_rng(seed)
    mask = np.int64((1 << b) - 1)
    out = np.empty(n_runs)
    done = 0
    while done < n_runs:
        runs = min(chunk_runs, n_runs - done)
        z1, z2 = sample_joint_minima(stats, runs * k, rng)
        t = ((z1 & mask) == (z2 & mask)).reshape(runs, k).sum(axis=1)
        for i, match in enumerate(t):
            out[done + i] = estimate_resemblance_bbit(int(match), k, consts)
        done += runs
    return out


def collision_rate_bbit(
    stats: PairStats, b: int, n_draws: int, seed: int, *, chunk: int = 1 << 20
) -> float:
    """Empirical Pr(lowest b bits agree) over n_draws exact-law draws."""
    rng = np.random.default_rng(seed)
    mask = np.int64((1 << b) - 1)
    hits = 0
    done = 0
    while done < n_draws:
        n = min(chunk, n_draws - done)
        z1, z2 = sample_joint_minima(stats, n, rng)
        hits += int(((z1 & mask) == (z2 & mask)).sum())
        done += n
    return hits / n_draws
