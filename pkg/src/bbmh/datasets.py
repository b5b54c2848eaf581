"""Sparse text datasets and the synthetic two-class corpus.

File format, one record per line: an optional leading label token (+1
or -1), then whitespace-separated ``index:value`` pairs with 0-based
strictly ascending indices. ``#`` starts a comment (full line or
trailing); blank lines are skipped. Binary mode additionally requires
every value to be exactly 1.

The synthetic corpus models two topic classes over a large token
universe: a shared core drives cross-class resemblance, class cores
drive within-class resemblance, and a configurable fraction of records
mixes the two class cores to create graded difficulty. Label noise adds
an irreducible error floor shared by any feature representation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import DatasetFormatError
from .hashing import SparseSet
from .learning import Dataset

import scipy.sparse as sp

Record = tuple[int | None, np.ndarray, np.ndarray]


def parse_sparse_line(line: str, *, path: str | None = None, lineno: int | None = None) -> Record | None:
    """One record, or None for blank/comment lines."""
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    tokens = body.split()
    label: int | None = None
    start = 0
    if ":" not in tokens[0]:
        if tokens[0] not in ("+1", "-1", "1"):
            raise DatasetFormatError(
                f"label must be +1 or -1, got {tokens[0]!r}", path=path, line=lineno
            )
        label = 1 if tokens[0] in ("+1", "1") else -1
        start = 1
    indices = np.empty(len(tokens) - start, dtype=np.int64)
    values = np.empty(len(tokens) - start, dtype=np.float64)
    prev = -1
    for pos, tok in enumerate(tokens[start:]):
        left, sep, right = tok.partition(":")
        if not sep:
            raise DatasetFormatError(f"expected index:value, got {tok!r}", path=path, line=lineno)
        try:
            idx = int(left)
            val = float(right)
        except ValueError:
            raise DatasetFormatError(f"bad index:value pair {tok!r}", path=path, line=lineno) from None
        if idx < 0:
            raise DatasetFormatError(f"negative index {idx}", path=path, line=lineno)
        if idx <= prev:
            raise DatasetFormatError(
                f"indices must be strictly ascending, got {idx} after {prev}", path=path, line=lineno
            )
        prev = idx
        indices[pos] = idx
        values[pos] = val
    return label, indices, values


def read_sparse_records(source, *, binary: bool = False) -> Iterator[Record]:
    """Stream records from a path or an open text handle."""
    if hasattr(source, "read"):
        yield from _read_handle(source, None, binary)
    else:
        with open(source, encoding="ascii") as fh:
            yield from _read_handle(fh, str(source), binary)


def _read_handle(fh: TextIO, path: str | None, binary: bool) -> Iterator[Record]:
    for lineno, line in enumerate(fh, start=1):
        rec = parse_sparse_line(line, path=path, lineno=lineno)
        if rec is None:
            continue
        if binary and not np.all(rec[2] == 1.0):
            raise DatasetFormatError("binary mode requires every value to be 1", path=path, line=lineno)
        yield rec


def format_sparse_record(label: int | None, indices: np.ndarray, values: np.ndarray) -> str:
    parts = []
    if label is not None:
        parts.append("+1" if label > 0 else "-1")
    for idx, val in zip(indices, values):
        v = int(val) if float(val).is_integer() else val
        parts.append(f"{idx}:{v}")
    return " ".join(parts)


def write_sparse_records(path, records: Iterable[Record]) -> int:
    count = 0
    with open(path, "w", encoding="ascii") as fh:
        for label, indices, values in records:
            fh.write(format_sparse_record(label, indices, values) + "\n")
            count += 1
    return count


def load_dataset(path, *, dim: int | None = None, binary: bool = False) -> Dataset:
    """Load a labeled dataset; dimension is 1 + max index unless given."""
    labels: list[int] = []
    indptr = [0]
    col: list[np.ndarray] = []
    dat: list[np.ndarray] = []
    max_idx = -1
    for label, indices, values in read_sparse_records(path, binary=binary):
        if label is None:
            raise DatasetFormatError("record without a label in a labeled dataset", path=str(path))
        labels.append(label)
        col.append(indices)
        dat.append(values)
        if indices.size:
            max_idx = max(max_idx, int(indices[-1]))
        indptr.append(indptr[-1] + indices.size)
    inferred = max_idx + 1
    if dim is None:
        dim = inferred
    elif dim < inferred:
        raise DatasetFormatError(f"dim {dim} smaller than 1 + max index {max_idx}", path=str(path))
    n = len(labels)
    col_arr = np.concatenate(col) if col else np.empty(0, dtype=np.int64)
    dat_arr = np.concatenate(dat) if dat else np.empty(0)
    feats = sp.csr_matrix((dat_arr, col_arr, np.asarray(indptr)), shape=(n, dim))
    return Dataset(np.asarray(labels, dtype=np.int8), feats)


def record_to_set(indices: np.ndarray, universe_size: int) -> SparseSet:
    return SparseSet(universe_size, indices)


# ----------------------------------------------------------------------
# synthetic corpus


@dataclass(frozen=True)
class SyntheticConfig:
    n_records: int = 3500
    universe_size: int = 1 << 20
    tokens_per_record: int = 4000
    within_resemblance: float = 0.45
    cross_resemblance: float = 0.15
    mixed_fraction: float = 0.25
    mixed_low: float = 0.55
    mixed_high: float = 0.80
    label_noise: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n_records < 2:
            raise ValueError("need at least 2 records")
        if not 0 < self.cross_resemblance < self.within_resemblance < 1:
            raise ValueError("need 0 < cross < within < 1")
        if not 0 <= self.mixed_fraction <= 1:
            raise ValueError("mixed_fraction must lie in [0, 1]")
        if not 0.5 <= self.mixed_low <= self.mixed_high <= 1.0:
            raise ValueError("need 0.5 <= mixed_low <= mixed_high <= 1")
        if not 0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")
        f = self.tokens_per_record
        core = self.core_size
        shared = self.shared_size
        if shared < 1 or core <= shared:
            raise ValueError("resemblance targets give an empty shared or class core")
        if f <= core:
            raise ValueError(f"tokens_per_record {f} must exceed the class core {core}")
        span = shared + 2 * (core - shared)
        if span + 4 * (f - core) > self.universe_size:
            raise ValueError("universe too small for the cores plus noise draws")

    @property
    def core_size(self) -> int:
        """Class-core size: two pure same-class records share exactly the
        core, so R_within = core / (2f - core)."""
        rw = self.within_resemblance
        return round(2 * self.tokens_per_record * rw / (1 + rw))

    @property
    def shared_size(self) -> int:
        rx = self.cross_resemblance
        return round(2 * self.tokens_per_record * rx / (1 + rx))


def _sample_distinct(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """size distinct integers from [0, n) without materializing [0, n)."""
    if size > n:
        raise ValueError(f"cannot draw {size} distinct values from {n}")
    out = np.unique(rng.integers(0, n, size + 16 + size // 8))
    while out.size < size:
        out = np.unique(np.concatenate([out, rng.integers(0, n, size)]))
    return rng.permutation(out)[:size]


def generate_records(config: SyntheticConfig) -> tuple[np.ndarray, list[np.ndarray]]:
    """Labels (+1/-1) and sorted token-index arrays, deterministically
    from config.seed."""
    rng = np.random.default_rng(config.seed)
    f = config.tokens_per_record
    core = config.core_size
    shared_n = config.shared_size
    class_n = core - shared_n

    shared = np.arange(shared_n, dtype=np.int64)
    specific = {
        1: np.arange(shared_n, shared_n + class_n, dtype=np.int64),
        -1: np.arange(shared_n + class_n, shared_n + 2 * class_n, dtype=np.int64),
    }
    noise_base = shared_n + 2 * class_n
    noise_n = config.universe_size - noise_base
    fill = f - core

    n = config.n_records
    true_labels = np.where(np.arange(n) < (n + 1) // 2, 1, -1).astype(np.int8)
    true_labels = rng.permutation(true_labels)
    mixed = rng.random(n) < config.mixed_fraction

    records: list[np.ndarray] = []
    for i in range(n):
        cls = int(true_labels[i])
        if mixed[i]:
            q = rng.uniform(config.mixed_low, config.mixed_high)
            own_n = round(q * class_n)
            own = rng.choice(specific[cls], own_n, replace=False)
            other = rng.choice(specific[-cls], class_n - own_n, replace=False)
            core_tokens = np.concatenate([shared, own, other])
        else:
            core_tokens = np.concatenate([shared, specific[cls]])
        noise = noise_base + _sample_distinct(rng, noise_n, fill)
        records.append(np.sort(np.concatenate([core_tokens, noise])))

    labels = true_labels.copy()
    n_flip = round(config.label_noise * n)
    if n_flip:
        flip = rng.choice(n, n_flip, replace=False)
        labels[flip] = -labels[flip]
    return labels, records


def generate_corpus_file(path, config: SyntheticConfig) -> int:
    labels, records = generate_records(config)
    return write_sparse_records(
        path, ((int(l), idx, np.ones(idx.size)) for l, idx in zip(labels, records))
    )


def resemblance_of(a: np.ndarray, b: np.ndarray) -> float:
    inter = np.intersect1d(a, b, assume_unique=True).size
    return inter / (a.size + b.size - inter)


def corpus_resemblance_profile(
    labels: np.ndarray, records: list[np.ndarray], n_pairs: int, seed: int
) -> dict[str, float]:
    """Mean resemblance over sampled same-class and cross-class pairs."""
    rng = np.random.default_rng(seed)
    n = len(records)
    within: list[float] = []
    cross: list[float] = []
    while min(len(within), len(cross)) < n_pairs:
        i, j = rng.integers(0, n, 2)
        if i == j:
            continue
        r = resemblance_of(records[i], records[j])
        (within if labels[i] == labels[j] else cross).append(r)
    return {
        "within_mean": float(np.mean(within[:n_pairs])),
        "cross_mean": float(np.mean(cross[:n_pairs])),
    }
