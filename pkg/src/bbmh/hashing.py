"""Seed-reproducible minwise hashing and b-bit signature handling.

Primitives
----------
* splitmix64-style 64-bit finalizer (``mix64``) and a two-input seed
  derivation with full avalanche (``derive_seed``).
* ``HashFamily``: k simulated permutations of a finite universe, either
  materialized exactly (Fisher-Yates, bounded universe) or simulated by
  keyed 64-bit mixing of the elements.
* ``minhash``: per-permutation minima of a sparse binary set.
* ``truncate_bits`` / ``BbitSignature``: keep the lowest b bits of each
  minimum, with little-endian bit packing and a binary file format.

Permutation j of a family is a deterministic function of
(master_seed, j) only: each row derives its own 64-bit seed and runs a
counter-mode stream, so no global RNG state is involved anywhere.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from . import _kernels
from .errors import EmptySetError, IncompatibleSignatureError

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

EXACT_MODE_MAX_UNIVERSE = 1 << 20
MAX_SIGNATURE_BITS = 16

_SIG_MAGIC = b"BBMH"
_SIG_VERSION = 1
# magic, version u8, k u32, b u8, record_count u64, all little-endian
_SIG_HEADER = struct.Struct("<4sBIBQ")


def mix64(x: int) -> int:
    """64-bit finalizer with full avalanche (splitmix64 constants)."""
    x &= MASK64
    x ^= x >> 30
    x = (x * _MIX1) & MASK64
    x ^= x >> 27
    x = (x * _MIX2) & MASK64
    x ^= x >> 31
    return x


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized ``mix64`` over a uint64 array."""
    x = np.asarray(x, dtype=np.uint64).copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(31)
    return x


def derive_seed(master_seed: int, index: int) -> int:
    """Mix (master_seed, index) into an independent 64-bit seed.

    Both inputs pass through the full finalizer so that consecutive
    masters or indices yield uncorrelated streams; no table of k seeds
    ever needs to be stored.
    """
    h = mix64(master_seed)
    return mix64(h ^ ((index + 1) * GOLDEN & MASK64))


def _derive_seed_block(master_seed: int, k: int) -> np.ndarray:
    h = mix64(master_seed)
    idx = (np.arange(1, k + 1, dtype=np.uint64)) * np.uint64(GOLDEN)
    return mix64_array(np.uint64(h) ^ idx)


@dataclass(frozen=True)
class SparseSet:
    """A subset of {0, ..., universe_size - 1} as sorted unique indices."""

    universe_size: int
    indices: np.ndarray

    def __post_init__(self):
        if self.universe_size < 1:
            raise ValueError(f"universe_size must be >= 1, got {self.universe_size}")
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size:
            lo, hi = int(idx.min()), int(idx.max())
            if lo < 0 or hi >= self.universe_size:
                raise ValueError(
                    f"indices must lie in [0, {self.universe_size}), got range [{lo}, {hi}]"
                )
            if np.any(np.diff(idx) <= 0):
                idx = np.unique(idx)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_iterable(cls, universe_size: int, items: Iterable[int]) -> "SparseSet":
        return cls(universe_size, np.fromiter(items, dtype=np.int64))

    @property
    def cardinality(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class HashFamily:
    """k simulated random permutations of {0, ..., universe_size - 1}.

    mode "exact": permutations are materialized with Fisher-Yates, so
    collision behaviour is exactly that of true permutations. Bounded to
    universes of at most 2**20 elements.

    mode "hashed": element e under permutation j maps to
    mix64(mix64(e + 1) ^ seed_j), a keyed bijection-quality hash of the
    element. Minima are then 64-bit values rather than ranks; ties occur
    with probability ~ f / 2**64 per pair and are ignored.
    """

    master_seed: int
    k: int
    universe_size: int
    mode: str
    _seeds: np.ndarray
    _perm_table: np.ndarray | None

    def permutation(self, j: int) -> np.ndarray:
        """The j-th permutation as an array (exact mode only)."""
        if self._perm_table is None:
            raise ValueError("permutation tables exist only in exact mode")
        if not 0 <= j < self.k:
            raise IndexError(f"permutation index {j} out of range [0, {self.k})")
        return self._perm_table[j].copy()


def build_family(master_seed: int, k: int, universe_size: int, mode: str = "hashed") -> HashFamily:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if universe_size < 1:
        raise ValueError(f"universe_size must be >= 1, got {universe_size}")
    if mode not in ("exact", "hashed"):
        raise ValueError(f"mode must be 'exact' or 'hashed', got {mode!r}")
    seeds = _derive_seed_block(master_seed, k)
    table = None
    if mode == "exact":
        if universe_size > EXACT_MODE_MAX_UNIVERSE:
            raise ValueError(
                f"exact mode is bounded to universes of {EXACT_MODE_MAX_UNIVERSE} elements; "
                f"got {universe_size}. Use mode='hashed'."
            )
        table = np.empty((k, universe_size), dtype=np.int32)
        _kernels.fill_permutations(seeds, table)
    return HashFamily(master_seed, k, universe_size, mode, seeds, table)


@dataclass(frozen=True)
class MinhashSignature:
    """Per-permutation minima of one set. Values are ranks in exact mode
    and 64-bit hash values in hashed mode."""

    k: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.uint64)
        if vals.shape != (self.k,):
            raise ValueError(f"expected {self.k} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)


def minhash(family: HashFamily, s: SparseSet) -> MinhashSignature:
    """Minimum of each permutation over the set's elements."""
    if s.universe_size != family.universe_size:
        raise ValueError(
            f"set universe {s.universe_size} != family universe {family.universe_size}"
        )
    if s.cardinality == 0:
        raise EmptySetError("minhash of an empty set is undefined")
    if family.mode == "exact":
        vals = family._perm_table[:, s.indices].min(axis=1).astype(np.uint64)
    else:
        mixed = mix64_array(s.indices.astype(np.uint64) + np.uint64(1))
        vals = np.empty(family.k, dtype=np.uint64)
        _kernels.minhash_mixed(mixed, family._seeds, vals)
    return MinhashSignature(family.k, vals)


def minhash_matrix(family: HashFamily, sets: Iterable[SparseSet]) -> np.ndarray:
    """Stack minhash values for many sets into an (n, k) uint64 array."""
    rows = [minhash(family, s).values for s in sets]
    if not rows:
        return np.empty((0, family.k), dtype=np.uint64)
    return np.vstack(rows)


@dataclass(frozen=True)
class BbitSignature:
    """The lowest b bits of each of k minima."""

    k: int
    b: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.b <= MAX_SIGNATURE_BITS:
            raise ValueError(f"b must be in [1, {MAX_SIGNATURE_BITS}], got {self.b}")
        vals = np.asarray(self.values, dtype=np.uint16)
        if vals.shape != (self.k,):
            raise ValueError(f"expected {self.k} values, got shape {vals.shape}")
        if self.b < 16 and np.any(vals >> np.uint16(self.b)):
            raise ValueError(f"values exceed {self.b} bits")
        object.__setattr__(self, "values", vals)

    @property
    def packed(self) -> bytes:
        return pack_bbit_values(self.values, self.b)

    @classmethod
    def from_packed(cls, k: int, b: int, payload: bytes) -> "BbitSignature":
        return cls(k, b, unpack_bbit_values(payload, k, b))


def truncate_bits(sig: MinhashSignature, b: int) -> BbitSignature:
    """Keep the lowest b bits of each minimum."""
    if not 1 <= b <= MAX_SIGNATURE_BITS:
        raise ValueError(f"b must be in [1, {MAX_SIGNATURE_BITS}], got {b}")
    vals = (sig.values & np.uint64((1 << b) - 1)).astype(np.uint16)
    return BbitSignature(sig.k, b, vals)


def match_count(x: BbitSignature, y: BbitSignature) -> int:
    """Number of coordinates where the two signatures agree."""
    if x.k != y.k or x.b != y.b:
        raise IncompatibleSignatureError(
            f"signatures disagree: (k={x.k}, b={x.b}) vs (k={y.k}, b={y.b})"
        )
    return int(np.count_nonzero(x.values == y.values))


def signature_byte_size(k: int, b: int) -> int:
    """Bytes per packed record: ceil(k * b / 8)."""
    return (k * b + 7) // 8


def pack_bbit_values(values: np.ndarray, b: int) -> bytes:
    """Pack k b-bit values into ceil(k*b/8) bytes, little-endian bit order.

    Value j occupies bit positions j*b .. j*b + b - 1 of the bit stream,
    least significant bit first; bit t of the stream is bit t % 8 of byte
    t // 8. Trailing pad bits are zero.
    """
    vals = np.asarray(values, dtype=np.uint16)
    shifts = np.arange(b, dtype=np.uint16)
    bits = ((vals[:, None] >> shifts) & np.uint16(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def unpack_bbit_values(payload: bytes, k: int, b: int) -> np.ndarray:
    expected = signature_byte_size(k, b)
    if len(payload) != expected:
        raise ValueError(f"payload has {len(payload)} bytes, expected {expected}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=k * b, bitorder="little")
    weights = (np.uint16(1) << np.arange(b, dtype=np.uint16)).astype(np.uint16)
    vals = (bits.reshape(k, b).astype(np.uint16) * weights).sum(axis=1)
    return vals.astype(np.uint16)


def write_signature_stream(fh: BinaryIO, signatures: Iterable[BbitSignature], k: int, b: int) -> int:
    """Write the binary signature format; returns the record count.

    The header's record count is patched after the payload is written, so
    the input can be a generator of unknown length (the stream must be
    seekable).
    """
    fh.write(_SIG_HEADER.pack(_SIG_MAGIC, _SIG_VERSION, k, b, 0))
    count = 0
    for sig in signatures:
        if sig.k != k or sig.b != b:
            raise IncompatibleSignatureError(
                f"record {count} has (k={sig.k}, b={sig.b}), file header says (k={k}, b={b})"
            )
        fh.write(sig.packed)
        count += 1
    end = fh.tell()
    fh.seek(0)
    fh.write(_SIG_HEADER.pack(_SIG_MAGIC, _SIG_VERSION, k, b, count))
    fh.seek(end)
    return count


def write_signature_file(path, signatures: Iterable[BbitSignature], k: int, b: int) -> int:
    with open(path, "wb") as fh:
        return write_signature_stream(fh, signatures, k, b)


def read_signature_header(fh: BinaryIO) -> tuple[int, int, int]:
    """Parse and validate the header; returns (k, b, record_count)."""
    raw = fh.read(_SIG_HEADER.size)
    if len(raw) != _SIG_HEADER.size:
        raise ValueError("truncated signature file header")
    magic, version, k, b, count = _SIG_HEADER.unpack(raw)
    if magic != _SIG_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {_SIG_MAGIC!r}")
    if version != _SIG_VERSION:
        raise ValueError(f"unsupported signature file version {version}")
    if k < 1 or not 1 <= b <= MAX_SIGNATURE_BITS:
        raise ValueError(f"invalid header fields k={k}, b={b}")
    return k, b, count


def iter_signature_file(path) -> Iterator[BbitSignature]:
    with open(path, "rb") as fh:
        k, b, count = read_signature_header(fh)
        rec = signature_byte_size(k, b)
        for i in range(count):
            payload = fh.read(rec)
            if len(payload) != rec:
                raise ValueError(f"record {i} truncated: {len(payload)} of {rec} bytes")
            yield BbitSignature.from_packed(k, b, payload)
        if fh.read(1):
            raise ValueError(f"trailing bytes after {count} records")


def read_signature_file(path) -> tuple[int, int, list[BbitSignature]]:
    with open(path, "rb") as fh:
        k, b, _ = read_signature_header(fh)
    return k, b, list(iter_signature_file(path))
