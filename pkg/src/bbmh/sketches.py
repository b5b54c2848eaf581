"""Linear sketches of sparse vectors and their inner-product estimators.

Three sketch kinds over a universe of indices:

* "cm": each index hashes to one of k buckets; bucket values add up.
  The bucket dot product overestimates the true inner product by
  (sum(u1) sum(u2) - <u1, u2>) / k in expectation.
* "vw": like "cm" but each index also carries a fixed random sign, so
  the bucket dot product is unbiased.
* "rp": dense random projection onto k coordinates; the dot product
  divided by k is unbiased.

Signs and projection entries come from a distribution with moments
E r = E r^3 = 0, E r^2 = 1, E r^4 = s: either the three-point family
sqrt(s) * {+1 w.p. 1/(2s), 0 w.p. 1 - 1/s, -1 w.p. 1/(2s)} or the
standard normal (s = 3). Variances of all estimators depend on the
distribution only through s.

Bucket and sign choices derive from (seed, index) by keyed 64-bit
mixing with per-purpose stream keys, so sketches built independently
from the same seed are compatible, and "cm" and "vw" sketches with the
same seed share bucket assignments.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

import numpy as np
from scipy.special import ndtri

from .errors import IncompatibleSketchError
from .hashing import GOLDEN, MASK64, SparseSet, mix64, mix64_array

SKETCH_KINDS = ("cm", "vw", "rp")

_TAG_BUCKET = 0x5B7C_2A1D_93E4_F60B
_TAG_SIGN = 0xA3D8_41C7_6F05_B92E
_TAG_PROJECTION = 0x1E9F_7B24_C8D3_065A

_SK_MAGIC = b"SKCH"
_SK_VERSION = 1
# magic, version u8, kind u8, s f64, k u32, seed u64, record_count u64
_SK_HEADER = struct.Struct("<4sBBdIQQ")
_KIND_CODES = {"cm": 0, "vw": 1, "rp": 2}
_KIND_NAMES = {v: n for n, v in _KIND_CODES.items()}
_NORMAL_FLAG = 0x10  # set in the kind byte when the sign family is normal


@dataclass(frozen=True)
class SignDistribution:
    """Zero-mean, unit-variance sign/entry distribution with zero third
    moment and fourth moment s."""

    s: float = 1.0
    family: str = "sparse"

    def __post_init__(self):
        if self.family == "sparse":
            if not self.s >= 1.0:
                raise ValueError(f"sparse family needs s >= 1, got {self.s}")
        elif self.family == "normal":
            if self.s != 3.0:
                raise ValueError("the normal family has fourth moment exactly 3")
        else:
            raise ValueError(f"family must be 'sparse' or 'normal', got {self.family!r}")

    @classmethod
    def normal(cls) -> "SignDistribution":
        return cls(3.0, "normal")

    def values_from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on [0, 1) to draws from the distribution."""
        u = np.asarray(u, dtype=np.float64)
        if self.family == "normal":
            return ndtri(np.clip(u, 1e-17, 1.0 - 1e-17))
        root = math.sqrt(self.s)
        half = 1.0 / (2.0 * self.s)
        return np.where(u < half, root, np.where(u >= 1.0 - half, -root, 0.0))


@dataclass(frozen=True)
class SparseVector:
    """Sparse real vector over {0, ..., universe_size - 1}."""

    universe_size: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.universe_size < 1:
            raise ValueError(f"universe_size must be >= 1, got {self.universe_size}")
        idx = np.asarray(self.indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or vals.shape != idx.shape:
            raise ValueError("indices and values must be one-dimensional and aligned")
        if idx.size:
            if int(idx.min()) < 0 or int(idx.max()) >= self.universe_size:
                raise ValueError(f"indices must lie in [0, {self.universe_size})")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_set(cls, s: SparseSet) -> "SparseVector":
        return cls(s.universe_size, s.indices, np.ones(s.indices.size))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)


def pair_moments(v1: SparseVector, v2: SparseVector) -> dict[str, float]:
    """The aligned moments every estimator law is written in: the inner
    product, marginal sums, marginal sums of squares, and the sum of
    squared products over shared indices."""
    if v1.universe_size != v2.universe_size:
        raise ValueError("vectors must share a universe")
    shared, i1, i2 = np.intersect1d(v1.indices, v2.indices, assume_unique=True, return_indices=True)
    prod = v1.values[i1] * v2.values[i2]
    return {
        "inner": float(prod.sum()),
        "sum1": float(v1.values.sum()),
        "sum2": float(v2.values.sum()),
        "sumsq1": float((v1.values**2).sum()),
        "sumsq2": float((v2.values**2).sum()),
        "sum_cross_sq": float((prod**2).sum()),
    }


def _stream_key(seed: int, tag: int) -> np.uint64:
    return np.uint64(mix64(mix64(seed) ^ tag))


def _mixed_elements(indices: np.ndarray) -> np.ndarray:
    return mix64_array(indices.astype(np.uint64) + np.uint64(1))


def _bucket_of(indices: np.ndarray, k: int, seed: int) -> np.ndarray:
    h = mix64_array(_mixed_elements(indices) ^ _stream_key(seed, _TAG_BUCKET))
    return (h % np.uint64(k)).astype(np.int64)


def _uniforms(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _sign_values(indices: np.ndarray, seed: int, sign: SignDistribution) -> np.ndarray:
    h = mix64_array(_mixed_elements(indices) ^ _stream_key(seed, _TAG_SIGN))
    return sign.values_from_uniform(_uniforms(h))


@dataclass(frozen=True)
class SketchVector:
    """k summary coordinates plus the parameters needed to interpret
    them. Estimation requires two sketches built with identical
    parameters."""

    kind: str
    k: int
    seed: int
    sign: SignDistribution
    coords: np.ndarray

    def __post_init__(self):
        if self.kind not in SKETCH_KINDS:
            raise ValueError(f"kind must be one of {SKETCH_KINDS}, got {self.kind!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.shape != (self.k,):
            raise ValueError(f"expected {self.k} coordinates, got shape {coords.shape}")
        object.__setattr__(self, "coords", coords)


def cm_sketch(v: SparseVector, k: int, seed: int) -> SketchVector:
    """Bucket sums; for nonnegative vectors each bucket overcounts."""
    buckets = _bucket_of(v.indices, k, seed)
    coords = np.bincount(buckets, weights=v.values, minlength=k)
    return SketchVector("cm", k, seed, SignDistribution(1.0), coords)


def vw_sketch(
    v: SparseVector, k: int, seed: int, sign: SignDistribution = SignDistribution(1.0)
) -> SketchVector:
    """Signed bucket sums; the bucket dot product is unbiased."""
    buckets = _bucket_of(v.indices, k, seed)
    signed = v.values * _sign_values(v.indices, seed, sign)
    coords = np.bincount(buckets, weights=signed, minlength=k)
    return SketchVector("vw", k, seed, sign, coords)


def rp_sketch(
    v: SparseVector, k: int, seed: int, sign: SignDistribution = SignDistribution(1.0)
) -> SketchVector:
    """Dense projection: coordinate j is <v, r_j> with i.i.d. entries."""
    base = _stream_key(seed, _TAG_PROJECTION)
    keys = mix64_array(np.uint64(base) ^ (np.arange(1, k + 1, dtype=np.uint64) * np.uint64(GOLDEN)))
    h = mix64_array(_mixed_elements(v.indices)[:, None] ^ keys[None, :])
    entries = sign.values_from_uniform(_uniforms(h))
    coords = v.values @ entries
    return SketchVector("rp", k, seed, sign, coords)


def _check_compatible(x: SketchVector, y: SketchVector) -> None:
    if x.kind != y.kind or x.k != y.k or x.seed != y.seed or x.sign != y.sign:
        raise IncompatibleSketchError(
            f"sketches disagree: ({x.kind}, k={x.k}, seed={x.seed}, sign={x.sign}) "
            f"vs ({y.kind}, k={y.k}, seed={y.seed}, sign={y.sign})"
        )


def estimate_inner(x: SketchVector, y: SketchVector, estimator: str | None = None) -> float:
    """Inner-product estimate from two compatible sketches.

    estimator defaults to the sketch kind; "cm_unbiased" applies the
    bias correction to "cm" sketches using the marginal sums, which the
    bucket coordinates preserve exactly.
    """
    _check_compatible(x, y)
    if estimator is None:
        estimator = x.kind
    if estimator in ("cm", "vw"):
        if x.kind != estimator:
            raise IncompatibleSketchError(f"estimator {estimator!r} needs {estimator!r} sketches")
        return float(x.coords @ y.coords)
    if estimator == "rp":
        if x.kind != "rp":
            raise IncompatibleSketchError("estimator 'rp' needs 'rp' sketches")
        return float(x.coords @ y.coords) / x.k
    if estimator == "cm_unbiased":
        if x.kind != "cm":
            raise IncompatibleSketchError("estimator 'cm_unbiased' needs 'cm' sketches")
        if x.k < 2:
            raise ValueError("the bias correction needs k >= 2")
        plain = float(x.coords @ y.coords)
        m1 = float(x.coords.sum())
        m2 = float(y.coords.sum())
        return (x.k / (x.k - 1.0)) * (plain - m1 * m2 / x.k)
    raise ValueError(f"unknown estimator {estimator!r}")


# ----------------------------------------------------------------------
# estimator laws (population expectations and variances)


def expectation_cm(v1: SparseVector, v2: SparseVector, k: int) -> float:
    m = pair_moments(v1, v2)
    return m["inner"] + (m["sum1"] * m["sum2"] - m["inner"]) / k


def variance_cm(v1: SparseVector, v2: SparseVector, k: int) -> float:
    m = pair_moments(v1, v2)
    core = m["sumsq1"] * m["sumsq2"] + m["inner"] ** 2 - 2.0 * m["sum_cross_sq"]
    return (1.0 / k) * (1.0 - 1.0 / k) * core


def variance_cm_unbiased(v1: SparseVector, v2: SparseVector, k: int) -> float:
    if k < 2:
        raise ValueError("the bias-corrected estimator needs k >= 2")
    m = pair_moments(v1, v2)
    core = m["sumsq1"] * m["sumsq2"] + m["inner"] ** 2 - 2.0 * m["sum_cross_sq"]
    return core / (k - 1.0)


def variance_vw(v1: SparseVector, v2: SparseVector, k: int, s: float = 1.0) -> float:
    m = pair_moments(v1, v2)
    core = m["sumsq1"] * m["sumsq2"] + m["inner"] ** 2 - 2.0 * m["sum_cross_sq"]
    return (s - 1.0) * m["sum_cross_sq"] + core / k


def variance_rp(v1: SparseVector, v2: SparseVector, k: int, s: float = 1.0) -> float:
    m = pair_moments(v1, v2)
    return (m["sumsq1"] * m["sumsq2"] + m["inner"] ** 2 + (s - 3.0) * m["sum_cross_sq"]) / k


# ----------------------------------------------------------------------
# file format


def _kind_byte(kind: str, sign: SignDistribution) -> int:
    code = _KIND_CODES[kind]
    if sign.family == "normal":
        code |= _NORMAL_FLAG
    return code


def _kind_from_byte(code: int, s: float) -> tuple[str, SignDistribution]:
    name = _KIND_NAMES.get(code & 0x0F)
    if name is None:
        raise ValueError(f"unknown sketch kind code {code}")
    family = "normal" if code & _NORMAL_FLAG else "sparse"
    return name, SignDistribution(s, family)


def write_sketch_stream(fh: BinaryIO, sketches: Iterable[SketchVector]) -> int:
    """Write sketches sharing one (kind, s, k, seed); returns the count.
    The header count is patched at the end (stream must be seekable)."""
    count = 0
    first: SketchVector | None = None
    for sk in sketches:
        if first is None:
            first = sk
            fh.write(
                _SK_HEADER.pack(
                    _SK_MAGIC, _SK_VERSION, _kind_byte(sk.kind, sk.sign), sk.sign.s, sk.k, sk.seed, 0
                )
            )
        else:
            _check_compatible(first, sk)
        fh.write(sk.coords.astype("<f8").tobytes())
        count += 1
    if first is None:
        raise ValueError("cannot write an empty sketch file (header parameters unknown)")
    end = fh.tell()
    fh.seek(0)
    fh.write(
        _SK_HEADER.pack(
            _SK_MAGIC, _SK_VERSION, _kind_byte(first.kind, first.sign), first.sign.s, first.k, first.seed, count
        )
    )
    fh.seek(end)
    return count


def write_sketch_file(path, sketches: Iterable[SketchVector]) -> int:
    with open(path, "wb") as fh:
        return write_sketch_stream(fh, sketches)


def read_sketch_header(fh: BinaryIO) -> tuple[str, SignDistribution, int, int, int]:
    raw = fh.read(_SK_HEADER.size)
    if len(raw) != _SK_HEADER.size:
        raise ValueError("truncated sketch file header")
    magic, version, code, s, k, seed, count = _SK_HEADER.unpack(raw)
    if magic != _SK_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {_SK_MAGIC!r}")
    if version != _SK_VERSION:
        raise ValueError(f"unsupported sketch file version {version}")
    kind, sign = _kind_from_byte(code, s)
    if k < 1:
        raise ValueError(f"invalid k={k}")
    return kind, sign, k, seed, count


def iter_sketch_file(path) -> Iterator[SketchVector]:
    with open(path, "rb") as fh:
        kind, sign, k, seed, count = read_sketch_header(fh)
        row = 8 * k
        for i in range(count):
            raw = fh.read(row)
            if len(raw) != row:
                raise ValueError(f"record {i} truncated: {len(raw)} of {row} bytes")
            coords = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            yield SketchVector(kind, k, seed, sign, coords)
        if fh.read(1):
            raise ValueError(f"trailing bytes after {count} records")


def read_sketch_file(path) -> list[SketchVector]:
    return list(iter_sketch_file(path))
