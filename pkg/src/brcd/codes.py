"""Packed ±1 hash codes and the Hamming / cosine arithmetic on them.

Logical +1 is stored as bit 1 and -1 as bit 0.  Dimension ``r`` lives in
byte ``r // 8`` at bit ``r % 8`` (little bit order), rows are padded to whole
bytes and the padding bits are always zero.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InvalidInputError

__all__ = [
    "BitCode",
    "CodeMatrix",
    "pack_pm1",
    "unpack_pm1",
    "sign_quantize",
    "sign_quantize_rows",
    "hamming",
    "dot_pm1",
    "cosine",
    "hamming_rows",
    "dot_rows",
    "hamming_matrix",
    "popcount",
]


def _nbytes(b: int) -> int:
    return (b + 7) // 8


def _pad_mask(b: int) -> np.ndarray:
    """Per-byte mask of the logical bits of a length-``b`` row."""
    m = np.full(_nbytes(b), 0xFF, dtype=np.uint8)
    rem = b % 8
    if rem:
        m[-1] = (1 << rem) - 1
    return m


def popcount(x: np.ndarray, axis=-1) -> np.ndarray:
    """Number of set bits in a uint8 array, summed along ``axis``."""
    return np.bitwise_count(x).sum(axis=axis, dtype=np.int64)


def pack_pm1(values) -> np.ndarray:
    """Pack a ±1 array of shape (..., b) into uint8 rows of shape (..., ceil(b/8))."""
    arr = np.asarray(values)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise InvalidInputError("code length must be >= 1")
    if not np.all((arr == 1) | (arr == -1)):
        raise InvalidInputError("code entries must be exactly -1 or +1")
    return np.packbits(arr > 0, axis=-1, bitorder="little")


def unpack_pm1(packed: np.ndarray, b: int) -> np.ndarray:
    """Inverse of :func:`pack_pm1`; returns int8 values in {-1, +1}."""
    bits = np.unpackbits(np.asarray(packed, dtype=np.uint8), axis=-1, count=b, bitorder="little")
    return (bits.astype(np.int8) << 1) - 1


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


class BitCode:
    """A single packed ±1 code of logical length ``b``."""

    __slots__ = ("packed", "b")

    def __init__(self, packed, b: int):
        b = int(b)
        if b < 1:
            raise InvalidInputError("code length must be >= 1")
        packed = np.asarray(packed, dtype=np.uint8).reshape(-1)
        if packed.size != _nbytes(b):
            raise DimensionError(f"expected {_nbytes(b)} bytes for b={b}, got {packed.size}")
        if np.any(packed & ~_pad_mask(b)):
            raise InvalidInputError("padding bits must be zero")
        object.__setattr__(self, "packed", _readonly(packed))
        object.__setattr__(self, "b", b)

    def __setattr__(self, name, value):
        raise AttributeError("BitCode is immutable")

    @classmethod
    def from_pm1(cls, values) -> "BitCode":
        arr = np.asarray(values).reshape(-1)
        return cls(pack_pm1(arr), arr.size)

    def to_pm1(self) -> np.ndarray:
        return unpack_pm1(self.packed, self.b)

    def complement(self) -> "BitCode":
        return BitCode(~self.packed & _pad_mask(self.b), self.b)

    def __eq__(self, other):
        if not isinstance(other, BitCode):
            return NotImplemented
        return self.b == other.b and bool(np.array_equal(self.packed, other.packed))

    def __hash__(self):
        return hash((self.b, self.packed.tobytes()))

    def __repr__(self):
        s = "".join("+" if v > 0 else "-" for v in self.to_pm1()[:32])
        return f"BitCode(b={self.b}, {s}{'...' if self.b > 32 else ''})"


class CodeMatrix:
    """N packed codes of a common length ``b`` with unique integer ids."""

    __slots__ = ("packed", "b", "ids")

    def __init__(self, packed, b: int, ids=None):
        b = int(b)
        if b < 1:
            raise InvalidInputError("code length must be >= 1")
        packed = np.asarray(packed, dtype=np.uint8)
        if packed.ndim != 2 or packed.shape[1] != _nbytes(b):
            raise DimensionError(f"packed rows must have shape (N, {_nbytes(b)}), got {packed.shape}")
        if np.any(packed & ~_pad_mask(b)):
            raise InvalidInputError("padding bits must be zero")
        if ids is None:
            ids = np.arange(packed.shape[0], dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if ids.size != packed.shape[0]:
            raise DimensionError("one id per row required")
        if np.unique(ids).size != ids.size:
            raise InvalidInputError("ids must be unique")
        object.__setattr__(self, "packed", _readonly(packed))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "ids", _readonly(ids))

    def __setattr__(self, name, value):
        raise AttributeError("CodeMatrix is immutable")

    @classmethod
    def from_pm1(cls, values, ids=None) -> "CodeMatrix":
        arr = np.asarray(values)
        if arr.ndim != 2:
            raise DimensionError("expected a 2-D array of codes")
        return cls(pack_pm1(arr), arr.shape[1], ids)

    @classmethod
    def from_codes(cls, codes, ids=None) -> "CodeMatrix":
        codes = list(codes)
        if not codes:
            raise InvalidInputError("no codes given")
        b = codes[0].b
        if any(c.b != b for c in codes):
            raise DimensionError("all codes must share the same length")
        return cls(np.stack([c.packed for c in codes]), b, ids)

    def to_pm1(self) -> np.ndarray:
        return unpack_pm1(self.packed, self.b)

    def complement(self) -> "CodeMatrix":
        return CodeMatrix(~self.packed & _pad_mask(self.b), self.b, self.ids)

    def take(self, rows) -> "CodeMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return CodeMatrix(self.packed[rows], self.b, self.ids[rows])

    def with_ids(self, ids) -> "CodeMatrix":
        return CodeMatrix(self.packed, self.b, ids)

    def __len__(self):
        return self.packed.shape[0]

    def __getitem__(self, i) -> BitCode:
        return BitCode(self.packed[i], self.b)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, CodeMatrix):
            return NotImplemented
        return (
            self.b == other.b
            and np.array_equal(self.packed, other.packed)
            and np.array_equal(self.ids, other.ids)
        )

    __hash__ = None

    def __repr__(self):
        return f"CodeMatrix(N={len(self)}, b={self.b})"


def _check_finite(v: np.ndarray):
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("input contains non-finite values")


def sign_quantize(v) -> BitCode:
    """Binarize a relaxed code: ``v_r >= 0`` maps to +1, everything else to -1."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size < 1:
        raise InvalidInputError("empty vector")
    _check_finite(v)
    return BitCode(np.packbits(v >= 0, bitorder="little"), v.size)


def sign_quantize_rows(V, ids=None) -> CodeMatrix:
    """Row-wise :func:`sign_quantize` of a 2-D array."""
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] < 1:
        raise DimensionError("expected a non-empty 2-D array")
    _check_finite(V)
    return CodeMatrix(np.packbits(V >= 0, axis=1, bitorder="little"), V.shape[1], ids)


def _same_b(a, b):
    if a.b != b.b:
        raise DimensionError(f"code lengths differ: {a.b} vs {b.b}")


def hamming(a: BitCode, b: BitCode) -> int:
    _same_b(a, b)
    return int(popcount(a.packed ^ b.packed))


def dot_pm1(a: BitCode, b: BitCode) -> int:
    """Inner product of the logical ±1 vectors."""
    _same_b(a, b)
    return int(np.dot(a.to_pm1().astype(np.int64), b.to_pm1().astype(np.int64)))


def _as_vector(x) -> np.ndarray:
    if isinstance(x, BitCode):
        return x.to_pm1().astype(np.float64)
    return np.asarray(x, dtype=np.float64).reshape(-1)


def cosine(a, b) -> float:
    """Cosine similarity of two vectors (or BitCodes); 0 if either is the zero vector."""
    a = _as_vector(a)
    b = _as_vector(b)
    if a.size != b.size:
        raise DimensionError(f"vector lengths differ: {a.size} vs {b.size}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def hamming_rows(A: CodeMatrix, B: CodeMatrix) -> np.ndarray:
    """Hamming distance between row i of ``A`` and row i of ``B``."""
    _same_b(A, B)
    if len(A) != len(B):
        raise DimensionError("row counts differ")
    return popcount(A.packed ^ B.packed, axis=1)


def dot_rows(A: CodeMatrix, B: CodeMatrix) -> np.ndarray:
    """Row-wise :func:`dot_pm1`, from the unpacked ±1 values."""
    _same_b(A, B)
    if len(A) != len(B):
        raise DimensionError("row counts differ")
    return np.einsum("ij,ij->i", A.to_pm1().astype(np.int64), B.to_pm1().astype(np.int64))


def hamming_matrix(Q, D) -> np.ndarray:
    """All-pairs distances, shape (len(Q), len(D)).  Accepts CodeMatrix or raw packed arrays."""
    if isinstance(Q, CodeMatrix) and isinstance(D, CodeMatrix):
        _same_b(Q, D)
    qp = Q.packed if isinstance(Q, CodeMatrix) else np.asarray(Q, dtype=np.uint8)
    dp = D.packed if isinstance(D, CodeMatrix) else np.asarray(D, dtype=np.uint8)
    if qp.shape[-1] != dp.shape[-1]:
        raise DimensionError("code lengths differ")
    return popcount(qp[:, None, :] ^ dp[None, :, :], axis=2)
