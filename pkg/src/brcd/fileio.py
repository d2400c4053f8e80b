"""Binary file formats for codes, embeddings and labels.

All integers are little-endian u32 and every file opens with an 8-byte magic:

* ``BRCDCOD1``: N, b, then N rows of ceil(b/8) packed bytes
* ``BRCDEMB1``: N, dim, then N*dim float32 values, row-major
* ``BRCDLAB1``: N, then N u32 labels
"""

from __future__ import annotations

import os

import numpy as np

from .codes import CodeMatrix
from .errors import FormatError

CODES_MAGIC = b"BRCDCOD1"
EMB_MAGIC = b"BRCDEMB1"
LABELS_MAGIC = b"BRCDLAB1"

_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")


def _read_header(buf: bytes, magic: bytes, n_fields: int, path) -> tuple[int, ...]:
    need = len(magic) + 4 * n_fields
    if len(buf) < need:
        raise FormatError(f"{path}: file too short for a {magic.decode()} header")
    if buf[: len(magic)] != magic:
        raise FormatError(f"{path}: bad magic {buf[:len(magic)]!r}, expected {magic!r}")
    return tuple(int(v) for v in np.frombuffer(buf, _U32, n_fields, len(magic)))


def _slurp(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _dump(path, *chunks: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        for c in chunks:
            f.write(c)
    os.replace(tmp, path)


def write_codes(path, codes: CodeMatrix):
    head = np.array([len(codes), codes.b], dtype=_U32).tobytes()
    _dump(path, CODES_MAGIC, head, np.ascontiguousarray(codes.packed).tobytes())


def read_codes(path, id_offset: int = 0) -> CodeMatrix:
    buf = _slurp(path)
    n, b = _read_header(buf, CODES_MAGIC, 2, path)
    if b < 1:
        raise FormatError(f"{path}: code length must be >= 1")
    row = (b + 7) // 8
    body = memoryview(buf)[len(CODES_MAGIC) + 8 :]
    if len(body) != n * row:
        raise FormatError(f"{path}: expected {n * row} payload bytes, found {len(body)}")
    packed = np.frombuffer(body, np.uint8).reshape(n, row)
    return CodeMatrix(packed, b, np.arange(n, dtype=np.int64) + id_offset)


def write_embeddings(path, x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError("embeddings must be 2-D")
    head = np.array(x.shape, dtype=_U32).tobytes()
    _dump(path, EMB_MAGIC, head, np.ascontiguousarray(x, dtype=_F32).tobytes())


def read_embeddings(path) -> np.ndarray:
    buf = _slurp(path)
    n, dim = _read_header(buf, EMB_MAGIC, 2, path)
    body = memoryview(buf)[len(EMB_MAGIC) + 8 :]
    if len(body) != 4 * n * dim:
        raise FormatError(f"{path}: expected {4 * n * dim} payload bytes, found {len(body)}")
    return np.frombuffer(body, _F32).reshape(n, dim).astype(np.float32)


def write_labels(path, labels):
    labels = np.asarray(labels)
    if labels.ndim != 1 or (labels.size and labels.min() < 0):
        raise ValueError("labels must be a 1-D array of non-negative integers")
    head = np.array([labels.size], dtype=_U32).tobytes()
    _dump(path, LABELS_MAGIC, head, labels.astype(_U32).tobytes())


def read_labels(path) -> np.ndarray:
    buf = _slurp(path)
    (n,) = _read_header(buf, LABELS_MAGIC, 1, path)
    body = memoryview(buf)[len(LABELS_MAGIC) + 4 :]
    if len(body) != 4 * n:
        raise FormatError(f"{path}: expected {4 * n} payload bytes, found {len(body)}")
    return np.frombuffer(body, _U32).astype(np.int64)


STUDENT_MAGIC = b"BRCDSTU1"
ARCH_TAGS = {"linear": 0, "mlp": 1}
_PARAM_ORDER = {"linear": ("W1", "c1"), "mlp": ("W1", "c1", "W2", "c2")}


def write_student(path, arch: str, params: dict):
    """``BRCDSTU1``, u32 arch tag, u32 array count, per array u32 ndim + dims, then float32 data."""
    if arch not in ARCH_TAGS:
        raise ValueError(f"unknown architecture {arch!r}")
    names = _PARAM_ORDER[arch]
    head = [ARCH_TAGS[arch], len(names)]
    data = []
    for name in names:
        a = np.asarray(params[name])
        head += [a.ndim, *a.shape]
        data.append(np.ascontiguousarray(a, dtype=_F32).tobytes())
    _dump(path, STUDENT_MAGIC, np.array(head, dtype=_U32).tobytes(), *data)


def read_student(path) -> tuple[str, dict]:
    buf = _slurp(path)
    tag, n = _read_header(buf, STUDENT_MAGIC, 2, path)
    arch = {v: k for k, v in ARCH_TAGS.items()}.get(tag)
    if arch is None or n != len(_PARAM_ORDER[arch]):
        raise FormatError(f"{path}: unknown architecture tag {tag} with {n} arrays")
    off = len(STUDENT_MAGIC) + 8
    shapes = []
    for _ in range(n):
        if off + 4 > len(buf):
            raise FormatError(f"{path}: truncated shape table")
        ndim = int(np.frombuffer(buf, _U32, 1, off)[0])
        shapes.append(tuple(int(v) for v in np.frombuffer(buf, _U32, ndim, off + 4)))
        off += 4 + 4 * ndim
    params = {}
    for name, shape in zip(_PARAM_ORDER[arch], shapes):
        count = int(np.prod(shape))
        if off + 4 * count > len(buf):
            raise FormatError(f"{path}: truncated weights")
        params[name] = np.frombuffer(buf, _F32, count, off).reshape(shape).astype(np.float64)
        off += 4 * count
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} trailing bytes")
    return arch, params
