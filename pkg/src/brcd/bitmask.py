"""Per-cluster bit expectations, redundancy-bit masks and masked cosine similarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodeMatrix
from .errors import DimensionError, InvalidInputError

__all__ = [
    "BitMaskSet",
    "DELTA_GRID",
    "bit_expectation",
    "make_masks",
    "masks_from_clusters",
    "masked_cosine",
    "bit_frequency_histogram",
]

DELTA_GRID = (0.2, 0.3, 0.4, 0.5, 0.6)


def _pm1(cluster_codes) -> np.ndarray:
    x = cluster_codes.to_pm1() if isinstance(cluster_codes, CodeMatrix) else np.asarray(cluster_codes)
    x = np.atleast_2d(x)
    if x.shape[0] == 0:
        raise InvalidInputError("empty cluster")
    return x.astype(np.float64)


def bit_expectation(cluster_codes) -> np.ndarray:
    """``|mean|`` of each dimension over a cluster: 1 for a constant bit, ~0 for a balanced one."""
    x = _pm1(cluster_codes)
    return np.abs(x.sum(0)) / x.shape[0]


def bit_frequency_histogram(cluster_codes) -> np.ndarray:
    """Per-dimension share of +1 and -1, shape (b, 2)."""
    x = _pm1(cluster_codes)
    plus = (x > 0).sum(0) / x.shape[0]
    return np.stack([plus, 1.0 - plus], axis=1)


@dataclass(frozen=True, eq=False)
class BitMaskSet:
    masks: np.ndarray  # (k, b) uint8 in {0, 1}
    expectations: np.ndarray  # (k, b) float64 in [0, 1]
    delta: float

    def __post_init__(self):
        m = np.array(self.masks, dtype=np.uint8, copy=True)
        e = np.array(self.expectations, dtype=np.float64, copy=True)
        if m.shape != e.shape or m.ndim != 2:
            raise DimensionError("masks and expectations must both be (k, b)")
        if not np.array_equal(m, (e >= self.delta).astype(np.uint8)):
            raise InvalidInputError("masks disagree with expectations at this delta")
        m.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "masks", m)
        object.__setattr__(self, "expectations", e)

    @property
    def k(self) -> int:
        return self.masks.shape[0]

    @property
    def b(self) -> int:
        return self.masks.shape[1]

    @classmethod
    def all_ones(cls, k: int, b: int) -> "BitMaskSet":
        return cls(np.ones((k, b), np.uint8), np.ones((k, b)), 0.0)

    def for_labels(self, labels) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise InvalidInputError(f"cluster label out of range for {self.k} masks")
        return self.masks[labels]


def make_masks(expectations, delta: float) -> BitMaskSet:
    """Keep a bit (mask 1) where its cluster expectation reaches ``delta``."""
    if not 0.0 <= delta <= 1.0:
        raise InvalidInputError(f"delta must lie in [0, 1], got {delta}")
    e = np.atleast_2d(np.asarray(expectations, dtype=np.float64))
    return BitMaskSet((e >= delta).astype(np.uint8), e, float(delta))


def masks_from_clusters(codes: CodeMatrix, assignments, k: int, delta: float) -> BitMaskSet:
    """Expectations of every cluster of ``codes`` (labels in ``assignments``, row-aligned), thresholded.

    A cluster with no members gets zero expectation; no batch member can carry its label.
    """
    labels = np.asarray(assignments, dtype=np.int64)
    if labels.size != len(codes):
        raise DimensionError("one label per code required")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InvalidInputError(f"cluster label out of range for k={k}")
    x = codes.to_pm1()
    e = np.zeros((k, codes.b))
    for c in range(k):
        members = x[labels == c]
        if len(members):
            e[c] = bit_expectation(members)
    return make_masks(e, delta)


def masked_cosine(a, mask_a, b, mask_b) -> float:
    """Cosine of the two vectors after zeroing each one's masked-out dimensions.

    Returns 0 when either masked vector is all zero.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    mask_a = np.asarray(mask_a, dtype=np.float64).reshape(-1)
    mask_b = np.asarray(mask_b, dtype=np.float64).reshape(-1)
    if not (a.size == b.size == mask_a.size == mask_b.size):
        raise DimensionError("vectors and masks must share one length")
    u = a * mask_a
    v = b * mask_b
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))
