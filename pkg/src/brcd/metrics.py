"""Retrieval and teacher/student alignment metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .codes import CodeMatrix, hamming_matrix, hamming_rows
from .errors import DimensionError, InvalidInputError

__all__ = ["RankedResult", "RelevanceJudge", "map_at_k", "average_precision_at_k", "isd", "nra_at_k", "opr"]


@dataclass(frozen=True)
class RankedResult:
    query_id: int
    hits: tuple  # ((candidate_id, distance), ...)

    def __post_init__(self):
        hits = tuple((int(c), int(d)) for c, d in self.hits)
        object.__setattr__(self, "hits", hits)
        dists = [d for _, d in hits]
        if any(b < a for a, b in zip(dists, dists[1:])):
            raise InvalidInputError("hit distances must be non-decreasing")
        if len({c for c, _ in hits}) != len(hits):
            raise InvalidInputError("candidate ids must be unique within a result")

    @property
    def ids(self) -> np.ndarray:
        return np.array([c for c, _ in self.hits], dtype=np.int64)

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for _, d in self.hits], dtype=np.int64)


class RelevanceJudge:
    """Maps ids to class labels; two items are relevant iff their labels match."""

    def __init__(self, labels: Mapping[int, int] | None = None, *, ids=None, values=None):
        if labels is not None:
            ids = np.fromiter(labels.keys(), dtype=np.int64, count=len(labels))
            values = np.fromiter(labels.values(), dtype=np.int64, count=len(labels))
        else:
            ids = np.asarray(ids, dtype=np.int64).reshape(-1)
            values = np.asarray(values, dtype=np.int64).reshape(-1)
            if ids.size != values.size:
                raise DimensionError("ids and labels differ in length")
        order = np.argsort(ids, kind="stable")
        self._ids = ids[order]
        self._values = values[order]
        if np.any(self._ids[1:] == self._ids[:-1]):
            raise InvalidInputError("duplicate id in relevance labels")

    @classmethod
    def from_arrays(cls, ids, labels) -> "RelevanceJudge":
        return cls(ids=ids, values=labels)

    def labels_of(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        pos = np.searchsorted(self._ids, ids)
        pos_c = np.minimum(pos, max(self._ids.size - 1, 0))
        if self._ids.size == 0 or np.any(self._ids[pos_c] != ids):
            missing = ids[(self._ids.size == 0) | (self._ids[pos_c] != ids)]
            raise InvalidInputError(f"no label for id(s) {missing[:5].tolist()}")
        return self._values[pos_c]

    def label(self, id_) -> int:
        return int(self.labels_of([id_])[0])

    def __len__(self):
        return self._ids.size


def average_precision_at_k(relevant, K: int) -> float:
    """AP over the first K entries of a 0/1 relevance sequence.

    Normalised by the number of relevant items found within the top K, so a
    list with no relevant item scores 0.
    """
    rel = np.asarray(relevant, dtype=np.float64)[:K]
    n_rel = rel.sum()
    if n_rel == 0:
        return 0.0
    prec = np.cumsum(rel) / np.arange(1, rel.size + 1)
    return float((prec * rel).sum() / n_rel)


def map_at_k(results: Sequence[RankedResult], judge: RelevanceJudge, K: int) -> float:
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if len(results) == 0:
        raise InvalidInputError("no results to score")
    aps = []
    for res in results:
        ids = res.ids[:K]
        if ids.size == 0:
            aps.append(0.0)
            continue
        rel = judge.labels_of(ids) == judge.label(res.query_id)
        aps.append(average_precision_at_k(rel, K))
    return float(np.mean(aps))


def _check_aligned(a: CodeMatrix, b: CodeMatrix):
    if a.b != b.b:
        raise DimensionError(f"code lengths differ: {a.b} vs {b.b}")
    if len(a) != len(b) or not np.array_equal(a.ids, b.ids):
        raise InvalidInputError("student and teacher matrices must carry the same ids in the same order")


def isd(student: CodeMatrix, teacher: CodeMatrix) -> float:
    """Mean Hamming distance between each item's student and teacher code."""
    _check_aligned(student, teacher)
    if len(student) == 0:
        raise InvalidInputError("empty code matrix")
    return float(hamming_rows(student, teacher).mean())


def _knn_ids(queries: CodeMatrix, db: CodeMatrix, K: int, chunk: int = 256) -> np.ndarray:
    """Ids of the K nearest db codes per query, ordered by (distance, id)."""
    id_order = np.argsort(db.ids, kind="stable")
    sorted_packed = db.packed[id_order]
    sorted_ids = db.ids[id_order]
    out = np.empty((len(queries), K), dtype=np.int64)
    for s in range(0, len(queries), chunk):
        d = hamming_matrix(queries.packed[s : s + chunk], sorted_packed)
        # stable sort over id-sorted columns breaks distance ties by ascending id
        idx = np.argsort(d, axis=1, kind="stable")[:, :K]
        out[s : s + chunk] = sorted_ids[idx]
    return out


def nra_at_k(student_queries: CodeMatrix, teacher_db: CodeMatrix, judge: RelevanceJudge, K: int) -> float:
    """Fraction of each student code's K nearest teacher codes that share its label.

    Normalised by N*K so the value is a rate in [0, 1].
    """
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if K > len(teacher_db):
        raise InvalidInputError(f"K={K} exceeds database size {len(teacher_db)}")
    if len(student_queries) == 0:
        raise InvalidInputError("no queries")
    if student_queries.b != teacher_db.b:
        raise DimensionError("code lengths differ")
    nn = _knn_ids(student_queries, teacher_db, K)
    q_lab = judge.labels_of(student_queries.ids)
    hits = judge.labels_of(nn.reshape(-1)).reshape(nn.shape) == q_lab[:, None]
    return float(hits.sum() / (len(student_queries) * K))


def opr(anchor_labels, aug_labels) -> float:
    """Offset positive rate: share of augmentations whose pseudo label differs from the anchor's."""
    a = np.asarray(anchor_labels).reshape(-1)
    b = np.asarray(aug_labels).reshape(-1)
    if a.size != b.size:
        raise InvalidInputError("label lists differ in length")
    if a.size == 0:
        raise InvalidInputError("empty label lists")
    return float(np.mean(a != b))
