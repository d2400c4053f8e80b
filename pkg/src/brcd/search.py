"""Exact Hamming top-K retrieval and the symmetric / asymmetric evaluation harness."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .codes import BitCode, CodeMatrix
from .errors import DimensionError, InvalidInputError
from .metrics import RankedResult, RelevanceJudge, map_at_k

__all__ = ["HammingIndex", "ParadigmSpec", "SSHP", "ASHP", "build", "topk", "topk_batch", "evaluate", "bench"]

SSHP = "SSHP"
ASHP = "ASHP"


def _to_words(packed: np.ndarray) -> np.ndarray:
    """View packed byte rows as uint64 words, zero-padding each row to a multiple of 8 bytes."""
    packed = np.atleast_2d(packed)
    n, nb = packed.shape
    nw = (nb + 7) // 8
    buf = np.zeros((n, nw * 8), dtype=np.uint8)
    buf[:, :nb] = packed
    return buf.view(np.uint64)


class HammingIndex:
    """Linear-scan index over a CodeMatrix.  Rows are kept in ascending id order."""

    def __init__(self, db: CodeMatrix):
        if len(db) == 0:
            raise InvalidInputError("cannot index an empty code matrix")
        order = np.argsort(db.ids, kind="stable")
        self.db = db
        self.b = db.b
        self._ids = db.ids[order]
        self._words = _to_words(db.packed[order])
        self._words.flags.writeable = False
        self.built = True

    def __len__(self):
        return self._ids.size

    def distances(self, queries: np.ndarray) -> np.ndarray:
        """Hamming distances of packed query rows to every db row, columns in id order."""
        qw = _to_words(queries)
        out = np.empty((qw.shape[0], len(self)), dtype=np.int64)
        step = max(1, (1 << 24) // max(1, len(self) * self._words.shape[1]))
        for s in range(0, qw.shape[0], step):
            x = qw[s : s + step, None, :] ^ self._words[None, :, :]
            out[s : s + step] = np.bitwise_count(x).sum(axis=2, dtype=np.int64)
        return out

    def _check_query_len(self, b: int):
        if b != self.b:
            raise DimensionError(f"query length {b} != index code length {self.b}")

    def _select(self, dist: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
        """Top-K column positions per row by (distance, id)."""
        n = dist.shape[1]
        key = dist * n + np.arange(n)  # unique keys: distance first, then id rank
        if K < n:
            part = np.argpartition(key, K - 1, axis=1)[:, :K]
        else:
            part = np.broadcast_to(np.arange(n), key.shape)
        kp = np.take_along_axis(key, part, axis=1)
        order = np.argsort(kp, axis=1)
        pos = np.take_along_axis(part, order, axis=1)
        return pos, np.take_along_axis(dist, pos, axis=1)


def build(codes: CodeMatrix) -> HammingIndex:
    return HammingIndex(codes)


def topk_batch(index: HammingIndex, queries: CodeMatrix, K: int, exclude_self: bool = False) -> list[RankedResult]:
    """:func:`topk` for every row of ``queries``.

    With ``exclude_self`` a db entry whose id equals the query's id is never returned.
    """
    index._check_query_len(queries.b)
    n = len(index)
    limit = n - 1 if exclude_self and np.isin(queries.ids, index._ids).any() else n
    if not 1 <= K <= limit:
        raise InvalidInputError(f"K={K} must be in [1, {limit}]")
    results = []
    chunk = max(1, (1 << 22) // n)
    for s in range(0, len(queries), chunk):
        q_ids = queries.ids[s : s + chunk]
        dist = index.distances(queries.packed[s : s + chunk])
        if exclude_self:
            col = np.searchsorted(index._ids, q_ids)
            col_c = np.minimum(col, n - 1)
            hit = index._ids[col_c] == q_ids
            dist[np.flatnonzero(hit), col_c[hit]] = np.iinfo(np.int64).max // (2 * n)
        pos, d = index._select(dist, K)
        ids = index._ids[pos]
        for qid, row_ids, row_d in zip(q_ids, ids, d):
            results.append(RankedResult(int(qid), tuple(zip(row_ids.tolist(), row_d.tolist()))))
    return results


def topk(index: HammingIndex, query, K: int, query_id: int = -1) -> RankedResult:
    """K nearest db codes by ascending Hamming distance, ties broken by ascending id."""
    if isinstance(query, BitCode):
        packed, b = query.packed, query.b
    else:
        packed, b = query.packed[0], query.b
    index._check_query_len(b)
    if not 1 <= K <= len(index):
        raise InvalidInputError(f"K={K} must be in [1, {len(index)}]")
    dist = index.distances(packed[None, :])
    pos, d = index._select(dist, K)
    return RankedResult(int(query_id), tuple(zip(index._ids[pos[0]].tolist(), d[0].tolist())))


@dataclass(frozen=True)
class ParadigmSpec:
    mode: str
    db_source: str | None = None
    query_source: str = "student"

    def __post_init__(self):
        mode = self.mode.upper()
        if mode not in (SSHP, ASHP):
            raise InvalidInputError(f"unknown paradigm {self.mode!r}")
        expected = "student" if mode == SSHP else "teacher"
        src = self.db_source or expected
        if src != expected:
            raise InvalidInputError(f"{mode} requires db_source={expected!r}")
        if self.query_source != "student":
            raise InvalidInputError("queries always come from the student")
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "db_source", src)


def evaluate(paradigm, student_codes_db: CodeMatrix, teacher_codes_db: CodeMatrix,
             student_codes_query: CodeMatrix, judge: RelevanceJudge, K: int) -> float:
    """mAP@K of student queries against the paradigm's database codes.

    SSHP searches the student's database codes, ASHP the teacher's.  A query
    whose id is also in the database never retrieves itself.
    """
    if not isinstance(paradigm, ParadigmSpec):
        paradigm = ParadigmSpec(paradigm)
    if len(student_codes_db) != len(teacher_codes_db) or not np.array_equal(
        student_codes_db.ids, teacher_codes_db.ids
    ):
        raise InvalidInputError("student and teacher database codes must carry the same ids")
    db = student_codes_db if paradigm.mode == SSHP else teacher_codes_db
    index = build(db)
    K = min(K, len(index) - (1 if np.isin(student_codes_query.ids, db.ids).any() else 0))
    results = topk_batch(index, student_codes_query, K, exclude_self=True)
    return map_at_k(results, judge, K)


def bench(index: HammingIndex, query_batches, K: int, repetitions: int = 5) -> list[dict]:
    """Wall-clock top-K latency per query batch.

    The first repetition of every batch is a discarded warm-up; the report
    row per batch carries (batch_size, N, K, mean_ms, median_ms, reps).
    """
    if repetitions < 3:
        raise InvalidInputError("repetitions must be >= 3")
    report = []
    for batch in query_batches:
        times = []
        for rep in range(repetitions + 1):
            t0 = time.perf_counter()
            topk_batch(index, batch, K)
            dt = (time.perf_counter() - t0) * 1e3
            if rep:
                times.append(dt)
        report.append(
            dict(
                batch_size=len(batch),
                N=len(index),
                K=K,
                mean_ms=statistics.fmean(times),
                median_ms=statistics.median(times),
                reps=repetitions,
            )
        )
    return report
