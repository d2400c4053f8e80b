import numpy as np
import pytest

from brcd.codes import BitCode, CodeMatrix
from brcd.errors import DimensionError, InvalidInputError
from brcd.metrics import RelevanceJudge, map_at_k
from brcd.search import ASHP, SSHP, HammingIndex, ParadigmSpec, bench, build, evaluate, topk, topk_batch

from conftest import random_pm1
import oracles


class TestTopK:
    def test_exact_match_first(self, rng):
        x = random_pm1(rng, 30, 24)
        index = build(CodeMatrix.from_pm1(x, ids=np.arange(100, 130)))
        res = topk(index, BitCode.from_pm1(x[7]), 3)
        assert res.ids[0] == 107 and res.distances[0] == 0

    def test_ties_by_ascending_id(self):
        rows = [[1, 1, 1, 1]] * 4
        index = build(CodeMatrix.from_pm1(rows, ids=[9, 2, 5, 0]))
        res = topk(index, BitCode.from_pm1([1, 1, 1, 1]), 3)
        assert res.ids.tolist() == [0, 2, 5]

    def test_full_k_sorted(self, rng):
        x = random_pm1(rng, 20, 10)
        index = build(CodeMatrix.from_pm1(x))
        res = topk(index, BitCode.from_pm1(random_pm1(rng, 10)), 20)
        assert list(res.distances) == sorted(res.distances)
        assert sorted(res.ids) == list(range(20))

    def test_brute_force_oracle(self, rng):
        N, b, K = 500, 16, 25
        x = random_pm1(rng, N, b)
        ids = rng.permutation(10 * N)[:N]
        index = build(CodeMatrix.from_pm1(x, ids=ids))
        queries = CodeMatrix.from_pm1(random_pm1(rng, 12, b), ids=np.arange(10 * N, 10 * N + 12))
        for q, res in zip(queries.to_pm1(), topk_batch(index, queries, K)):
            assert list(res.hits) == oracles.knn_scan(q, x, ids, K)

    def test_batch_matches_single(self, rng):
        index = build(CodeMatrix.from_pm1(random_pm1(rng, 40, 33)))
        queries = CodeMatrix.from_pm1(random_pm1(rng, 5, 33), ids=np.arange(50, 55))
        batch = topk_batch(index, queries, 7)
        for j in range(5):
            assert batch[j].hits == topk(index, queries[j], 7, query_id=50 + j).hits

    def test_exclude_self(self, rng):
        x = random_pm1(rng, 15, 12)
        cm = CodeMatrix.from_pm1(x)
        res = topk_batch(build(cm), cm, 14, exclude_self=True)
        for r in res:
            assert r.query_id not in r.ids
            assert len(r.ids) == 14

    def test_k_bounds(self, rng):
        index = build(CodeMatrix.from_pm1(random_pm1(rng, 5, 8)))
        q = BitCode.from_pm1(random_pm1(rng, 8))
        with pytest.raises(InvalidInputError):
            topk(index, q, 0)
        with pytest.raises(InvalidInputError):
            topk(index, q, 6)

    def test_length_mismatch(self, rng):
        index = build(CodeMatrix.from_pm1(random_pm1(rng, 5, 8)))
        with pytest.raises(DimensionError):
            topk(index, BitCode.from_pm1(random_pm1(rng, 9)), 1)

    @pytest.mark.parametrize("b", [7, 64, 65, 200])
    def test_distances_match_scalar(self, rng, b):
        x = random_pm1(rng, 9, b)
        q = random_pm1(rng, 3, b)
        d = HammingIndex(CodeMatrix.from_pm1(x)).distances(CodeMatrix.from_pm1(q).packed)
        for i in range(3):
            for j in range(9):
                assert d[i, j] == oracles.hamming_scalar(q[i], x[j])


class TestParadigms:
    def test_paradigm_validation(self):
        assert ParadigmSpec("sshp").mode == SSHP
        assert ParadigmSpec(ASHP).db_source == "teacher"
        with pytest.raises(InvalidInputError):
            ParadigmSpec(SSHP, db_source="teacher")
        with pytest.raises(InvalidInputError):
            ParadigmSpec("xyz")

    def test_perfect_student_equal_paradigms(self, rng):
        t = CodeMatrix.from_pm1(random_pm1(rng, 30, 16))
        q = CodeMatrix.from_pm1(random_pm1(rng, 6, 16), ids=np.arange(30, 36))
        judge = RelevanceJudge.from_arrays(np.arange(36), rng.integers(0, 3, 36))
        assert evaluate(SSHP, t, t, q, judge, 10) == evaluate(ASHP, t, t, q, judge, 10)

    def test_ashp_uses_teacher_db(self, rng):
        s = CodeMatrix.from_pm1(random_pm1(rng, 25, 16))
        t = CodeMatrix.from_pm1(random_pm1(rng, 25, 16))
        q = CodeMatrix.from_pm1(random_pm1(rng, 5, 16), ids=np.arange(25, 30))
        judge = RelevanceJudge.from_arrays(np.arange(30), rng.integers(0, 2, 30))
        want = map_at_k(topk_batch(build(t), q, 8), judge, 8)
        assert evaluate(ASHP, s, t, q, judge, 8) == want

    def test_clustered_data_scores_high(self, rng):
        protos = random_pm1(rng, 3, 32)
        lab = np.repeat(np.arange(3), 20)
        db = CodeMatrix.from_pm1(protos[lab])
        q = CodeMatrix.from_pm1(protos, ids=[100, 101, 102])
        judge = RelevanceJudge.from_arrays(np.r_[np.arange(60), [100, 101, 102]], np.r_[lab, [0, 1, 2]])
        assert evaluate(SSHP, db, db, q, judge, 20) == 1.0

    def test_misaligned_dbs(self, rng):
        s = CodeMatrix.from_pm1(random_pm1(rng, 5, 8))
        t = CodeMatrix.from_pm1(random_pm1(rng, 5, 8), ids=np.arange(1, 6))
        with pytest.raises(InvalidInputError):
            evaluate(SSHP, s, t, s, RelevanceJudge({}), 2)


class TestBench:
    def test_report(self, rng):
        index = build(CodeMatrix.from_pm1(random_pm1(rng, 200, 32)))
        batches = [CodeMatrix.from_pm1(random_pm1(rng, n, 32)) for n in (1, 8)]
        rep = bench(index, batches, 10, repetitions=3)
        assert [r["batch_size"] for r in rep] == [1, 8]
        assert all(r["N"] == 200 and r["K"] == 10 and r["reps"] == 3 and r["mean_ms"] > 0 for r in rep)

    def test_min_repetitions(self, rng):
        index = build(CodeMatrix.from_pm1(random_pm1(rng, 5, 8)))
        with pytest.raises(InvalidInputError):
            bench(index, [], 2, repetitions=2)
