import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brcd.codes import (
    BitCode,
    CodeMatrix,
    cosine,
    dot_pm1,
    hamming,
    hamming_matrix,
    hamming_rows,
    pack_pm1,
    sign_quantize,
    sign_quantize_rows,
    unpack_pm1,
)
from brcd.errors import DimensionError, InvalidInputError

from conftest import random_pm1
import oracles

pm1_lists = st.integers(1, 80).flatmap(lambda b: st.lists(st.sampled_from([-1, 1]), min_size=b, max_size=b))


class TestSignQuantize:
    def test_zero_maps_to_plus_one(self):
        assert sign_quantize([0.2, -0.1, 0.0]).to_pm1().tolist() == [1, -1, 1]

    def test_all_negative(self):
        assert np.all(sign_quantize(-np.arange(1, 11.0)).to_pm1() == -1)

    def test_matches_elementwise_sign(self, rng):
        v = rng.normal(size=77)
        expected = [1 if x >= 0 else -1 for x in v]
        assert sign_quantize(v).to_pm1().tolist() == expected

    def test_negative_zero_is_plus(self):
        assert sign_quantize([-0.0]).to_pm1().tolist() == [1]

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(InvalidInputError):
            sign_quantize([1.0, bad])
        with pytest.raises(InvalidInputError):
            sign_quantize_rows([[1.0, bad]])

    @given(pm1_lists)
    def test_identity_on_codes(self, vals):
        code = BitCode.from_pm1(vals)
        assert sign_quantize(code.to_pm1().astype(float)) == code


class TestPacking:
    def test_bit_layout(self):
        # dimension r at byte r // 8, bit r % 8; +1 is a set bit
        vals = -np.ones(10, dtype=int)
        vals[0] = vals[9] = 1
        c = BitCode.from_pm1(vals)
        assert c.packed.tolist() == [0b00000001, 0b00000010]

    @given(pm1_lists)
    def test_round_trip(self, vals):
        packed = pack_pm1(vals)
        assert unpack_pm1(packed, len(vals)).tolist() == vals
        assert np.array_equal(pack_pm1(unpack_pm1(packed, len(vals))), packed)

    def test_padding_must_be_zero(self):
        with pytest.raises(InvalidInputError):
            BitCode(np.array([0xFF], np.uint8), 5)

    def test_non_pm1_rejected(self):
        with pytest.raises(InvalidInputError):
            pack_pm1([1, 0, -1])

    def test_immutable(self):
        c = BitCode.from_pm1([1, -1])
        with pytest.raises(AttributeError):
            c.b = 3
        with pytest.raises(ValueError):
            c.packed[0] = 0

    def test_code_matrix_requires_unique_ids(self):
        with pytest.raises(InvalidInputError):
            CodeMatrix.from_pm1([[1, 1], [1, -1]], ids=[3, 3])

    def test_code_matrix_rows(self, rng):
        x = random_pm1(rng, 5, 13)
        cm = CodeMatrix.from_pm1(x)
        assert len(cm) == 5 and cm.b == 13
        assert np.array_equal(cm.to_pm1(), x)
        assert cm[2] == BitCode.from_pm1(x[2])
        assert CodeMatrix.from_codes(list(cm)) == cm


class TestHammingDot:
    def test_identity(self, rng):
        a = BitCode.from_pm1(random_pm1(rng, 40))
        assert hamming(a, a) == 0

    def test_complement_b32(self, rng):
        a = BitCode.from_pm1(random_pm1(rng, 32))
        assert hamming(a, a.complement()) == 32

    def test_two_positions(self):
        a = BitCode.from_pm1([1, 1, -1, -1])
        b = BitCode.from_pm1([1, -1, -1, 1])
        assert hamming(a, b) == 2
        assert dot_pm1(a, b) == 0

    def test_dot_self(self, rng):
        a = BitCode.from_pm1(random_pm1(rng, 64))
        assert dot_pm1(a, a) == 64

    def test_padding_ignored(self, rng):
        a = BitCode.from_pm1(random_pm1(rng, 11))
        assert hamming(a, a.complement()) == 11

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            hamming(BitCode.from_pm1([1, 1]), BitCode.from_pm1([1, 1, 1]))
        with pytest.raises(DimensionError):
            dot_pm1(BitCode.from_pm1([1]), BitCode.from_pm1([1, 1]))

    def test_against_scalar_loop(self, rng):
        for b in (1, 7, 8, 9, 33, 100):
            x, y = random_pm1(rng, b), random_pm1(rng, b)
            assert hamming(BitCode.from_pm1(x), BitCode.from_pm1(y)) == oracles.hamming_scalar(x, y)

    @given(pm1_lists, st.data())
    def test_dot_hamming_identity(self, a, data):
        b = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(a), max_size=len(a)))
        ca, cb = BitCode.from_pm1(a), BitCode.from_pm1(b)
        assert hamming(ca, cb) * 2 == len(a) - dot_pm1(ca, cb)

    @settings(max_examples=200)
    @given(st.integers(1, 70), st.integers(0, 2**32 - 1))
    def test_metric_axioms(self, b, seed):
        r = np.random.default_rng(seed)
        x, y, z = (BitCode.from_pm1(random_pm1(r, b)) for _ in range(3))
        assert hamming(x, y) == hamming(y, x)
        assert (hamming(x, y) == 0) == (x == y)
        assert hamming(x, z) <= hamming(x, y) + hamming(y, z)

    def test_rowwise_and_matrix(self, rng):
        A = CodeMatrix.from_pm1(random_pm1(rng, 20, 19))
        B = CodeMatrix.from_pm1(random_pm1(rng, 20, 19))
        rows = hamming_rows(A, B)
        full = hamming_matrix(A, B)
        assert np.array_equal(rows, np.diag(full))
        assert full[3, 7] == oracles.hamming_scalar(A.to_pm1()[3], B.to_pm1()[7])


class TestCosine:
    def test_identical(self, rng):
        a = BitCode.from_pm1(random_pm1(rng, 16))
        assert cosine(a, a) == pytest.approx(1.0, abs=1e-15)

    def test_complement(self, rng):
        a = BitCode.from_pm1(random_pm1(rng, 16))
        assert cosine(a, a.complement()) == pytest.approx(-1.0, abs=1e-15)

    def test_equals_dot_over_b(self, rng):
        for b in (3, 32, 129):
            a, c = BitCode.from_pm1(random_pm1(rng, b)), BitCode.from_pm1(random_pm1(rng, b))
            assert abs(cosine(a, c) - dot_pm1(a, c) / b) < 1e-12

    def test_zero_vector_is_zero(self):
        assert cosine([0.0, 0.0], [1.0, 2.0]) == 0.0

    def test_real_vectors_match_oracle(self, rng):
        a, b = rng.normal(size=9), rng.normal(size=9)
        assert cosine(a, b) == pytest.approx(oracles.cos(a, b), abs=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            cosine([1.0, 2.0], [1.0])
