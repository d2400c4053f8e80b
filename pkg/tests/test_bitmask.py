import numpy as np
import pytest

from brcd.bitmask import (
    DELTA_GRID,
    BitMaskSet,
    bit_expectation,
    bit_frequency_histogram,
    make_masks,
    masked_cosine,
    masks_from_clusters,
)
from brcd.codes import CodeMatrix
from brcd.errors import InvalidInputError

from conftest import random_pm1
import oracles


class TestExpectation:
    def test_constant_bits(self):
        x = np.array([[1, -1, 1], [1, -1, 1]])
        assert bit_expectation(x).tolist() == [1.0, 1.0, 1.0]

    def test_balanced_bit(self):
        x = np.array([[1, 1], [-1, 1], [1, 1], [-1, 1]])
        assert bit_expectation(x).tolist() == [0.0, 1.0]

    def test_three_quarters(self):
        x = np.array([[1], [1], [1], [-1]])
        assert bit_expectation(x)[0] == pytest.approx(0.5)

    def test_loop_oracle(self, rng):
        x = random_pm1(rng, 17, 9)
        for r in range(9):
            expected = abs(sum(int(v) for v in x[:, r])) / 17
            assert bit_expectation(CodeMatrix.from_pm1(x))[r] == pytest.approx(expected, abs=1e-15)

    def test_monte_carlo_near_zero(self):
        x = np.random.default_rng(7).choice([-1, 1], size=(1000, 64))
        e = bit_expectation(x)
        assert e.max() < 0.15
        assert e.mean() == pytest.approx(np.sqrt(2 / (np.pi * 1000)), rel=0.25)

    def test_histogram_consistent(self, rng):
        x = random_pm1(rng, 23, 11)
        h = bit_frequency_histogram(x)
        assert h.shape == (11, 2)
        np.testing.assert_allclose(h.sum(1), 1.0)
        np.testing.assert_allclose(np.abs(h[:, 0] - h[:, 1]), bit_expectation(x), atol=1e-15)

    def test_empty_cluster_rejected(self):
        with pytest.raises(InvalidInputError):
            bit_expectation(np.zeros((0, 4)))


class TestMasks:
    def test_threshold(self):
        m = make_masks([[0.1, 0.4, 0.9]], 0.4)
        assert m.masks.tolist() == [[0, 1, 1]]

    def test_delta_bounds(self):
        with pytest.raises(InvalidInputError):
            make_masks([[0.5]], -0.1)
        with pytest.raises(InvalidInputError):
            make_masks([[0.5]], 1.1)

    def test_delta_zero_keeps_all(self, rng):
        assert make_masks(rng.random((3, 7)), 0.0).masks.all()

    def test_monotone_in_delta(self, rng):
        e = rng.random((4, 20))
        prev = None
        for d in sorted(DELTA_GRID):
            m = make_masks(e, d).masks
            if prev is not None:
                assert np.all(m <= prev)
            prev = m

    def test_idempotent(self, rng):
        e = rng.random((2, 6))
        assert np.array_equal(make_masks(e, 0.3).masks, make_masks(e, 0.3).masks)

    def test_set_validates(self):
        with pytest.raises(InvalidInputError):
            BitMaskSet(np.array([[1, 1]]), np.array([[0.1, 0.9]]), 0.5)

    def test_immutable(self):
        m = make_masks([[0.5, 0.1]], 0.2)
        with pytest.raises(ValueError):
            m.masks[0, 0] = 0

    def test_from_clusters(self, rng):
        x = random_pm1(rng, 20, 8)
        labels = np.repeat([0, 1], 10)
        m = masks_from_clusters(CodeMatrix.from_pm1(x), labels, 2, 0.4)
        for c in range(2):
            np.testing.assert_array_equal(m.expectations[c], bit_expectation(x[labels == c]))
        assert m.for_labels([1, 0, 1]).shape == (3, 8)

    def test_empty_cluster_gets_zero(self, rng):
        x = random_pm1(rng, 6, 8)
        m = masks_from_clusters(CodeMatrix.from_pm1(x), [0] * 6, 3, 0.4)
        assert not m.masks[1:].any()

    def test_label_out_of_range(self):
        with pytest.raises(InvalidInputError):
            BitMaskSet.all_ones(2, 4).for_labels([2])


class TestMaskedCosine:
    def test_all_ones_is_plain_cosine(self, rng):
        a, b = rng.normal(size=10), rng.normal(size=10)
        assert masked_cosine(a, np.ones(10), b, np.ones(10)) == pytest.approx(oracles.cos(a, b), abs=1e-14)

    def test_hand_example(self):
        a = [1, 1, -1, 1]
        b = [1, -1, -1, -1]
        # mask drops the two disagreeing trailing bits of a
        assert masked_cosine(a, [1, 1, 1, 0], b, [1, 0, 1, 1]) == pytest.approx(2 / np.sqrt(3) / np.sqrt(3))

    def test_all_masked_is_zero(self):
        assert masked_cosine([1, 1], [0, 0], [1, 1], [1, 1]) == 0.0

    def test_oracle(self, rng):
        for _ in range(10):
            a, b = rng.normal(size=12), rng.normal(size=12)
            ma, mb = rng.integers(0, 2, 12), rng.integers(0, 2, 12)
            expected = oracles.cos(a * ma, b * mb)
            assert masked_cosine(a, ma, b, mb) == pytest.approx(expected, abs=1e-14)
