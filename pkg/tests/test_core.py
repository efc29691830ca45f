from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spci.core import (
    Method,
    PredictionInterval,
    ResidualWindow,
    RngSeed,
    TimeSeriesDataset,
    build_autoregressive_features,
    build_lagged_residual_set,
    push_residual,
)
from spci.errors import DomainError, InsufficientDataError, ShapeError

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestAutoregressiveFeatures:
    def test_small_series(self):
        d = build_autoregressive_features([1, 2, 3, 4], 2)
        np.testing.assert_array_equal(d.features, [[1, 2], [2, 3]])
        np.testing.assert_array_equal(d.responses, [3, 4])

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            build_autoregressive_features([5], 1)

    def test_constant_series(self):
        d = build_autoregressive_features([0, 0, 0, 0, 0], 3)
        np.testing.assert_array_equal(d.features, np.zeros((2, 3)))
        np.testing.assert_array_equal(d.responses, [0, 0])

    def test_exog_prepended_at_response_time(self):
        series = np.arange(6.0)
        exog = 10 * np.arange(6.0)
        d = build_autoregressive_features(series, 2, exog=exog, exog_names=("e",))
        assert d.feature_names == ("e", "lag2", "lag1")
        np.testing.assert_array_equal(d.features[0], [20.0, 0.0, 1.0])
        assert d.responses[0] == 2.0

    @given(st.lists(finite, min_size=2, max_size=60), st.integers(1, 10))
    def test_rows_match_index_arithmetic(self, series, tau):
        if len(series) <= tau:
            with pytest.raises(InsufficientDataError):
                build_autoregressive_features(series, tau)
            return
        d = build_autoregressive_features(series, tau)
        assert len(d) == len(series) - tau
        for i in range(len(d)):
            assert list(d.features[i]) == series[i : i + tau]
            assert d.responses[i] == series[i + tau]


class TestLaggedResidualSet:
    def test_four_residuals(self):
        r1, r2, r3, r4 = 1.0, 2.0, 3.0, 4.0
        s = build_lagged_residual_set([r1, r2, r3, r4], 2)
        np.testing.assert_array_equal(s.features, [[r2, r1], [r3, r2]])
        np.testing.assert_array_equal(s.targets, [r3, r4])
        np.testing.assert_array_equal(s.query, [r4, r3])

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            build_lagged_residual_set([1.0, 2.0], 2)

    def test_accepts_window(self):
        win = ResidualWindow(10, [1.0, 2.0, 3.0])
        s = build_lagged_residual_set(win, 1)
        np.testing.assert_array_equal(s.features, [[1.0], [2.0]])

    def test_hundred_residuals_against_index_loop(self):
        r = np.random.default_rng(3).normal(size=100)
        s = build_lagged_residual_set(r, 20)
        assert len(s) == 80
        for j in range(80):
            expected = [r[j + 20 - 1 - k] for k in range(20)]
            assert list(s.features[j]) == expected
            assert s.targets[j] == r[j + 20]

    @given(st.lists(finite, min_size=2, max_size=80), st.integers(1, 12))
    def test_overlap_and_reconstruction(self, residuals, w):
        if len(residuals) <= w:
            return
        s = build_lagged_residual_set(residuals, w)
        assert len(s) == len(residuals) - w
        for j in range(1, len(s)):
            assert s.features[j][0] == s.targets[j - 1]
        # the first row (oldest-first) followed by all targets recovers the sequence
        rebuilt = list(s.features[0][::-1]) + list(s.targets)
        assert rebuilt == residuals


class TestResidualWindow:
    def test_fifo_eviction(self):
        win = ResidualWindow(3, [1, 2, 3])
        win.push(4)
        assert list(win.values) == [2, 3, 4]

    def test_push_into_empty(self):
        assert list(push_residual(ResidualWindow(2), 7).values) == [7]

    def test_push_residual_does_not_mutate(self):
        win = ResidualWindow(2, [1.0])
        out = push_residual(win, 2.0, 5)
        assert list(win.values) == [1.0]
        assert list(out.values) == [1.0, 2.0]
        assert out.last_index == 5

    def test_thousand_pushes(self):
        win = ResidualWindow(50)
        ref = []
        rng = np.random.default_rng(0)
        for v in rng.normal(size=1000):
            win.push(v)
            ref.append(v)
        assert list(win.values) == ref[-50:]

    @given(st.integers(1, 30), st.lists(finite, max_size=100))
    def test_suffix_property(self, cap, pushes):
        win = ResidualWindow(cap)
        for k, v in enumerate(pushes):
            win.push(v, k)
            assert len(win) <= cap
        n = min(len(pushes), cap)
        assert list(win.values) == pushes[len(pushes) - n :]
        assert list(win.indices) == list(range(len(pushes) - n, len(pushes)))

    def test_bad_capacity(self):
        with pytest.raises(DomainError):
            ResidualWindow(0)


class TestDataset:
    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            TimeSeriesDataset(np.zeros((3, 2)), np.zeros(4), 2)

    @pytest.mark.parametrize("T", [0, 5])
    def test_train_size_bounds(self, T):
        with pytest.raises(InsufficientDataError):
            TimeSeriesDataset(np.zeros((4, 1)), np.zeros(4), T)

    def test_split_views(self):
        d = TimeSeriesDataset(np.arange(10.0)[:, None], np.arange(10.0), 7)
        assert d.X_train.shape == (7, 1) and d.y_test.tolist() == [7.0, 8.0, 9.0]
        assert d.with_train_fraction(0.5).train_size == 5


class TestSeeds:
    def test_same_address_same_stream(self):
        a = RngSeed(7, 2).child(3).generator().random(5)
        b = RngSeed(7, 2).child(3).generator().random(5)
        assert np.array_equal(a, b)

    def test_distinct_children_differ(self):
        s = RngSeed(7)
        assert not np.array_equal(s.child(0).generator().random(5), s.child(1).generator().random(5))
        assert not np.array_equal(RngSeed(7, 0).generator().random(5), RngSeed(7, 1).generator().random(5))

    def test_range_checks(self):
        with pytest.raises(DomainError):
            RngSeed(-1)
        with pytest.raises(DomainError):
            RngSeed(2**64)
        assert 0 <= RngSeed(2**64 - 1).int_seed() < 2**31


class TestPredictionInterval:
    def test_rejects_inverted(self):
        with pytest.raises(DomainError):
            PredictionInterval(0, 0.0, 1.0, 0.0, Method.SPCI)

    def test_boundary_inclusive(self):
        iv = PredictionInterval(0, 0.0, -1.0, 1.0, Method.ENBPI)
        assert iv.covers(-1.0) and iv.covers(1.0) and not iv.covers(1.0000001)
        assert iv.width == 2.0
