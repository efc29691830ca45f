from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from spci import _tree
from spci.conformal import empirical_quantile
from spci.core import RngSeed, build_lagged_residual_set
from spci.errors import DomainError, InsufficientDataError, ShapeError
from spci.quantile_forest import (
    ForestParams,
    QuantileForest,
    conditional_cdf,
    conditional_quantile,
    fit_forest,
    forest_weights,
    inverse_weighted_cdf,
    pinball_loss,
)


def random_forest(seed: int, n: int = 40, d: int = 3, **kw) -> QuantileForest:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.round(X[:, 0] + rng.normal(size=n), 1)  # rounding creates ties
    params = ForestParams(n_trees=kw.pop("n_trees", 7), min_leaf_size=kw.pop("min_leaf_size", 2), seed=RngSeed(seed), **kw)
    return QuantileForest(params).fit(X, y)


class TestFitting:
    def test_constant_targets_single_leaf(self):
        X = np.random.default_rng(0).normal(size=(30, 2))
        f = QuantileForest(ForestParams(n_trees=4)).fit(X, np.full(30, 2.5))
        assert all(t.n_leaves == 1 for t in f.trees)

    def test_one_row_three_trees(self):
        s = build_lagged_residual_set([0.1, 0.2, 0.3], 2)
        f = fit_forest(s, ForestParams(n_trees=3, min_leaf_size=1))
        assert len(f.trees) == 3 and all(t.n_leaves == 1 for t in f.trees)
        np.testing.assert_array_equal(f.weights(s.query), [1.0])

    def test_empty_set_rejected(self):
        with pytest.raises(InsufficientDataError):
            QuantileForest().fit(np.zeros((0, 2)), np.zeros(0))

    def test_step_function_split_location(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(200, 2))
        y = (X[:, 0] > 0).astype(float)
        lo, hi = X[X[:, 0] < 0, 0].max(), X[X[:, 0] > 0, 0].min()
        # without resampling every tree sees both boundary rows
        f = QuantileForest(ForestParams(n_trees=30, min_leaf_size=5, features_per_split=2, bootstrap=False)).fit(X, y)
        inside = [t.feature[0] == 0 and lo < t.threshold[0] < hi for t in f.trees]
        assert np.mean(inside) >= 0.9
        # resampled trees may miss a boundary row, but still split on the right column
        f = QuantileForest(ForestParams(n_trees=30, min_leaf_size=5, features_per_split=2)).fit(X, y)
        assert all(t.feature[0] == 0 for t in f.trees)

    @pytest.mark.parametrize("seed", range(5))
    def test_root_split_is_exhaustive_optimum(self, seed):
        rng = np.random.default_rng(seed)
        X = np.round(rng.normal(size=(60, 3)), 1)
        y = X[:, 1] ** 2 + rng.normal(size=60)
        f = QuantileForest(ForestParams(n_trees=1, min_leaf_size=4, features_per_split=3, bootstrap=False)).fit(X, y)
        _, feat, thr = oracles.best_root_split(X, y, 4)
        assert f.trees[0].feature[0] == feat
        assert f.trees[0].threshold[0] == pytest.approx(thr)

    def test_leaves_respect_min_size_and_partition(self):
        f = random_forest(3, n=80, min_leaf_size=6, bootstrap=False)
        for tree in f.trees:
            leaves = tree.apply(f.training_features)
            counts = np.bincount(leaves)
            assert counts[counts > 0].min() >= 6
            assert set(np.unique(leaves)) == set(np.flatnonzero(tree.feature == -1))

    def test_max_depth_respected(self):
        f = random_forest(4, n=100, max_depth=2)
        assert all(t.n_leaves <= 4 for t in f.trees)

    def test_schedule_independent(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(150, 6)), rng.normal(size=150)
        serial = QuantileForest(ForestParams(n_trees=12, seed=RngSeed(9))).fit(X, y)
        threaded = QuantileForest(ForestParams(n_trees=12, seed=RngSeed(9), n_jobs=4)).fit(X, y)
        for a, b in zip(serial.trees, threaded.trees):
            assert np.array_equal(a.feature, b.feature) and np.array_equal(a.threshold, b.threshold)
        x = rng.normal(size=6)
        assert np.array_equal(serial.weights(x), threaded.weights(x))

    def test_params_validation(self):
        with pytest.raises(DomainError):
            ForestParams(n_trees=0)
        with pytest.raises(DomainError):
            ForestParams(min_leaf_size=0)
        with pytest.raises(DomainError):
            QuantileForest(ForestParams(features_per_split=5)).fit(np.zeros((10, 2)), np.arange(10.0))
        assert ForestParams().resolve_mtry(20) == 7


class TestWeights:
    def test_single_leaf_uniform(self):
        f = QuantileForest(ForestParams(n_trees=1, max_depth=0, bootstrap=False)).fit(np.zeros((4, 1)), [1.0, 2, 3, 4])
        np.testing.assert_array_equal(f.weights([0.0]), [0.25] * 4)

    def test_two_tree_arithmetic(self):
        row_leaves = np.array([[0, 5], [0, 6], [1, 6]], dtype=np.int64)
        w = _tree.leaf_weights(row_leaves, np.array([0, 6], dtype=np.int64))
        np.testing.assert_array_equal(w, [0.25, 0.5, 0.25])

    @given(st.integers(0, 10_000))
    def test_matches_leaf_membership_oracle(self, seed):
        f = random_forest(seed, n=30)
        x = np.random.default_rng(seed + 1).normal(size=3)
        w = forest_weights(f, x)
        assert np.array_equal(w, oracles.weights_float(f, x))
        assert abs(w.sum() - 1.0) <= 1e-9 and np.all(w >= 0)
        shared = set().union(*oracles.leaf_members(f, x))
        assert set(np.flatnonzero(w > 0)) == shared

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            random_forest(0).weights(np.zeros(2))


class TestCdfAndQuantile:
    def test_uniform_cdf(self):
        f = QuantileForest(ForestParams(n_trees=1, max_depth=0, bootstrap=False)).fit(np.zeros((4, 1)), [1.0, 2, 3, 4])
        assert conditional_cdf(f, [0.0], 2.5) == 0.5
        assert f.cdf([0.0], 0.5) == 0.0 and f.cdf([0.0], 4.0) == 1.0

    def test_uniform_quantiles(self):
        f = QuantileForest(ForestParams(n_trees=1, max_depth=0, bootstrap=False)).fit(np.zeros((4, 1)), [40.0, 10, 30, 20])
        assert conditional_quantile(f, [0.0], 0.5) == 20
        assert f.quantile([0.0], 1.0) == 40 and f.quantile([0.0], 0.0) == 10

    @pytest.mark.parametrize("p", [-0.1, 1.1, float("nan")])
    def test_bad_probability(self, p):
        with pytest.raises(DomainError):
            random_forest(0).quantile(np.zeros(3), p)

    @given(st.integers(0, 10_000))
    def test_cdf_matches_direct_sum_on_every_target(self, seed):
        f = random_forest(seed, n=25)
        x = np.random.default_rng(seed).normal(size=3)
        w = oracles.weights_float(f, x)
        zs = np.concatenate([f.training_targets, [f.training_targets.min() - 1]])
        prev = -1.0
        for z in np.sort(zs):
            c = f.cdf(x, z)
            assert c == oracles.cdf(w, f.training_targets, z)
            assert c >= prev
            prev = c

    @given(st.integers(0, 10_000), st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_quantile_matches_exact_scan(self, seed, ps):
        f = random_forest(seed, n=25)
        x = np.random.default_rng(seed).normal(size=3)
        w = oracles.weights_exact(f, x)
        q = f.quantiles(x, ps)
        for p, got in zip(ps, q):
            assert got == oracles.quantile_exact(w, f.training_targets, p)

    @given(st.integers(0, 10_000))
    def test_galois_and_monotone(self, seed):
        f = random_forest(seed, n=25)
        x = np.random.default_rng(seed).normal(size=3)
        ps = np.linspace(0, 1, 41)
        q = f.quantiles(x, ps)
        assert np.all(np.diff(q) >= 0)
        for p, z in zip(ps, q):
            assert f.cdf(x, z) >= p - 1e-12

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.floats(0, 1))
    def test_single_leaf_equals_empirical_quantile(self, values, p):
        y = np.array(values)
        f = QuantileForest(ForestParams(n_trees=3, max_depth=0, bootstrap=False)).fit(np.zeros((len(y), 1)), y)
        for x in ([0.0], [5.0], [-3.0]):
            assert f.quantile(x, p) == empirical_quantile(y, p) == oracles.order_statistic(y, p)

    def test_inverse_cdf_skips_zero_weight_atoms(self):
        vals = np.array([1.0, 2.0, 3.0, 4.0])
        w = np.array([0.0, 0.5, 0.5, 0.0])
        np.testing.assert_array_equal(inverse_weighted_cdf(vals, w, [0.0, 0.5, 0.51, 1.0]), [2, 2, 3, 3])

    def test_median_error_shrinks_with_more_data(self):
        errs = {200: [], 2000: []}
        for trial in range(4):
            for n in errs:
                rng = np.random.default_rng(1000 * trial + n)
                X = rng.normal(size=(n, 2))
                y = X[:, 0] + rng.normal(size=n)
                f = QuantileForest(ForestParams(n_trees=30, seed=RngSeed(trial))).fit(X, y)
                Xq = rng.normal(size=(40, 2))
                errs[n].append(np.mean([abs(f.quantile(x, 0.5) - x[0]) for x in Xq]))
        assert np.mean(errs[2000]) < np.mean(errs[200])


class TestPinball:
    def test_values(self):
        assert pinball_loss(2, 0.1) == pytest.approx(0.2)
        assert pinball_loss(-2, 0.1) == pytest.approx(1.8)
        assert pinball_loss(0, 0.3) == 0

    @given(st.floats(-1e3, 1e3), st.floats(0.01, 0.99))
    def test_nonnegative(self, x, a):
        assert pinball_loss(x, a) >= 0

    def test_minimizer_is_quantile(self):
        y = np.random.default_rng(0).normal(size=2001)
        grid = np.linspace(-3, 3, 601)
        losses = [np.mean(pinball_loss(y - c, 0.9)) for c in grid]
        assert abs(grid[int(np.argmin(losses))] - np.quantile(y, 0.9)) < 0.02

    def test_bad_alpha(self):
        with pytest.raises(DomainError):
            pinball_loss(1.0, 1.0)
