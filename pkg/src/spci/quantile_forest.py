"""
Quantile regression forest written from scratch.

Each tree partitions feature space into rectangular leaves. For a query
``x`` every tree spreads unit mass evenly over the training rows that share
``x``'s leaf; averaging over trees gives data-adaptive weights ``w_t(x)``
summing to one. The conditional CDF is ``F(z | x) = sum_t w_t(x) 1{y_t <= z}``
and quantiles invert it with the lower (infimum) convention.

Example
-------
>>> import numpy as np
>>> from spci.quantile_forest import ForestParams, QuantileForest
>>> rng = np.random.default_rng(0)
>>> X = rng.normal(size=(200, 2)); y = X[:, 0] + rng.normal(size=200)
>>> qrf = QuantileForest(ForestParams(n_trees=20)).fit(X, y)
>>> lo, hi = qrf.quantiles(X[0], [0.05, 0.95])
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _tree
from .core import LaggedResidualSet, RngSeed
from .errors import DomainError, InsufficientDataError, ShapeError

__all__ = [
    "PROB_TOL",
    "ForestParams",
    "Tree",
    "TreeEnsemble",
    "QuantileForest",
    "fit_forest",
    "forest_weights",
    "conditional_cdf",
    "conditional_quantile",
    "inverse_weighted_cdf",
    "pinball_loss",
]

# Cumulative weights carry rounding error of order n * 1e-16; probability
# comparisons against them use this slack so that, e.g., k equal weights of
# 1/n reach p = k/n exactly when they should.
PROB_TOL = 1e-9


@dataclass(frozen=True)
class ForestParams:
    """
    Forest hyperparameters.

    ``features_per_split=None`` resolves to ``ceil(d / 3)`` at fit time;
    ``max_depth=None`` grows until ``min_leaf_size`` or pure nodes.
    ``n_jobs > 1`` fits trees on a thread pool; every tree reads its own
    seed stream, so results do not depend on the schedule.
    """

    n_trees: int = 50
    min_leaf_size: int = 5
    max_depth: Optional[int] = None
    features_per_split: Optional[int] = None
    bootstrap: bool = True
    seed: RngSeed = field(default_factory=RngSeed)
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise DomainError("n_trees must be >= 1")
        if self.min_leaf_size < 1:
            raise DomainError("min_leaf_size must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise DomainError("max_depth must be >= 0")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise DomainError("features_per_split must be >= 1")

    def resolve_mtry(self, d: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(d / 3))
        if self.features_per_split > d:
            raise DomainError(f"features_per_split={self.features_per_split} exceeds d={d}")
        return self.features_per_split


@dataclass(frozen=True)
class Tree:
    """One fitted tree as flat node arrays (``feature == -1`` marks a leaf)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == _tree.LEAF))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        roots = np.zeros(1, np.int64)
        return _tree.apply_forest(self.feature, self.threshold, self.left, self.right, roots, X)[:, 0]


def column_ranks(X: np.ndarray) -> np.ndarray:
    """Per-column rank of every row (ties broken by row order)."""
    order = np.argsort(X, axis=0, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(X.shape[0])[:, None], axis=0)
    return np.ascontiguousarray(ranks, dtype=np.int64)


def _grow(X: np.ndarray, ranks: np.ndarray, y: np.ndarray, params: ForestParams, seed: RngSeed, mtry: int) -> Tree:
    rng = seed.generator()
    n = X.shape[0]
    if params.bootstrap:
        sample = rng.integers(0, n, size=n).astype(np.int64)
    else:
        sample = np.arange(n, dtype=np.int64)
    depth = -1 if params.max_depth is None else params.max_depth
    kernel_seed = int(rng.integers(0, 2**31 - 1))
    arrays = _tree.build_tree(X, ranks, y, sample, params.min_leaf_size, depth, mtry, kernel_seed)
    return Tree(*arrays)


class TreeEnsemble:
    """Shared tree-growing machinery for the quantile and the mean forests."""

    def __init__(self, params: Optional[ForestParams] = None) -> None:
        self.params = ForestParams() if params is None else params
        self.trees: list[Tree] = []

    def _fit_trees(self, X: np.ndarray, y: np.ndarray) -> None:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"{X.shape[0]} rows but {y.shape[0]} targets")
        if y.shape[0] < 1:
            raise InsufficientDataError("cannot fit a forest on zero rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("forest inputs must be finite")
        p = self.params
        mtry = p.resolve_mtry(X.shape[1])
        ranks = column_ranks(X)
        seeds = [p.seed.child(k) for k in range(p.n_trees)]
        if p.n_jobs > 1 and p.n_trees > 1:
            with ThreadPoolExecutor(max_workers=p.n_jobs) as pool:
                trees = list(pool.map(lambda s: _grow(X, ranks, y, p, s, mtry), seeds))
        else:
            trees = [_grow(X, ranks, y, p, s, mtry) for s in seeds]
        self.trees = trees
        self.n_features_ = X.shape[1]
        self._pack()

    def _pack(self) -> None:
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]]).astype(np.int64)
        self._roots = offsets
        self._feature = np.concatenate([t.feature for t in self.trees])
        self._threshold = np.concatenate([t.threshold for t in self.trees])
        self._value = np.concatenate([t.value for t in self.trees])
        lefts, rights = [], []
        for off, t in zip(offsets, self.trees):
            lefts.append(np.where(t.left >= 0, t.left + off, -1))
            rights.append(np.where(t.right >= 0, t.right + off, -1))
        self._left = np.concatenate(lefts)
        self._right = np.concatenate(rights)

    def _check_x(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.trees:
            raise RuntimeError("forest is not fitted")
        if X.shape[1] != self.n_features_:
            raise ShapeError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return np.ascontiguousarray(X)

    def apply(self, X) -> np.ndarray:
        """Leaf ids, shape ``(n_rows, n_trees)``."""
        X = self._check_x(X)
        return _tree.apply_forest(self._feature, self._threshold, self._left, self._right, self._roots, X)


class QuantileForest(TreeEnsemble):
    """
    Quantile regression forest.

    Leaf membership counts every training row (not only the bootstrap draw
    the tree was grown on), so ``k(l)`` is the number of training features
    falling into leaf ``l``.
    """

    def fit(self, X, y) -> "QuantileForest":
        self._fit_trees(X, y)
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        self.training_features = X
        self.training_targets = np.asarray(y, dtype=float).ravel().copy()
        self.row_leaves_ = self.apply(X)
        self._order = np.argsort(self.training_targets, kind="stable")
        self._sorted_targets = self.training_targets[self._order]
        return self

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def weights(self, x) -> np.ndarray:
        x = self._check_x(x)
        if x.shape[0] != 1:
            raise ShapeError("weights takes a single query row")
        return _tree.leaf_weights(self.row_leaves_, self.apply(x)[0])

    def cdf(self, x, z: float) -> float:
        w = self.weights(x)
        return min(1.0, math.fsum(w[self.training_targets <= z]))

    def quantiles(self, x, ps: Sequence[float]) -> np.ndarray:
        """Lower quantiles ``inf{z : F(z | x) >= p}`` for each ``p`` in ``ps``."""
        w = self.weights(x)
        return inverse_weighted_cdf(self._sorted_targets, w[self._order], ps)

    def quantile(self, x, p: float) -> float:
        return float(self.quantiles(x, [p])[0])


def inverse_weighted_cdf(sorted_values: np.ndarray, sorted_weights: np.ndarray, ps) -> np.ndarray:
    """
    Lower quantiles of a discrete distribution given in ascending order.

    Zero-weight atoms are dropped first, so ``p = 0`` returns the smallest
    atom carrying mass and ``p = 1`` the largest.
    """
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    if np.any(~np.isfinite(ps)) or np.any(ps < 0.0) or np.any(ps > 1.0):
        raise DomainError(f"probabilities must lie in [0, 1], got {ps}")
    keep = sorted_weights > 0
    vals = sorted_values[keep]
    if vals.shape[0] == 0:
        raise InsufficientDataError("no atom carries positive weight")
    cum = np.cumsum(sorted_weights[keep])
    pos = np.searchsorted(cum, ps - PROB_TOL, side="left")
    return vals[np.minimum(pos, vals.shape[0] - 1)]


def fit_forest(data: LaggedResidualSet, params: Optional[ForestParams] = None) -> QuantileForest:
    """Fit a quantile forest on a lagged residual design."""
    if len(data) < 1:
        raise InsufficientDataError("lagged residual set is empty")
    return QuantileForest(params).fit(data.features, data.targets)


def forest_weights(forest: QuantileForest, x) -> np.ndarray:
    return forest.weights(x)


def conditional_cdf(forest: QuantileForest, x, z: float) -> float:
    return forest.cdf(x, z)


def conditional_quantile(forest: QuantileForest, x, p: float) -> float:
    return forest.quantile(x, p)


def pinball_loss(x, alpha: float):
    """Quantile (pinball) loss: ``alpha * x`` for ``x >= 0``, else ``(alpha - 1) * x``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, alpha * x, (alpha - 1.0) * x)
    return float(out) if out.ndim == 0 else out
