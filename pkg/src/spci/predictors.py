"""
Point predictors and bootstrap ensembles with leave-one-out aggregation.

A predictor is anything with ``fit(X, y) -> self`` and ``predict(X) -> array``.
Ensembles clone a template predictor B times, fit each clone on a bootstrap
resample of the training rows, and predict a training row only with the
clones whose resample left that row out.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from . import _tree
from .core import RngSeed, TimeSeriesDataset
from .errors import DomainError, InsufficientDataError, ShapeError
from .quantile_forest import ForestParams, TreeEnsemble

__all__ = [
    "PointPredictor",
    "LeastSquares",
    "ExponentiallyWeightedLeastSquares",
    "RegressionForest",
    "Aggregator",
    "BootstrapEnsemble",
    "fit_ensemble",
    "loo_residuals",
    "ensemble_predict",
    "clone_with_seed",
]

log = logging.getLogger(__name__)

_RIDGE_JITTER = 1e-8


class PointPredictor(Protocol):
    def fit(self, X: np.ndarray, y: np.ndarray) -> "PointPredictor": ...

    def predict(self, X: np.ndarray) -> np.ndarray: ...


def _as_2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


@dataclass
class LeastSquares:
    """Ordinary least squares with intercept, solved by the normal equations."""

    fit_intercept: bool = True
    coef_: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    intercept_: float = field(default=0.0, init=False, repr=False)

    def _design(self, X: np.ndarray) -> np.ndarray:
        return np.hstack([np.ones((X.shape[0], 1)), X]) if self.fit_intercept else X

    def _solve(self, X: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray]) -> "LeastSquares":
        X = _as_2d(X)
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"{X.shape[0]} rows but {y.shape[0]} targets")
        A = self._design(X)
        Aw = A if weights is None else A * weights[:, None]
        gram = Aw.T @ A
        rhs = Aw.T @ y
        if np.linalg.matrix_rank(gram) < gram.shape[0]:
            gram = gram + _RIDGE_JITTER * np.eye(gram.shape[0])
        beta = np.linalg.solve(gram, rhs)
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(beta[0]), beta[1:]
        else:
            self.intercept_, self.coef_ = 0.0, beta
        return self

    def fit(self, X, y) -> "LeastSquares":
        return self._solve(X, y, None)

    def predict(self, X) -> np.ndarray:
        if self.coef_ is None:
            raise RuntimeError("predictor is not fitted")
        return _as_2d(X) @ self.coef_ + self.intercept_


@dataclass
class ExponentiallyWeightedLeastSquares(LeastSquares):
    """
    Weighted least squares where row ``i`` of ``n`` gets weight ``decay**(n - 1 - i)``.

    The newest row has weight 1. ``decay=1`` is ordinary least squares.
    """

    decay: float = 0.99

    def __post_init__(self) -> None:
        if not 0.0 < self.decay <= 1.0:
            raise DomainError(f"decay must be in (0, 1], got {self.decay}")

    def fit(self, X, y) -> "ExponentiallyWeightedLeastSquares":
        n = np.asarray(y).shape[0]
        weights = self.decay ** np.arange(n - 1, -1, -1, dtype=float)
        return self._solve(X, y, weights)


@dataclass
class RegressionForest:
    """Random forest regressor (leaf-mean prediction) on the shared tree builder."""

    n_trees: int = 10
    min_leaf_size: int = 1
    max_depth: Optional[int] = None
    features_per_split: Optional[int] = None
    bootstrap: bool = True
    seed: RngSeed = field(default_factory=RngSeed)

    def fit(self, X, y) -> "RegressionForest":
        X = _as_2d(X)
        mtry = X.shape[1] if self.features_per_split is None else self.features_per_split
        params = ForestParams(
            n_trees=self.n_trees,
            min_leaf_size=self.min_leaf_size,
            max_depth=self.max_depth,
            features_per_split=mtry,
            bootstrap=self.bootstrap,
            seed=self.seed,
        )
        self._ensemble = TreeEnsemble(params)
        self._ensemble._fit_trees(X, y)
        return self

    def predict(self, X) -> np.ndarray:
        ens = self._ensemble
        return _tree.forest_mean_predict(ens._value, ens.apply(_as_2d(X)))


def clone_with_seed(template, seed: RngSeed):
    """Unfitted copy of ``template``; dataclass predictors with a ``seed`` field get ``seed``."""
    if dataclasses.is_dataclass(template):
        init_fields = {f.name for f in dataclasses.fields(template) if f.init}
        kwargs = {name: getattr(template, name) for name in init_fields}
        if "seed" in init_fields:
            kwargs["seed"] = seed
        return type(template)(**kwargs)
    clone = getattr(template, "clone", None)
    if clone is None:
        raise TypeError(f"cannot clone predictor of type {type(template).__name__}")
    return clone(seed)


class Aggregator(str, enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"

    def reduce(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        if self is Aggregator.MEAN:
            return np.mean(values, axis=axis)
        return np.median(values, axis=axis)


@dataclass
class BootstrapEnsemble:
    """
    B predictors, each fit on a bootstrap resample ``index_sets[b]`` of the
    training rows. ``in_bag[b, t]`` records whether row ``t`` was drawn.
    """

    index_sets: np.ndarray
    models: list
    aggregator: Aggregator
    n_train: int

    @property
    def B(self) -> int:
        return len(self.models)

    @property
    def in_bag(self) -> np.ndarray:
        mask = np.zeros((self.B, self.n_train), dtype=bool)
        for b, s in enumerate(self.index_sets):
            mask[b, s] = True
        return mask

    def model_predictions(self, X) -> np.ndarray:
        """Per-model predictions, shape ``(B, n_rows)``."""
        X = _as_2d(X)
        return np.vstack([np.asarray(m.predict(X), dtype=float).ravel() for m in self.models])

    def predict(self, X) -> np.ndarray:
        return self.aggregator.reduce(self.model_predictions(X), axis=0)

    def loo_predictions(self, X_train) -> tuple[np.ndarray, np.ndarray]:
        """
        Leave-one-out predictions on the training rows.

        Returns ``(predictions, fallback)``; ``fallback[t]`` is True when every
        resample contained ``t`` and all B models had to be aggregated.
        """
        X_train = _as_2d(X_train)
        if X_train.shape[0] != self.n_train:
            raise ShapeError(f"ensemble was fit on {self.n_train} rows, got {X_train.shape[0]}")
        preds = self.model_predictions(X_train)
        out_of_bag = ~self.in_bag
        fallback = ~out_of_bag.any(axis=0)
        mask = out_of_bag | fallback[None, :]
        if self.aggregator is Aggregator.MEAN:
            loo = np.sum(preds * mask, axis=0) / np.sum(mask, axis=0)
        else:
            loo = np.nanmedian(np.where(mask, preds, np.nan), axis=0)
        return loo, fallback


def fit_ensemble(
    X,
    y,
    template,
    B: int = 25,
    aggregator: Aggregator | str = Aggregator.MEAN,
    seed: RngSeed = RngSeed(),
    sample_size: Optional[int] = None,
) -> BootstrapEnsemble:
    """
    Fit B bootstrap clones of ``template``.

    Index sets are drawn i.i.d. uniformly with replacement from the ``n``
    training rows, each of size ``sample_size`` (default ``n``). Clone ``b``
    is seeded with ``seed.child(b)``.
    """
    X = _as_2d(X)
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    if X.shape[0] != n:
        raise ShapeError(f"{X.shape[0]} rows but {n} targets")
    if B < 1:
        raise DomainError(f"B must be >= 1, got {B}")
    if n < 2:
        raise InsufficientDataError(f"need at least 2 training rows, have {n}")
    m = n if sample_size is None else int(sample_size)
    rng = seed.generator()
    index_sets = rng.integers(0, n, size=(B, m))
    models = []
    for b in range(B):
        s = index_sets[b]
        models.append(clone_with_seed(template, seed.child(b)).fit(X[s], y[s]))
    return BootstrapEnsemble(index_sets=index_sets, models=models, aggregator=Aggregator(aggregator), n_train=n)


def fit_dataset_ensemble(
    data: TimeSeriesDataset, template, B: int = 25, aggregator=Aggregator.MEAN, seed: RngSeed = RngSeed()
) -> BootstrapEnsemble:
    return fit_ensemble(data.X_train, data.y_train, template, B, aggregator, seed)


def loo_residuals(ensemble: BootstrapEnsemble, X_train, y_train) -> tuple[np.ndarray, np.ndarray]:
    """``y_t`` minus the leave-one-out aggregate; also returns the fallback flags."""
    loo, fallback = ensemble.loo_predictions(X_train)
    if fallback.any():
        log.warning("%d training rows were in every bootstrap resample; used all models", int(fallback.sum()))
    return np.asarray(y_train, dtype=float).ravel() - loo, fallback


def ensemble_predict(ensemble: BootstrapEnsemble, x) -> float:
    return float(ensemble.predict(_as_2d(x))[0])
