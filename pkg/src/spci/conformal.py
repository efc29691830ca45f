"""
Single-step interval constructors.

Split conformal calibrates once on a held-out half. EnbPI and the weighted
variant add empirical (or geometrically weighted) residual quantiles from a
sliding window to the point prediction. SPCI instead fits a quantile forest
on lagged residuals and picks the lower tail mass ``beta`` in ``[0, alpha]``
that minimizes ``Q(1 - alpha + beta) - Q(beta)``. AdaptiveCI moves its
working miscoverage level after every hit or miss.

All sequential constructors are driven by the caller in this order: build
the interval for time t, observe ``y_t``, then push the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol

import numpy as np

from .core import (
    LaggedResidualSet,
    Method,
    PredictionInterval,
    ResidualWindow,
    RngSeed,
    TimeSeriesDataset,
    build_lagged_residual_set,
)
from .errors import (
    DomainError,
    EmptyInputError,
    InsufficientDataError,
    NonpositiveScaleError,
)
from .predictors import LeastSquares, _as_2d, clone_with_seed
from .quantile_forest import PROB_TOL, ForestParams, QuantileForest, inverse_weighted_cdf

__all__ = [
    "empirical_quantile",
    "weighted_empirical_quantile",
    "SplitConformal",
    "split_conformal",
    "enbpi_step",
    "beta_grid",
    "spci_beta_search",
    "SpciConfig",
    "SpciState",
    "ResidualQuantileModel",
    "LaggedForestQuantiles",
    "SingleLeafQuantiles",
    "spci_step",
    "spci_step_normalized",
    "AbsResidualScale",
    "AdaptiveAlphaState",
    "adaptive_ci_step",
    "weighted_quantile_step",
]


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    return float(alpha)


def empirical_quantile(values, p: float) -> float:
    """
    The ``ceil(p * n)``-th smallest value (1-indexed); ``p = 0`` gives the minimum.

    >>> empirical_quantile([3.0, 1.0, 2.0], 0.5)
    2.0
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.shape[0]
    if n == 0:
        raise EmptyInputError("empirical quantile of an empty set")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    k = min(max(math.ceil(n * (p - PROB_TOL)), 1), n)
    return float(np.partition(v, k - 1)[k - 1])


def weighted_empirical_quantile(values, weights, p: float) -> float:
    """``inf{z : sum of normalized weights on values <= z >= p}``."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.shape[0] == 0:
        raise EmptyInputError("weighted quantile of an empty set")
    if np.any(w < 0) or not np.any(w > 0):
        raise DomainError("weights must be nonnegative with positive total")
    order = np.argsort(v, kind="stable")
    return float(inverse_weighted_cdf(v[order], w[order] / w.sum(), [p])[0])


# ---------------------------------------------------------------------------
# split conformal


@dataclass
class SplitConformal:
    """
    Fit on a random half of the training rows, calibrate on the other half.

    The calibration residual set never changes, so every interval has the
    same width.
    """

    predictor: object
    alpha: float = 0.1
    seed: RngSeed = field(default_factory=RngSeed)

    def fit(self, X, y) -> "SplitConformal":
        _check_alpha(self.alpha)
        X = _as_2d(X)
        y = np.asarray(y, dtype=float).ravel()
        n = y.shape[0]
        if n < 4:
            raise InsufficientDataError(f"split conformal needs >= 4 training rows, have {n}")
        perm = self.seed.generator().permutation(n)
        self.fit_idx_ = np.sort(perm[: n // 2])
        self.calib_idx_ = np.sort(perm[n // 2 :])
        self.model_ = clone_with_seed(self.predictor, self.seed.child(0)).fit(
            X[self.fit_idx_], y[self.fit_idx_]
        )
        self.residuals_ = y[self.calib_idx_] - np.asarray(self.model_.predict(X[self.calib_idx_])).ravel()
        self.lower_offset_ = empirical_quantile(self.residuals_, self.alpha / 2)
        self.upper_offset_ = empirical_quantile(self.residuals_, 1 - self.alpha / 2)
        return self

    def interval(self, x, time_index: int = 0) -> PredictionInterval:
        point = float(np.asarray(self.model_.predict(_as_2d(x))).ravel()[0])
        return PredictionInterval(
            time_index=time_index,
            point=point,
            lower=point + self.lower_offset_,
            upper=point + self.upper_offset_,
            method=Method.SPLIT,
            alpha=self.alpha,
        )

    def intervals(self, X, start_index: int = 0) -> list[PredictionInterval]:
        X = _as_2d(X)
        points = np.asarray(self.model_.predict(X)).ravel()
        return [
            PredictionInterval(
                time_index=start_index + i,
                point=float(p),
                lower=float(p) + self.lower_offset_,
                upper=float(p) + self.upper_offset_,
                method=Method.SPLIT,
                alpha=self.alpha,
            )
            for i, p in enumerate(points)
        ]


def split_conformal(data: TimeSeriesDataset, predictor, alpha: float = 0.1, seed: RngSeed = RngSeed()) -> SplitConformal:
    return SplitConformal(predictor, alpha, seed).fit(data.X_train, data.y_train)


# ---------------------------------------------------------------------------
# EnbPI


def _point(predictor, x) -> float:
    if isinstance(predictor, (int, float, np.number)):
        return float(predictor)
    return float(np.asarray(predictor.predict(_as_2d(x))).ravel()[0])


def enbpi_step(predictor, window: ResidualWindow, x_t, alpha: float, time_index: int = 0) -> PredictionInterval:
    """
    ``[f(x_t) + q_{alpha/2}, f(x_t) + q_{1-alpha/2}]`` over the current window.

    ``predictor`` is a fitted model (typically a :class:`BootstrapEnsemble`)
    or an already computed point prediction.
    """
    _check_alpha(alpha)
    if len(window) == 0:
        raise EmptyInputError("residual window is empty")
    point = _point(predictor, x_t)
    r = window.values
    return PredictionInterval(
        time_index=time_index,
        point=point,
        lower=point + empirical_quantile(r, alpha / 2),
        upper=point + empirical_quantile(r, 1 - alpha / 2),
        method=Method.ENBPI,
        beta=alpha / 2,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# SPCI


class ResidualQuantileModel(Protocol):
    """
    Fitted on the residual window, queried for quantiles of the next residual.

    ``quantiles`` receives the current window, which may be newer than the
    one the model was fit on when refits are strided.
    """

    def fit(self, residuals: np.ndarray, seed: RngSeed) -> "ResidualQuantileModel": ...

    def quantiles(self, ps, residuals: np.ndarray) -> np.ndarray: ...


@dataclass
class LaggedForestQuantiles:
    """Quantile forest on ``w`` lagged residuals, queried at the newest lags."""

    w: int = 20
    params: ForestParams = field(default_factory=ForestParams)

    def fit(self, residuals: np.ndarray, seed: RngSeed) -> "LaggedForestQuantiles":
        self.data_: LaggedResidualSet = build_lagged_residual_set(residuals, self.w)
        self.forest_ = QuantileForest(replace(self.params, seed=seed)).fit(self.data_.features, self.data_.targets)
        return self

    def query(self, residuals: np.ndarray) -> np.ndarray:
        """Newest-first vector of the last ``w`` residuals."""
        r = np.asarray(residuals, dtype=float).ravel()
        if r.shape[0] < self.w:
            raise InsufficientDataError(f"need {self.w} residuals to form a query, have {r.shape[0]}")
        return r[: -self.w - 1 : -1].copy()

    def quantiles(self, ps, residuals: np.ndarray) -> np.ndarray:
        return self.forest_.quantiles(self.query(residuals), ps)


@dataclass
class SingleLeafQuantiles:
    """
    A one-tree, one-leaf quantile forest over the whole window.

    Every weight is ``1/n``, so this is the empirical residual distribution;
    with ``beta = alpha/2`` SPCI then coincides with EnbPI.
    """

    def fit(self, residuals: np.ndarray, seed: RngSeed) -> "SingleLeafQuantiles":
        r = np.asarray(residuals, dtype=float).ravel()
        if r.shape[0] == 0:
            raise EmptyInputError("residual window is empty")
        params = ForestParams(n_trees=1, max_depth=0, bootstrap=False, seed=seed)
        self.forest_ = QuantileForest(params).fit(np.zeros((r.shape[0], 1)), r)
        return self

    def quantiles(self, ps, residuals: Optional[np.ndarray] = None) -> np.ndarray:
        return self.forest_.quantiles(np.zeros(1), ps)


def beta_grid(alpha: float, grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise DomainError(f"beta grid needs >= 2 points, got {grid_size}")
    return alpha * np.arange(grid_size) / (grid_size - 1)


def spci_beta_search(model, x_query, alpha: float = 0.1, grid_size: int = 21) -> tuple[float, float, float]:
    """
    Width-minimizing lower tail mass.

    Evaluates ``Q(1 - alpha + beta) - Q(beta)`` on the uniform grid over
    ``[0, alpha]`` and returns ``(beta_hat, Q(beta_hat), Q(1 - alpha + beta_hat))``;
    ties go to the smallest beta. ``model`` is a :class:`QuantileForest`
    queried at feature ``x_query``, or a fitted residual quantile model
    queried with the residual window ``x_query``.
    """
    _check_alpha(alpha)
    betas = beta_grid(alpha, grid_size)
    ps = np.concatenate([betas, np.minimum(1.0 - alpha + betas, 1.0)])
    q = model.quantiles(x_query, ps) if isinstance(model, QuantileForest) else model.quantiles(ps, x_query)
    lo, hi = q[:grid_size], q[grid_size:]
    j = int(np.argmin(hi - lo))
    return float(betas[j]), float(lo[j]), float(hi[j])


@dataclass(frozen=True)
class SpciConfig:
    """
    SPCI settings.

    ``refit_stride`` refits the residual quantile model every that many
    steps (1 refits every step); beta is re-searched every step regardless.
    ``fixed_beta`` skips the search. ``residual_capacity=None`` keeps as many
    residuals as the training block produced.
    """

    alpha: float = 0.1
    w: int = 20
    forest_params: ForestParams = field(default_factory=ForestParams)
    beta_grid_size: int = 21
    refit_stride: int = 1
    residual_capacity: Optional[int] = None
    normalize_heteroskedastic: bool = False
    fixed_beta: Optional[float] = None

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if self.beta_grid_size < 2:
            raise DomainError("beta_grid_size must be >= 2")
        if self.refit_stride < 1:
            raise DomainError("refit_stride must be >= 1")
        if self.w < 1:
            raise DomainError("w must be >= 1")
        if self.fixed_beta is not None and not 0.0 <= self.fixed_beta <= self.alpha:
            raise DomainError("fixed_beta must lie in [0, alpha]")

    def quantile_model(self) -> LaggedForestQuantiles:
        return LaggedForestQuantiles(self.w, self.forest_params)


@dataclass
class SpciState:
    """Mutable loop state: step counter and the current residual quantile model."""

    step: int = 0
    model: Optional[object] = None
    model_factory: Optional[Callable[[], object]] = None
    seed: RngSeed = field(default_factory=RngSeed)
    last_fit_step: int = -1


def _spci_quantiles(window: ResidualWindow, config: SpciConfig, state: SpciState) -> tuple[float, float, float]:
    r = window.values
    if state.model is None or state.step % config.refit_stride == 0:
        model = (state.model_factory or config.quantile_model)()
        needed = getattr(model, "w", 0) + 1
        if len(window) < needed:
            raise InsufficientDataError(f"SPCI needs >= {needed} residuals, window has {len(window)}")
        state.model = model.fit(r, state.seed.child(state.step))
        state.last_fit_step = state.step
    if config.fixed_beta is not None:
        beta = config.fixed_beta
        lo, hi = state.model.quantiles([beta, 1.0 - config.alpha + beta], r)
        return beta, float(lo), float(hi)
    return spci_beta_search(state.model, r, config.alpha, config.beta_grid_size)


def spci_step(
    predictor,
    window: ResidualWindow,
    x_t,
    config: SpciConfig,
    state: SpciState,
    time_index: int = 0,
) -> PredictionInterval:
    """
    One SPCI interval ``[f(x_t) + Q(beta), f(x_t) + Q(1 - alpha + beta)]``.

    Refits the residual quantile model when the step counter hits the
    stride, searches beta, and advances the counter. The caller pushes the
    realized residual afterwards.
    """
    point = _point(predictor, x_t)
    beta, lo, hi = _spci_quantiles(window, config, state)
    state.step += 1
    return PredictionInterval(
        time_index=time_index,
        point=point,
        lower=point + lo,
        upper=point + hi,
        method=Method.SPCI,
        beta=beta,
        alpha=config.alpha,
    )


def spci_step_normalized(
    predictor,
    window: ResidualWindow,
    x_t,
    config: SpciConfig,
    state: SpciState,
    sigma_estimator,
    time_index: int = 0,
) -> PredictionInterval:
    """
    SPCI on residuals divided by a scale estimate.

    The window must hold normalized residuals ``(y - f(x)) / sigma(x)``;
    the quantiles are rescaled by ``sigma(x_t)``.
    """
    sigma = _scale(sigma_estimator, x_t)
    point = _point(predictor, x_t)
    beta, lo, hi = _spci_quantiles(window, config, state)
    state.step += 1
    return PredictionInterval(
        time_index=time_index,
        point=point,
        lower=point + sigma * lo,
        upper=point + sigma * hi,
        method=Method.SPCI,
        beta=beta,
        alpha=config.alpha,
        extra={"sigma": sigma},
    )


def _scale(sigma_estimator, x) -> float:
    if callable(sigma_estimator) and not hasattr(sigma_estimator, "predict"):
        sigma = float(sigma_estimator(x))
    elif hasattr(sigma_estimator, "predict"):
        sigma = float(np.asarray(sigma_estimator.predict(_as_2d(x))).ravel()[0])
    else:
        sigma = float(sigma_estimator)
    if not sigma > 0.0:
        raise NonpositiveScaleError(f"scale estimate must be > 0, got {sigma}")
    return sigma


@dataclass
class AbsResidualScale:
    """
    Scale model: regress absolute residuals on features, floor the fit.

    The floor (``floor_fraction`` times the mean absolute residual) keeps
    the estimate strictly positive when the regression dips below zero.
    """

    regressor: object = field(default_factory=LeastSquares)
    floor_fraction: float = 0.05

    def fit(self, X, residuals) -> "AbsResidualScale":
        a = np.abs(np.asarray(residuals, dtype=float).ravel())
        self.model_ = clone_with_seed(self.regressor, RngSeed()).fit(_as_2d(X), a)
        self.floor_ = max(self.floor_fraction * float(np.mean(a)), 1e-12)
        return self

    def predict(self, X) -> np.ndarray:
        return np.maximum(np.asarray(self.model_.predict(_as_2d(X))).ravel(), self.floor_)


# ---------------------------------------------------------------------------
# AdaptiveCI


ALPHA_CLAMP = (0.001, 0.999)


@dataclass(frozen=True)
class AdaptiveAlphaState:
    """Working miscoverage level, updated ``alpha += gamma * (target - err)``."""

    alpha_t: float = 0.1
    gamma: float = 0.005
    target_alpha: float = 0.1

    def __post_init__(self) -> None:
        _check_alpha(self.target_alpha)
        lo, hi = ALPHA_CLAMP
        object.__setattr__(self, "alpha_t", min(max(float(self.alpha_t), lo), hi))

    def update(self, miss: bool) -> "AdaptiveAlphaState":
        return replace(self, alpha_t=self.alpha_t + self.gamma * (self.target_alpha - float(miss)))


def adaptive_ci_step(
    state: AdaptiveAlphaState,
    quantile_model: QuantileForest,
    x_t,
    y_t: Optional[float] = None,
    time_index: int = 0,
) -> tuple[PredictionInterval, AdaptiveAlphaState]:
    """
    ``[Q_Y(alpha_t/2 | x_t), Q_Y(1 - alpha_t/2 | x_t)]`` from a forest fit on
    ``(X, Y)`` pairs. The interval uses only ``state``; when ``y_t`` is given
    the returned state has absorbed the hit/miss, otherwise it is unchanged.
    """
    a = state.alpha_t
    lo, hi, mid = quantile_model.quantiles(x_t, [a / 2, 1 - a / 2, 0.5])
    interval = PredictionInterval(
        time_index=time_index,
        point=float(mid),
        lower=float(lo),
        upper=float(hi),
        method=Method.ADAPTIVE_CI,
        alpha=a,
    )
    if y_t is None:
        return interval, state
    return interval, state.update(not interval.covers(y_t))


# ---------------------------------------------------------------------------
# weighted quantile baseline


def weighted_quantile_step(
    window: ResidualWindow,
    x_t,
    point: float,
    alpha: float,
    decay: float = 0.99,
    time_index: int = 0,
) -> PredictionInterval:
    """
    Interval from geometrically weighted residual quantiles.

    The residual of age ``a`` (0 = newest) gets weight ``decay**a``.
    ``decay=1`` reproduces :func:`enbpi_step`.
    """
    _check_alpha(alpha)
    if not 0.0 < decay <= 1.0:
        raise DomainError(f"decay must be in (0, 1], got {decay}")
    if len(window) == 0:
        raise EmptyInputError("residual window is empty")
    r = window.values
    ages = np.arange(r.shape[0] - 1, -1, -1, dtype=float)
    # log-space keeps tiny decays from underflowing to all-zero weights
    logw = ages * math.log(decay)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    order = np.argsort(r, kind="stable")
    lo, hi = inverse_weighted_cdf(r[order], w[order], [alpha / 2, 1 - alpha / 2])
    point = float(point)
    return PredictionInterval(
        time_index=time_index,
        point=point,
        lower=point + float(lo),
        upper=point + float(hi),
        method=Method.WEIGHTED_QUANTILE,
        alpha=alpha,
    )
