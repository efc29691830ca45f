"""
Synthetic series for coverage experiments.

* ``nstat``: seasonal-times-nonlinear autoregression with AR(1) errors.
* ``hetero``: nonlinear signal with noise scale ``sum(X_t)`` over growing
  uniform features.
* ``drift``: linear model whose coefficients interpolate between two ends.
* ``changepoint``: linear model with two coefficient jumps.
* ``ar1``: plain autoregression.

Time indices are 1-based in formulas (``t = 1..N``), arrays are 0-based.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import RngSeed, TimeSeriesDataset, build_autoregressive_features
from .errors import DomainError, InsufficientDataError

__all__ = [
    "SimulationKind",
    "NstatSample",
    "HeteroSample",
    "LinearShiftSample",
    "seasonal_gain",
    "nonlinear_link",
    "generate_nstat",
    "generate_hetero",
    "drift_coefficients",
    "changepoint_coefficients",
    "generate_drift",
    "generate_changepoint",
    "generate_ar1",
    "lag_autocorrelation",
]

log = logging.getLogger(__name__)

DRIFT_START = np.array([2.0, 1.0, 0.0, 0.0])
DRIFT_END = np.array([0.0, 0.0, 2.0, 1.0])
CHANGEPOINT_REGIMES = (
    (500, np.array([2.0, 1.0, 0.0, 0.0])),
    (1500, np.array([0.0, -2.0, -1.0, 0.0])),
    (None, np.array([0.0, 0.0, 2.0, 1.0])),
)


class SimulationKind(str, enum.Enum):
    NSTAT = "nstat"
    HETERO = "hetero"
    DRIFT = "drift"
    CHANGEPOINT = "changepoint"
    AR1 = "ar1"


def seasonal_gain(t) -> np.ndarray:
    """``log(t') sin(2 pi t'/12)`` with ``t' = t mod 12``; zero at ``t' = 0`` (continuous limit)."""
    tp = np.mod(np.asarray(t), 12).astype(float)
    out = np.zeros_like(tp)
    nz = tp > 0
    out[nz] = np.log(tp[nz]) * np.sin(2 * np.pi * tp[nz] / 12)
    return out


def nonlinear_link(u) -> np.ndarray:
    """``(|u| + u^2 + |u|^3)^(1/4)``."""
    a = np.abs(np.asarray(u, dtype=float))
    return (a + a**2 + a**3) ** 0.25


@dataclass(frozen=True)
class NstatSample:
    series: np.ndarray
    time_feature: np.ndarray
    beta: np.ndarray
    errors: np.ndarray
    lags: int

    def to_dataset(self, train_size: Optional[int] = None, include_time: bool = True) -> TimeSeriesDataset:
        """Rows ``[t mod 12, Y_{t-w}, ..., Y_{t-1}] -> Y_t`` (time column optional)."""
        exog = self.time_feature if include_time else None
        names = ("t_mod12",) if include_time else ()
        return build_autoregressive_features(self.series, self.lags, exog=exog, train_size=train_size, exog_names=names)


def generate_nstat(
    N: int,
    w: int = 5,
    rho: float = 0.6,
    seed: RngSeed = RngSeed(),
    beta: Optional[np.ndarray] = None,
) -> NstatSample:
    """
    ``Y_t = g(t) h(beta' X_t) + eps_t`` with ``X_t = [Y_{t-w}, ..., Y_{t-1}]``.

    ``eps_t = rho eps_{t-1} + e_t`` with standard normal innovations and a
    stationary start. The first ``w`` responses are standard normal
    warm-up values. ``beta`` defaults to i.i.d. Uniform[0, 1] entries drawn
    from ``seed``.
    """
    if N <= w or w < 1:
        raise InsufficientDataError(f"need N > w >= 1, got N={N}, w={w}")
    rng = seed.generator()
    beta = rng.uniform(0.0, 1.0, size=w) if beta is None else np.asarray(beta, dtype=float)
    innov = rng.standard_normal(N)
    eps = np.empty(N)
    eps[0] = innov[0] / math.sqrt(1.0 - rho**2) if abs(rho) < 1 else innov[0]
    for i in range(1, N):
        eps[i] = rho * eps[i - 1] + innov[i]
    t = np.arange(1, N + 1)
    gain = seasonal_gain(t)
    y = np.empty(N)
    y[:w] = rng.standard_normal(w)
    for i in range(w, N):
        y[i] = gain[i] * nonlinear_link(beta @ y[i - w : i]) + eps[i]
    return NstatSample(series=y, time_feature=np.mod(t, 12).astype(float), beta=beta, errors=eps, lags=w)


@dataclass(frozen=True)
class HeteroSample:
    features: np.ndarray
    responses: np.ndarray
    sigma: np.ndarray
    signal: np.ndarray
    beta: np.ndarray

    def to_dataset(self, train_size: Optional[int] = None) -> TimeSeriesDataset:
        n = self.responses.shape[0]
        return TimeSeriesDataset(self.features, self.responses, n if train_size is None else train_size)


def generate_hetero(N: int, d: int = 20, seed: RngSeed = RngSeed(), beta: Optional[np.ndarray] = None) -> HeteroSample:
    """
    ``Y_t = h(beta' X_t) + sigma(X_t) z_t`` with ``sigma(X_t) = sum(X_t)``.

    Feature entries are i.i.d. ``Uniform[0, exp(0.01 (t mod 100)))``.
    """
    if N < 1 or d < 1:
        raise DomainError(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    rng = seed.generator()
    beta = rng.uniform(0.0, 1.0, size=d) if beta is None else np.asarray(beta, dtype=float)
    t = np.arange(1, N + 1)
    upper = np.exp(0.01 * np.mod(t, 100))
    X = rng.uniform(0.0, 1.0, size=(N, d)) * upper[:, None]
    return _hetero_from_features(X, beta, rng.standard_normal(N))


def _hetero_from_features(X: np.ndarray, beta: np.ndarray, z: np.ndarray) -> HeteroSample:
    signal = nonlinear_link(X @ beta)
    sigma = X.sum(axis=1)
    return HeteroSample(features=X, responses=signal + sigma * z, sigma=sigma, signal=signal, beta=beta)


@dataclass(frozen=True)
class LinearShiftSample:
    """Features, responses, and the per-row coefficient vectors that generated them."""

    features: np.ndarray
    responses: np.ndarray
    betas: np.ndarray
    change_indices: tuple[int, ...] = ()

    def to_dataset(self, train_size: int = 100) -> TimeSeriesDataset:
        return TimeSeriesDataset(self.features, self.responses, train_size)


def drift_coefficients(N: int) -> np.ndarray:
    """Row ``i`` (1-based) is ``beta_1 + (i - 1)/(N - 1) (beta_N - beta_1)``."""
    if N < 2:
        raise InsufficientDataError(f"drift needs N >= 2, got {N}")
    frac = np.arange(N, dtype=float) / (N - 1)
    return DRIFT_START[None, :] + frac[:, None] * (DRIFT_END - DRIFT_START)[None, :]


def changepoint_coefficients(N: int) -> np.ndarray:
    if N < 1501:
        raise InsufficientDataError(f"changepoint design needs N >= 1501, got {N}")
    betas = np.empty((N, 4))
    start = 0
    for end, b in CHANGEPOINT_REGIMES:
        stop = N if end is None else end
        betas[start:stop] = b
        start = stop
    return betas


def _linear_shift(betas: np.ndarray, seed: RngSeed, changes: tuple[int, ...]) -> LinearShiftSample:
    rng = seed.generator()
    N = betas.shape[0]
    X = rng.standard_normal((N, 4))
    y = np.einsum("ij,ij->i", X, betas) + rng.standard_normal(N)
    return LinearShiftSample(features=X, responses=y, betas=betas, change_indices=changes)


def generate_drift(N: int = 2000, seed: RngSeed = RngSeed()) -> LinearShiftSample:
    return _linear_shift(drift_coefficients(N), seed, ())


def generate_changepoint(N: int = 2000, seed: RngSeed = RngSeed()) -> LinearShiftSample:
    """Coefficients switch after rows 500 and 1500 (1-based)."""
    return _linear_shift(changepoint_coefficients(N), seed, (500, 1500))


def generate_ar1(N: int, a: float = 0.8, noise_sd: float = 1.0, seed: RngSeed = RngSeed()) -> np.ndarray:
    """``x_t = a x_{t-1} + noise``, started from the stationary law when ``|a| < 1``."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if abs(a) >= 1:
        log.warning("AR(1) coefficient %s is not stationary; starting from N(0, noise_sd^2)", a)
    rng = seed.generator()
    e = rng.standard_normal(N) * noise_sd
    x = np.empty(N)
    x[0] = e[0] / math.sqrt(1 - a * a) if abs(a) < 1 else e[0]
    for i in range(1, N):
        x[i] = a * x[i - 1] + e[i]
    return x


def lag_autocorrelation(x, lag: int = 1) -> float:
    x = np.asarray(x, dtype=float) - np.mean(x)
    return float(np.dot(x[:-lag], x[lag:]) / np.dot(x, x))
