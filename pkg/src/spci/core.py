"""
Core data types shared by every interval constructor.

Holds the dataset container, the sliding residual buffer that drives all
sequential methods, the lagged residual design used to train the residual
quantile model, the per-step interval record, and seed bookkeeping for
reproducible random streams.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, ShapeError

__all__ = [
    "RngSeed",
    "TimeSeriesDataset",
    "ResidualWindow",
    "LaggedResidualSet",
    "Method",
    "PredictionInterval",
    "build_autoregressive_features",
    "build_lagged_residual_set",
    "push_residual",
]

_U64 = 2**64


@dataclass(frozen=True)
class RngSeed:
    """
    Address of an independent random stream.

    The same ``(master_seed, stream_id, path)`` always yields the same
    stream, no matter which worker consumes it or in which order, so
    parallel tree fitting and multi-seed runs stay reproducible.

    Parameters
    ----------
    master_seed : int
        Unsigned 64-bit experiment seed.
    stream_id : int
        Top-level stream number (e.g. the trial index).
    path : tuple of int
        Sub-stream keys appended by :meth:`child`.
    """

    master_seed: int = 0
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < _U64:
            raise DomainError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        if int(self.stream_id) < 0 or any(int(k) < 0 for k in self.path):
            raise DomainError("stream keys must be nonnegative")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            int(self.master_seed), spawn_key=(int(self.stream_id), *map(int, self.path))
        )

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence())

    def child(self, *keys: int) -> "RngSeed":
        """Derive a sub-stream; distinct key paths give independent streams."""
        return replace(self, path=self.path + tuple(int(k) for k in keys))

    def int_seed(self) -> int:
        """A 31-bit integer drawn from this stream (for seeding compiled kernels)."""
        return int(self.seed_sequence().generate_state(1, np.uint32)[0] >> 1)


@dataclass(frozen=True)
class TimeSeriesDataset:
    """
    Temporally ordered ``(feature, response)`` pairs with a train/test cut.

    Row ``i`` precedes row ``i + 1`` in time. The first ``train_size`` rows
    are the training block; the remainder is predicted sequentially.
    """

    features: np.ndarray
    responses: np.ndarray
    train_size: int
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.responses, dtype=float).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"{X.shape[0]} feature rows but {y.shape[0]} responses")
        if not 1 <= int(self.train_size) <= y.shape[0]:
            raise InsufficientDataError(
                f"train_size must lie in [1, {y.shape[0]}], got {self.train_size}"
            )
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "train_size", int(self.train_size))
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ShapeError("feature_names length does not match feature columns")
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return self.responses.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def X_train(self) -> np.ndarray:
        return self.features[: self.train_size]

    @property
    def y_train(self) -> np.ndarray:
        return self.responses[: self.train_size]

    @property
    def X_test(self) -> np.ndarray:
        return self.features[self.train_size :]

    @property
    def y_test(self) -> np.ndarray:
        return self.responses[self.train_size :]

    def with_train_size(self, train_size: int) -> "TimeSeriesDataset":
        return replace(self, train_size=train_size)

    def with_train_fraction(self, fraction: float) -> "TimeSeriesDataset":
        if not 0.0 < fraction < 1.0:
            raise DomainError(f"train fraction must be in (0, 1), got {fraction}")
        return self.with_train_size(max(1, int(round(fraction * len(self)))))


class ResidualWindow:
    """
    FIFO buffer of the most recent residuals.

    ``push`` beyond ``capacity`` evicts exactly the oldest value. Each value
    may carry the time index it was observed at, which the experiment runner
    uses to audit that nothing from the future reaches an interval.
    """

    def __init__(
        self,
        capacity: int,
        values: Iterable[float] = (),
        indices: Optional[Iterable[int]] = None,
    ) -> None:
        if int(capacity) < 1:
            raise DomainError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        vals = [float(v) for v in values]
        idx = [-1] * len(vals) if indices is None else [int(i) for i in indices]
        if len(idx) != len(vals):
            raise ShapeError("indices and values differ in length")
        self._values: deque[float] = deque(vals, maxlen=self.capacity)
        self._indices: deque[int] = deque(idx, maxlen=self.capacity)

    def push(self, value: float, time_index: int = -1) -> None:
        self._values.append(float(value))
        self._indices.append(int(time_index))

    def extend(self, values: Iterable[float], indices: Optional[Iterable[int]] = None) -> None:
        vals = list(values)
        idx = [-1] * len(vals) if indices is None else list(indices)
        for v, i in zip(vals, idx):
            self.push(v, i)

    def copy(self) -> "ResidualWindow":
        return ResidualWindow(self.capacity, self._values, self._indices)

    @property
    def values(self) -> np.ndarray:
        return np.fromiter(self._values, dtype=float, count=len(self._values))

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter(self._indices, dtype=np.int64, count=len(self._indices))

    @property
    def last_index(self) -> int:
        return self._indices[-1] if self._indices else -1

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self) -> str:
        return f"ResidualWindow(capacity={self.capacity}, len={len(self)})"


def push_residual(window: ResidualWindow, residual: float, time_index: int = -1) -> ResidualWindow:
    """Return a copy of ``window`` with ``residual`` appended (oldest evicted when full)."""
    out = window.copy()
    out.push(residual, time_index)
    return out


@dataclass(frozen=True)
class LaggedResidualSet:
    """
    Autoregressive design over a residual sequence.

    Row ``j`` of ``features`` holds the ``window`` residuals preceding
    ``targets[j]``, newest first. ``query`` is the newest-first vector of
    the last ``window`` residuals, i.e. the feature row for the next,
    not yet observed residual.
    """

    features: np.ndarray
    targets: np.ndarray
    window: int
    query: np.ndarray

    def __len__(self) -> int:
        return self.targets.shape[0]


def build_lagged_residual_set(residuals, w: int) -> LaggedResidualSet:
    """
    Build the lagged regression set for the residual quantile model.

    Parameters
    ----------
    residuals : ResidualWindow or array-like
        Residuals in temporal order.
    w : int
        Number of lags per feature row.

    Returns
    -------
    LaggedResidualSet
        ``len(residuals) - w`` rows.
    """
    r = residuals.values if isinstance(residuals, ResidualWindow) else np.asarray(residuals, float).ravel()
    w = int(w)
    if w < 1:
        raise DomainError(f"lag window must be >= 1, got {w}")
    if r.shape[0] <= w:
        raise InsufficientDataError(f"need more than {w} residuals, have {r.shape[0]}")
    # sliding_window_view rows are oldest-first; flip to newest-first
    views = np.lib.stride_tricks.sliding_window_view(r, w)[:, ::-1]
    features = np.ascontiguousarray(views[:-1])
    targets = r[w:].copy()
    query = np.ascontiguousarray(views[-1])
    return LaggedResidualSet(features=features, targets=targets, window=w, query=query)


def build_autoregressive_features(
    series,
    window: int,
    exog: Optional[np.ndarray] = None,
    train_size: Optional[int] = None,
    exog_names: Sequence[str] = (),
) -> TimeSeriesDataset:
    """
    Turn a univariate series into ``(lags, next value)`` rows.

    Row ``i`` has features ``[series[i], ..., series[i + window - 1]]``
    (oldest lag first) and response ``series[i + window]``. When ``exog``
    is given (one row per series element), the exogenous values observed at
    the response time are prepended to the lags. ``window=0`` with ``exog``
    yields a purely exogenous design.
    """
    y = np.asarray(series, dtype=float).ravel()
    window = int(window)
    if window < 0 or (window == 0 and exog is None):
        raise DomainError(f"lag window must be >= 1 without exogenous features, got {window}")
    if y.shape[0] < window + 1:
        raise InsufficientDataError(f"series of length {y.shape[0]} is too short for {window} lags")
    n = y.shape[0] - window
    blocks = []
    names: list[str] = []
    if exog is not None:
        E = np.asarray(exog, dtype=float)
        if E.ndim == 1:
            E = E[:, None]
        if E.shape[0] != y.shape[0]:
            raise ShapeError("exogenous rows must match series length")
        blocks.append(E[window:])
        names.extend(exog_names or [f"exog{j}" for j in range(E.shape[1])])
    if window > 0:
        blocks.append(np.lib.stride_tricks.sliding_window_view(y, window)[:n])
        names.extend(f"lag{window - j}" for j in range(window))
    X = np.ascontiguousarray(np.hstack(blocks))
    return TimeSeriesDataset(
        features=X,
        responses=y[window:].copy(),
        train_size=n if train_size is None else train_size,
        feature_names=tuple(names),
    )


class Method(str, enum.Enum):
    SPLIT = "split"
    ENBPI = "enbpi"
    SPCI = "spci"
    ADAPTIVE_CI = "adaptive-ci"
    WEIGHTED_QUANTILE = "weighted-quantile"
    MULTISTEP_SPCI = "multistep-spci"


@dataclass(frozen=True)
class PredictionInterval:
    time_index: int
    point: float
    lower: float
    upper: float
    method: Method
    beta: Optional[float] = None
    alpha: Optional[float] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.lower <= self.upper:
            raise DomainError(f"lower {self.lower} exceeds upper {self.upper} at t={self.time_index}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, y: float) -> bool:
        return self.lower <= y <= self.upper
