"""
Experiment orchestration: data preparation, the sequential prediction loop
for every method, coverage/width metrics, multi-trial aggregation, and
report files.

A trial is one seed. Within a trial every random draw comes from a named
sub-stream of ``RngSeed(seed)``:

=========  =======================================
stream     consumer
=========  =======================================
0          data generator
1          bootstrap ensemble / point predictor
2          residual quantile model (SPCI, AdaptiveCI)
3          split-conformal permutation
=========  =======================================

Time indices in reports are 0-based dataset rows; the test block starts at
``train_size``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import io as csv_io
from .conformal import (
    AbsResidualScale,
    AdaptiveAlphaState,
    SpciConfig,
    SpciState,
    SplitConformal,
    _point,
    adaptive_ci_step,
    enbpi_step,
    spci_step,
    spci_step_normalized,
    weighted_quantile_step,
)
from .core import Method, PredictionInterval, ResidualWindow, RngSeed, TimeSeriesDataset, build_autoregressive_features
from .errors import DomainError, InsufficientDataError, LeakageError, ShapeError, SpciError
from .multistep import fit_multistep, multistep_predict_block, push_block
from .predictors import (
    Aggregator,
    ExponentiallyWeightedLeastSquares,
    LeastSquares,
    RegressionForest,
    clone_with_seed,
    fit_ensemble,
    loo_residuals,
)
from .quantile_forest import ForestParams, QuantileForest
from .simulation import (
    SimulationKind,
    generate_ar1,
    generate_changepoint,
    generate_drift,
    generate_hetero,
    generate_nstat,
)

__all__ = [
    "StepRecord",
    "CoverageReport",
    "RollingSeries",
    "PointModel",
    "ExperimentConfig",
    "scenario_preset",
    "SCENARIOS",
    "LeakageAudit",
    "TrialResult",
    "ExperimentResult",
    "marginal_metrics",
    "rolling_metrics",
    "default_rolling_window",
    "prepare_dataset",
    "simulation_columns",
    "run_trial",
    "run_experiment",
    "run_bench",
    "write_artifacts",
    "write_bench",
    "format_sig",
]

log = logging.getLogger(__name__)

DATA_STREAM, ENSEMBLE_STREAM, QUANTILE_STREAM, SPLIT_STREAM = 0, 1, 2, 3


def format_sig(v: float, digits: int = 4) -> str:
    """Print with ``digits`` significant digits."""
    return f"{float(v):.{digits}g}"


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class StepRecord:
    trial: int
    t: int
    y_true: float
    point: float
    lower: float
    upper: float
    covered: bool
    width: float
    beta: Optional[float]
    method: str

    @classmethod
    def from_interval(cls, iv: PredictionInterval, y: float, trial: int = 0) -> "StepRecord":
        return cls(
            trial=trial,
            t=iv.time_index,
            y_true=float(y),
            point=iv.point,
            lower=iv.lower,
            upper=iv.upper,
            covered=iv.covers(y),
            width=iv.width,
            beta=iv.beta,
            method=Method(iv.method).value,
        )


@dataclass(frozen=True)
class CoverageReport:
    """
    Marginal coverage and mean width.

    For a single trial these are plain means over steps. For several
    trials they are means of the per-trial values, with sample standard
    deviations across trials (0 for one trial).
    """

    marginal_coverage: float
    mean_width: float
    per_step: tuple[StepRecord, ...] = ()
    trials: int = 1
    coverage_sd: float = 0.0
    width_sd: float = 0.0
    trial_coverages: tuple[float, ...] = ()
    trial_widths: tuple[float, ...] = ()


@dataclass(frozen=True)
class RollingSeries:
    """Trailing-window means; entry ``k`` covers steps ``k .. k + window - 1``."""

    window: int
    t: np.ndarray
    coverage_t: np.ndarray
    width_t: np.ndarray


def _bounds(intervals) -> tuple[np.ndarray, np.ndarray, list]:
    if isinstance(intervals, tuple) and len(intervals) == 2 and not isinstance(intervals[0], PredictionInterval):
        lo = np.asarray(intervals[0], dtype=float).ravel()
        hi = np.asarray(intervals[1], dtype=float).ravel()
        return lo, hi, []
    ivs = list(intervals)
    lo = np.array([iv.lower for iv in ivs], dtype=float)
    hi = np.array([iv.upper for iv in ivs], dtype=float)
    return lo, hi, ivs


def marginal_metrics(intervals, truths, trial: int = 0) -> CoverageReport:
    """
    Coverage ``mean(lower <= y <= upper)`` and mean width.

    ``intervals`` is a sequence of :class:`PredictionInterval` or a
    ``(lower, upper)`` pair of arrays.
    """
    lo, hi, ivs = _bounds(intervals)
    y = np.asarray(truths, dtype=float).ravel()
    if lo.shape != y.shape:
        raise ShapeError(f"{lo.shape[0]} intervals but {y.shape[0]} observations")
    if y.shape[0] == 0:
        raise InsufficientDataError("no intervals to evaluate")
    covered = (lo <= y) & (y <= hi)
    per_step = tuple(StepRecord.from_interval(iv, yy, trial) for iv, yy in zip(ivs, y))
    cov = float(np.mean(covered))
    wid = float(np.mean(hi - lo))
    return CoverageReport(cov, wid, per_step, 1, 0.0, 0.0, (cov,), (wid,))


def default_rolling_window(n_test: int) -> int:
    return 100 if n_test >= 1000 else 50


def rolling_metrics(intervals, truths, window: int) -> RollingSeries:
    """Trailing means of coverage and width; needs at least ``window`` steps."""
    lo, hi, ivs = _bounds(intervals)
    y = np.asarray(truths, dtype=float).ravel()
    if lo.shape != y.shape:
        raise ShapeError(f"{lo.shape[0]} intervals but {y.shape[0]} observations")
    window = int(window)
    if window < 1:
        raise DomainError(f"rolling window must be >= 1, got {window}")
    n = y.shape[0]
    if n < window:
        raise InsufficientDataError(f"{n} steps is fewer than the rolling window {window}")
    covered = ((lo <= y) & (y <= hi)).astype(np.int64)
    counts = np.concatenate([[0], np.cumsum(covered)])
    cov_t = (counts[window:] - counts[:-window]) / window
    wid_t = np.lib.stride_tricks.sliding_window_view(hi - lo, window).mean(axis=1)
    times = np.array([iv.time_index for iv in ivs], dtype=np.int64) if ivs else np.arange(n, dtype=np.int64)
    return RollingSeries(window, times[window - 1 :], cov_t, wid_t)


# ---------------------------------------------------------------------------
# configuration


class PointModel(str, enum.Enum):
    FOREST = "forest"
    LS = "ls"
    EWLS = "ewls"


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything needed to reproduce one experiment.

    Exactly one data source is set: ``sim`` (a generator) or ``data_path``
    (a CSV). ``train_size`` overrides ``train_frac`` when given. With
    ``rolling_refit = T0`` the point predictor is refit before every test
    step on the latest ``min(t, T0)`` rows instead of staying fixed.
    """

    method: Method = Method.SPCI
    alpha: float = 0.1
    seeds: tuple[int, ...] = (0,)
    sim: Optional[SimulationKind] = None
    sim_length: Optional[int] = None
    data_path: Optional[str] = None
    target_col: Union[str, int] = "y"
    exog_cols: tuple[str, ...] = ()
    lags: Optional[int] = None
    include_time: bool = True
    ar_coef: float = 0.8
    train_frac: float = 0.8
    train_size: Optional[int] = None
    B: int = 25
    aggregator: Aggregator = Aggregator.MEAN
    point_model: PointModel = PointModel.FOREST
    point_trees: int = 10
    point_depth: Optional[int] = None
    decay: float = 0.99
    forest: ForestParams = field(default_factory=ForestParams)
    w: int = 20
    horizon: int = 1
    beta_grid: int = 21
    refit_stride: int = 1
    residual_capacity: Optional[int] = None
    normalize: bool = False
    rolling_refit: Optional[int] = None
    gamma: float = 0.005
    rolling_window: Optional[int] = None
    n_jobs: int = 1
    audit: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "aggregator", Aggregator(self.aggregator))
        object.__setattr__(self, "point_model", PointModel(self.point_model))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "exog_cols", tuple(self.exog_cols))
        if self.sim is not None:
            object.__setattr__(self, "sim", SimulationKind(self.sim))
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.train_frac < 1.0:
            raise DomainError(f"train fraction must be in (0, 1), got {self.train_frac}")
        if not self.seeds:
            raise DomainError("at least one seed is required")
        if (self.sim is None) == (self.data_path is None):
            raise DomainError("set exactly one of sim and data_path")
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")
        if self.horizon > 1 and self.method is not Method.MULTISTEP_SPCI:
            raise DomainError("horizon > 1 requires the multistep-spci method")
        if self.rolling_refit is not None and self.rolling_refit < 2:
            raise DomainError("rolling refit window must be >= 2")
        if self.B < 1:
            raise DomainError("B must be >= 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def resolved_lags(self) -> int:
        if self.lags is not None:
            return int(self.lags)
        if self.sim is SimulationKind.AR1:
            return 1
        if self.data_path is not None and self.exog_cols:
            return 0
        return 20

    def spci_config(self, alpha: Optional[float] = None) -> SpciConfig:
        return SpciConfig(
            alpha=self.alpha if alpha is None else alpha,
            w=self.w,
            forest_params=self.forest,
            beta_grid_size=self.beta_grid,
            refit_stride=self.refit_stride,
            residual_capacity=self.residual_capacity,
            normalize_heteroskedastic=self.normalize,
        )

    def point_template(self):
        if self.point_model is PointModel.LS:
            return LeastSquares()
        if self.point_model is PointModel.EWLS:
            return ExponentiallyWeightedLeastSquares(decay=self.decay)
        return RegressionForest(n_trees=self.point_trees, max_depth=self.point_depth)

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, ForestParams):
                v = {k: getattr(v, k) for k in ("n_trees", "min_leaf_size", "max_depth", "features_per_split", "bootstrap", "n_jobs")}
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if isinstance(d.get("forest"), dict):
            d["forest"] = ForestParams(**d["forest"])
        for key in ("seeds", "exog_cols"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def scenario_preset(name: str, **overrides) -> ExperimentConfig:
    """
    Named experiment settings.

    ``nstat`` and ``hetero`` use 1000 training and 200 test rows with a
    forest of depth-one trees as the point model; ``hetero`` normalizes
    SPCI residuals by a fitted scale. ``drift`` and ``changepoint`` start
    after a burn-in of 100 rows and refit an exponentially weighted least
    squares model on the latest 300 / 200 rows before each step; their
    residual windows hold equally many residuals, and the residual forest
    uses leaves of at least 20 so its tail quantiles are not read off a
    handful of points. ``ar1``
    is a one-lag autoregression with a least-squares point model.
    """
    presets = {
        "nstat": dict(sim="nstat", sim_length=1220, lags=20, train_size=1000, point_depth=1, seeds=(0, 1, 2)),
        "hetero": dict(sim="hetero", sim_length=1200, train_size=1000, point_depth=1, normalize=True, seeds=(0, 1, 2)),
        "drift": dict(
            sim="drift", sim_length=2000, train_size=100, point_model="ewls", rolling_refit=300,
            residual_capacity=300, forest=ForestParams(min_leaf_size=20), seeds=(0, 1, 2),
        ),
        "changepoint": dict(
            sim="changepoint", sim_length=2000, train_size=100, point_model="ewls", rolling_refit=200,
            residual_capacity=200, forest=ForestParams(min_leaf_size=20), seeds=(0, 1, 2),
        ),
        "ar1": dict(sim="ar1", sim_length=1000, lags=1, point_model="ls", seeds=(0, 1, 2)),
    }
    if name not in presets:
        raise DomainError(f"unknown scenario {name!r}; choose from {sorted(presets)}")
    kw = {**presets[name], **overrides}
    return ExperimentConfig(**kw)


SCENARIOS = ("nstat", "hetero", "drift", "changepoint", "ar1")

_DEFAULT_LENGTH = {
    SimulationKind.NSTAT: 1220,
    SimulationKind.HETERO: 1200,
    SimulationKind.DRIFT: 2000,
    SimulationKind.CHANGEPOINT: 2000,
    SimulationKind.AR1: 1000,
}


# ---------------------------------------------------------------------------
# data


def simulation_columns(kind: SimulationKind | str, N: Optional[int], seed: RngSeed, lags: int = 20, ar_coef: float = 0.8) -> dict[str, np.ndarray]:
    """Raw generator output as named columns (the CSV dump layout)."""
    kind = SimulationKind(kind)
    N = _DEFAULT_LENGTH[kind] if N is None else int(N)
    t = np.arange(1, N + 1)
    if kind is SimulationKind.NSTAT:
        s = generate_nstat(N, w=lags, seed=seed)
        return {"t": t, "t_mod12": s.time_feature, "y": s.series}
    if kind is SimulationKind.HETERO:
        s = generate_hetero(N, seed=seed)
        cols = {"t": t}
        cols.update({f"x{j}": s.features[:, j] for j in range(s.features.shape[1])})
        cols.update({"y": s.responses, "sigma": s.sigma})
        return cols
    if kind in (SimulationKind.DRIFT, SimulationKind.CHANGEPOINT):
        s = (generate_drift if kind is SimulationKind.DRIFT else generate_changepoint)(N, seed=seed)
        cols = {"t": t}
        cols.update({f"x{j}": s.features[:, j] for j in range(s.features.shape[1])})
        cols["y"] = s.responses
        cols.update({f"beta{j}": s.betas[:, j] for j in range(s.betas.shape[1])})
        return cols
    return {"t": t, "y": generate_ar1(N, a=ar_coef, seed=seed)}


def prepare_dataset(config: ExperimentConfig, seed: int) -> TimeSeriesDataset:
    """Generate or load the data for one trial and apply the train/test cut."""
    lags = config.resolved_lags()
    if config.data_path is not None:
        data = csv_io.load_dataset(config.data_path, config.target_col, config.exog_cols, lags, config.train_frac)
    else:
        kind = config.sim
        rs = RngSeed(seed, DATA_STREAM)
        if kind is SimulationKind.NSTAT:
            N = config.sim_length or _DEFAULT_LENGTH[kind]
            data = generate_nstat(N, w=lags, seed=rs).to_dataset(include_time=config.include_time)
        elif kind is SimulationKind.HETERO:
            data = generate_hetero(config.sim_length or _DEFAULT_LENGTH[kind], seed=rs).to_dataset()
        elif kind is SimulationKind.DRIFT:
            data = generate_drift(config.sim_length or _DEFAULT_LENGTH[kind], seed=rs).to_dataset(1)
        elif kind is SimulationKind.CHANGEPOINT:
            data = generate_changepoint(config.sim_length or _DEFAULT_LENGTH[kind], seed=rs).to_dataset(1)
        else:
            series = generate_ar1(config.sim_length or _DEFAULT_LENGTH[kind], a=config.ar_coef, seed=rs)
            data = build_autoregressive_features(series, lags)
        data = data.with_train_fraction(config.train_frac)
    if config.train_size is not None:
        data = data.with_train_size(config.train_size)
    if data.train_size >= len(data):
        raise InsufficientDataError("the split leaves no test rows")
    return data


# ---------------------------------------------------------------------------
# the sequential loop


@dataclass
class LeakageAudit:
    """
    Per-step check that an interval only saw the past.

    ``check(t, residual_last, train_last)`` fails when the newest residual
    in the window or the newest row used to fit the point model has index
    ``>= t``. Pass a subclass to :func:`run_experiment` to record more.
    """

    checks: int = 0

    def check(self, t: int, residual_last: int, train_last: int) -> None:
        if residual_last >= t:
            raise LeakageError(f"interval at t={t} used the residual from t={residual_last}")
        if train_last >= t:
            raise LeakageError(f"interval at t={t} used a point model trained through t={train_last}")
        self.checks += 1


@dataclass
class TrialResult:
    seed: int
    intervals: list[PredictionInterval]
    truths: np.ndarray
    fallback_rows: int = 0

    @property
    def report(self) -> CoverageReport:
        return marginal_metrics(self.intervals, self.truths, trial=self.seed)


def run_trial(config: ExperimentConfig, seed: int, audit: Optional[LeakageAudit] = None) -> TrialResult:
    """Run one seed end to end; errors are re-raised with the seed attached."""
    try:
        data = prepare_dataset(config, seed)
        return _dispatch(config, seed, data, audit)
    except SpciError as exc:
        raise type(exc)(f"seed {seed}: {exc}") from exc


def _dispatch(config: ExperimentConfig, seed: int, data: TimeSeriesDataset, audit) -> TrialResult:
    m = config.method
    if m is Method.SPLIT:
        return _run_split(config, seed, data, audit)
    if m is Method.ADAPTIVE_CI:
        return _run_adaptive(config, seed, data, audit)
    if m is Method.MULTISTEP_SPCI:
        return _run_multistep(config, seed, data, audit)
    return _run_residual(config, seed, data, audit)


def _run_split(config, seed, data, audit) -> TrialResult:
    sc = SplitConformal(config.point_template(), config.alpha, RngSeed(seed, SPLIT_STREAM))
    sc.fit(data.X_train, data.y_train)
    T = data.train_size
    intervals = []
    for i in range(T, len(data)):
        if audit is not None:
            audit.check(i, T - 1, T - 1)
        intervals.append(sc.interval(data.features[i], time_index=i))
    return TrialResult(seed, intervals, data.y_test.copy())


def _run_adaptive(config, seed, data, audit) -> TrialResult:
    params = dataclasses.replace(config.forest, seed=RngSeed(seed, QUANTILE_STREAM))
    qrf = QuantileForest(params).fit(data.X_train, data.y_train)
    state = AdaptiveAlphaState(alpha_t=config.alpha, gamma=config.gamma, target_alpha=config.alpha)
    T = data.train_size
    intervals = []
    for i in range(T, len(data)):
        if audit is not None:
            audit.check(i, T - 1, T - 1)
        iv, state = adaptive_ci_step(state, qrf, data.features[i], data.responses[i], time_index=i)
        intervals.append(iv)
    return TrialResult(seed, intervals, data.y_test.copy())


def _run_residual(config, seed, data, audit) -> TrialResult:
    """EnbPI, SPCI (plain or normalized) and the weighted-quantile baseline."""
    X, y, T = data.features, data.responses, data.train_size
    template = config.point_template()
    ens_seed = RngSeed(seed, ENSEMBLE_STREAM)
    ens = fit_ensemble(data.X_train, data.y_train, template, config.B, config.aggregator, ens_seed)
    resid, fallback = loo_residuals(ens, data.X_train, data.y_train)
    normalize = config.normalize and config.method is Method.SPCI
    sigma = None
    if normalize:
        sigma = AbsResidualScale().fit(data.X_train, resid)
        resid = resid / sigma.predict(data.X_train)
    window = ResidualWindow(config.residual_capacity or T, resid, np.arange(T))
    spci_cfg = config.spci_config()
    state = SpciState(seed=RngSeed(seed, QUANTILE_STREAM))
    intervals = []
    for i in range(T, len(X)):
        x = X[i]
        if config.rolling_refit is None:
            point, train_last = _point(ens, x), T - 1
        else:
            start = max(0, i - config.rolling_refit)
            model = clone_with_seed(template, ens_seed.child(i)).fit(X[start:i], y[start:i])
            point, train_last = _point(model, x), i - 1
        if audit is not None:
            audit.check(i, window.last_index, train_last)
        if config.method is Method.ENBPI:
            iv = enbpi_step(point, window, x, config.alpha, time_index=i)
        elif config.method is Method.WEIGHTED_QUANTILE:
            iv = weighted_quantile_step(window, x, point, config.alpha, config.decay, time_index=i)
        elif normalize:
            iv = spci_step_normalized(point, window, x, spci_cfg, state, sigma, time_index=i)
        else:
            iv = spci_step(point, window, x, spci_cfg, state, time_index=i)
        intervals.append(iv)
        r = y[i] - point
        window.push(r / iv.extra["sigma"] if normalize else r, i)
    return TrialResult(seed, intervals, y[T:].copy(), int(fallback.sum()))


def _run_multistep(config, seed, data, audit) -> TrialResult:
    X, y, T = data.features, data.responses, data.train_size
    S = config.horizon
    plan = fit_multistep(
        data,
        S,
        config.point_template(),
        config.B,
        config.aggregator,
        RngSeed(seed, ENSEMBLE_STREAM),
        config.spci_config(),
        quantile_seed=RngSeed(seed, QUANTILE_STREAM),
    )
    intervals = []
    i = T
    while i < len(X):
        n = min(S, len(X) - i)
        if audit is not None:
            newest = max(w.last_index for w in plan.residual_windows)
            audit.check(i, newest, T - 1)
        block = multistep_predict_block(plan, X[i], time_index=i, n_steps=n)
        intervals.extend(block)
        push_block(plan, block, y[i : i + n])
        i += n
    return TrialResult(seed, intervals, y[T:].copy(), sum(plan.fallback_counts))


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult]
    report: CoverageReport
    rolling: list[RollingSeries]

    @property
    def method(self) -> str:
        return self.config.method.value


def _aggregate(trials: Sequence[TrialResult]) -> CoverageReport:
    reports = [t.report for t in trials]
    covs = np.array([r.marginal_coverage for r in reports])
    wids = np.array([r.mean_width for r in reports])
    sd = (lambda a: float(np.std(a, ddof=1))) if len(reports) > 1 else (lambda a: 0.0)
    steps = tuple(s for r in reports for s in r.per_step)
    return CoverageReport(
        marginal_coverage=float(np.mean(covs)),
        mean_width=float(np.mean(wids)),
        per_step=steps,
        trials=len(reports),
        coverage_sd=sd(covs),
        width_sd=sd(wids),
        trial_coverages=tuple(float(c) for c in covs),
        trial_widths=tuple(float(w) for w in wids),
    )


def _trial_worker(args) -> TrialResult:
    config, seed = args
    return run_trial(config, seed, LeakageAudit() if config.audit else None)


def run_experiment(config: ExperimentConfig, audit: Optional[LeakageAudit] = None) -> ExperimentResult:
    """
    Run every seed and aggregate.

    Trials run in worker processes when ``config.n_jobs > 1``; results are
    collected in seed order, so the report does not depend on which trial
    finishes first. A custom ``audit`` forces in-process execution.
    """
    if audit is None and config.n_jobs > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            trials = list(pool.map(_trial_worker, [(config, s) for s in config.seeds]))
    else:
        hook = audit if audit is not None else (LeakageAudit() if config.audit else None)
        trials = [run_trial(config, s, hook) for s in config.seeds]
    report = _aggregate(trials)
    rolling = []
    for t in trials:
        window = config.rolling_window or default_rolling_window(len(t.truths))
        if len(t.truths) >= window:
            rolling.append(rolling_metrics(t.intervals, t.truths, window))
    n_fallback = sum(t.fallback_rows for t in trials)
    if n_fallback:
        log.warning("%d training rows fell back to all-model aggregation", n_fallback)
    return ExperimentResult(config, trials, report, rolling)


def run_bench(config: ExperimentConfig, methods: Sequence[Method | str] = (Method.SPCI, Method.ENBPI)) -> list[ExperimentResult]:
    """Run the same data and seeds through several methods."""
    out = []
    for m in methods:
        m = Method(m)
        cfg = config.replace(method=m, horizon=config.horizon if m is Method.MULTISTEP_SPCI else 1)
        out.append(run_experiment(cfg))
    return out


# ---------------------------------------------------------------------------
# report files


def _opt(v) -> str:
    return "" if v is None else csv_io.format_float(v)


def write_artifacts(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """
    Write ``intervals.csv``, ``summary.json``, ``rolling.csv``, ``plot.csv``
    and ``config.json`` into ``out_dir``; returns the paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps = result.report.per_step
    paths = {}
    paths["intervals"] = csv_io.write_columns(
        out / "intervals.csv",
        {
            "trial": [s.trial for s in steps],
            "t": [s.t for s in steps],
            "y_true": [s.y_true for s in steps],
            "point": [s.point for s in steps],
            "lower": [s.lower for s in steps],
            "upper": [s.upper for s in steps],
            "covered": [s.covered for s in steps],
            "width": [s.width for s in steps],
            "beta": [_opt(s.beta) for s in steps],
            "method": [s.method for s in steps],
        },
    )
    roll_rows = {"trial": [], "t": [], "window": [], "coverage": [], "width": []}
    plot_rows = {"t": [], "metric": [], "value": [], "method": [], "trial": []}
    for trial, rs in zip([t.seed for t in result.trials], result.rolling):
        for t, c, w in zip(rs.t, rs.coverage_t, rs.width_t):
            roll_rows["trial"].append(trial)
            roll_rows["t"].append(int(t))
            roll_rows["window"].append(rs.window)
            roll_rows["coverage"].append(float(c))
            roll_rows["width"].append(float(w))
            for metric, v in (("rolling_coverage", c), ("rolling_width", w)):
                plot_rows["t"].append(int(t))
                plot_rows["metric"].append(metric)
                plot_rows["value"].append(float(v))
                plot_rows["method"].append(result.method)
                plot_rows["trial"].append(trial)
    paths["rolling"] = csv_io.write_columns(out / "rolling.csv", roll_rows)
    paths["plot"] = csv_io.write_columns(out / "plot.csv", plot_rows)
    paths["summary"] = out / "summary.json"
    paths["summary"].write_text(json.dumps(summary_dict(result), indent=2) + "\n")
    paths["config"] = out / "config.json"
    paths["config"].write_text(json.dumps(result.config.to_dict(), indent=2) + "\n")
    return paths


def summary_dict(result: ExperimentResult) -> dict:
    r = result.report
    raw = {
        "coverage": r.marginal_coverage,
        "coverage_sd": r.coverage_sd,
        "width": r.mean_width,
        "width_sd": r.width_sd,
    }
    return {
        "method": result.method,
        "alpha": result.config.alpha,
        "trials": r.trials,
        "seeds": list(result.config.seeds),
        "display": {k: format_sig(v) for k, v in raw.items()},
        "raw": {**raw, "trial_coverages": list(r.trial_coverages), "trial_widths": list(r.trial_widths)},
        "fallback_rows": sum(t.fallback_rows for t in result.trials),
    }


def bench_table(results: Sequence[ExperimentResult]) -> str:
    lines = [f"{'method':<20}{'coverage (sd)':>24}{'width (sd)':>24}"]
    for res in results:
        r = res.report
        cov = f"{format_sig(r.marginal_coverage)} ({format_sig(r.coverage_sd, 3)})"
        wid = f"{format_sig(r.mean_width)} ({format_sig(r.width_sd, 3)})"
        lines.append(f"{res.method:<20}{cov:>24}{wid:>24}")
    return "\n".join(lines)


def write_bench(results: Sequence[ExperimentResult], out_dir) -> Path:
    """Per-method artifacts in subdirectories plus a ``bench.csv`` table."""
    out = Path(out_dir)
    for res in results:
        write_artifacts(res, out / res.method)
    r = [res.report for res in results]
    return csv_io.write_columns(
        out / "bench.csv",
        {
            "method": [res.method for res in results],
            "coverage": [x.marginal_coverage for x in r],
            "coverage_sd": [x.coverage_sd for x in r],
            "width": [x.mean_width for x in r],
            "width_sd": [x.width_sd for x in r],
            "trials": [x.trials for x in r],
        },
    )
