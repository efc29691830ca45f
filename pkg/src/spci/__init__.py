"""
Sequential conformal prediction intervals for time series.

The main entry points:

* :mod:`spci.core`: datasets, residual windows, seeds, interval records.
* :mod:`spci.quantile_forest`: quantile regression forest.
* :mod:`spci.predictors`: point models and bootstrap ensembles.
* :mod:`spci.conformal`: split conformal, EnbPI, SPCI and baselines.
* :mod:`spci.multistep`: block-wise S-step intervals.
* :mod:`spci.simulation`: synthetic series.
* :mod:`spci.evaluation`: experiment runner and reports.
"""

from __future__ import annotations

from .conformal import (
    AbsResidualScale,
    AdaptiveAlphaState,
    LaggedForestQuantiles,
    SingleLeafQuantiles,
    SpciConfig,
    SpciState,
    SplitConformal,
    adaptive_ci_step,
    empirical_quantile,
    enbpi_step,
    spci_beta_search,
    spci_step,
    spci_step_normalized,
    split_conformal,
    weighted_quantile_step,
)
from .core import (
    LaggedResidualSet,
    Method,
    PredictionInterval,
    ResidualWindow,
    RngSeed,
    TimeSeriesDataset,
    build_autoregressive_features,
    build_lagged_residual_set,
    push_residual,
)
from .errors import (
    DataLoadError,
    DomainError,
    EmptyInputError,
    InsufficientDataError,
    LeakageError,
    NonpositiveScaleError,
    ShapeError,
    SpciError,
)
from .evaluation import (
    CoverageReport,
    ExperimentConfig,
    RollingSeries,
    marginal_metrics,
    rolling_metrics,
    run_bench,
    run_experiment,
    scenario_preset,
)
from .multistep import MultiStepPlan, fit_multistep, multistep_predict_block, push_block
from .predictors import (
    Aggregator,
    BootstrapEnsemble,
    ExponentiallyWeightedLeastSquares,
    LeastSquares,
    RegressionForest,
    ensemble_predict,
    fit_ensemble,
    loo_residuals,
)
from .quantile_forest import (
    ForestParams,
    QuantileForest,
    conditional_cdf,
    conditional_quantile,
    fit_forest,
    forest_weights,
    pinball_loss,
)

__version__ = "0.1.0"
