"""
S-step-ahead intervals by divide and conquer.

Horizon ``s`` (1-based) gets its own bootstrap ensemble trained on the
shifted pairs ``(X_t, Y_{t+s-1})``, its own residual window, and its own
residual quantile model. Intervals are issued in blocks of S: all S use
the same most recent feature row, and none of the S residuals observed
inside a block is available until the block is over.

With ``S = 1`` every piece reduces to the single-step pipeline with the
same seeds, so the outputs match :func:`spci.conformal.spci_step` bit for
bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .conformal import SpciConfig, SpciState, _point, _spci_quantiles
from .core import Method, PredictionInterval, ResidualWindow, RngSeed, TimeSeriesDataset
from .errors import DomainError, InsufficientDataError, ShapeError
from .predictors import Aggregator, BootstrapEnsemble, _as_2d, fit_ensemble, loo_residuals

__all__ = [
    "MultiStepPlan",
    "horizon_residual_indices",
    "horizon_seed",
    "fit_multistep",
    "multistep_predict_block",
    "push_block",
]

# Horizons s >= 2 draw from seed.child(_HORIZON_KEY, s). The key is far above
# any bootstrap model index, so these never collide with seed.child(b).
_HORIZON_KEY = 2**32


def horizon_seed(seed: RngSeed, s: int) -> RngSeed:
    """Seed for horizon ``s``; horizon 1 keeps ``seed`` itself."""
    return seed if s == 1 else seed.child(_HORIZON_KEY, s)


def horizon_residual_indices(T: int, S: int, s: int) -> np.ndarray:
    """
    0-based pair indices whose LOO residuals enter horizon ``s``'s window.

    Residuals are taken at ``t = 1, 1 + S, 1 + 2S, ...`` (1-based) as long
    as the shifted response ``Y_{t+s-1}`` lies in the training block.
    """
    if not 1 <= s <= S:
        raise DomainError(f"horizon {s} outside 1..{S}")
    return np.arange(0, T - s + 1, S, dtype=np.int64)


@dataclass
class MultiStepPlan:
    """Per-horizon ensembles, residual windows, and quantile-model state."""

    horizon: int
    ensembles: list[BootstrapEnsemble]
    residual_windows: list[ResidualWindow]
    states: list[SpciState]
    config: SpciConfig
    fallback_counts: list[int] = field(default_factory=list)
    blocks_issued: int = 0

    @property
    def qrf_per_horizon(self) -> list:
        return [st.model for st in self.states]


def fit_multistep(
    data: TimeSeriesDataset,
    S: int,
    template,
    B: int = 25,
    aggregator: Aggregator | str = Aggregator.MEAN,
    seed: RngSeed = RngSeed(),
    config: SpciConfig = SpciConfig(),
    quantile_seed: Optional[RngSeed] = None,
) -> MultiStepPlan:
    """
    Fit the S horizon ensembles and fill their residual windows.

    Parameters
    ----------
    data : TimeSeriesDataset
        Only the training block is used.
    S : int
        Block length (number of horizons).
    template : predictor
        Cloned ``B`` times per horizon.
    seed : RngSeed
        Ensemble seed; horizon ``s`` uses :func:`horizon_seed`.
    quantile_seed : RngSeed, optional
        Seed for the residual quantile refits (defaults to ``seed.child(B)``
        namespaced per horizon like the ensembles).
    """
    S = int(S)
    if S < 1:
        raise DomainError(f"horizon S must be >= 1, got {S}")
    X, y = data.X_train, data.y_train
    T = y.shape[0]
    if T <= S:
        raise InsufficientDataError(f"need more than S={S} training rows, have {T}")
    qseed = seed.child(B) if quantile_seed is None else quantile_seed
    ensembles, windows, states, fallbacks = [], [], [], []
    for s in range(1, S + 1):
        n_pairs = T - s + 1
        Xs, ys = X[:n_pairs], y[s - 1 : s - 1 + n_pairs]
        ens = fit_ensemble(Xs, ys, template, B, aggregator, horizon_seed(seed, s))
        resid, fallback = loo_residuals(ens, Xs, ys)
        keep = horizon_residual_indices(T, S, s)
        capacity = config.residual_capacity or keep.shape[0]
        # residual for pair j belongs to response time j + s - 1
        windows.append(ResidualWindow(capacity, resid[keep], keep + s - 1))
        ensembles.append(ens)
        states.append(SpciState(seed=horizon_seed(qseed, s)))
        fallbacks.append(int(fallback.sum()))
    return MultiStepPlan(
        horizon=S,
        ensembles=ensembles,
        residual_windows=windows,
        states=states,
        config=config,
        fallback_counts=fallbacks,
    )


def multistep_predict_block(
    plan: MultiStepPlan,
    x_query,
    alpha: Optional[float] = None,
    time_index: int = 0,
    n_steps: Optional[int] = None,
) -> list[PredictionInterval]:
    """
    Intervals for the next ``n_steps`` (default S) responses.

    ``x_query`` is the newest feature row; interval ``s`` targets time
    ``time_index + s - 1``. Each horizon's quantile model is refit at the
    block start (subject to ``refit_stride``, counted in blocks).
    """
    config = plan.config
    if alpha is not None and alpha != config.alpha:
        config = SpciConfig(**{**config.__dict__, "alpha": alpha})
    n = plan.horizon if n_steps is None else int(n_steps)
    if not 1 <= n <= plan.horizon:
        raise DomainError(f"n_steps must lie in 1..{plan.horizon}, got {n}")
    x = _as_2d(x_query)
    out = []
    for s in range(1, n + 1):
        point = _point(plan.ensembles[s - 1], x)
        try:
            beta, lo, hi = _spci_quantiles(plan.residual_windows[s - 1], config, plan.states[s - 1])
        except InsufficientDataError as exc:
            raise InsufficientDataError(f"horizon {s}: {exc}") from exc
        plan.states[s - 1].step += 1
        out.append(
            PredictionInterval(
                time_index=time_index + s - 1,
                point=point,
                lower=point + lo,
                upper=point + hi,
                method=Method.MULTISTEP_SPCI,
                beta=beta,
                alpha=config.alpha,
                extra={"horizon": s},
            )
        )
    plan.blocks_issued += 1
    return out


def push_block(plan: MultiStepPlan, intervals: Sequence[PredictionInterval], truths: Sequence[float]) -> None:
    """After a block ends, push each horizon's realized residual into its window."""
    if len(intervals) != len(truths):
        raise ShapeError(f"{len(intervals)} intervals but {len(truths)} observations")
    for iv, y in zip(intervals, truths):
        s = iv.extra["horizon"]
        plan.residual_windows[s - 1].push(float(y) - iv.point, iv.time_index)
