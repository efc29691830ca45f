"""
Blocks of S-step-ahead intervals on an AR(1) series.

Each horizon has its own ensemble, residual window, and residual quantile
model. Intervals for the whole block are issued from the last observed
feature row, so the width grows with the horizon, as the forecast error
variance of an AR(1) does: (1 - a^(2s)) / (1 - a^2). Each horizon sees
only 50 test steps per seed here, so its coverage is a noisy estimate.

    python demos/04_multistep.py
"""

from __future__ import annotations

import numpy as np

from spci import run_experiment, scenario_preset

S, a = 4, 0.8
result = run_experiment(scenario_preset("ar1", method="multistep-spci", horizon=S, seeds=(0, 1, 2)))
by_h = {s: [] for s in range(1, S + 1)}
for trial in result.trials:
    for iv, y in zip(trial.intervals, trial.truths):
        by_h[iv.extra["horizon"]].append((iv.width, iv.covers(y)))

for s, rows in by_h.items():
    w, c = np.mean(rows, axis=0)
    sd = np.sqrt((1 - a ** (2 * s)) / (1 - a * a))
    print(f"horizon {s}: width {w:.2f} (Gaussian 90% width {2 * 1.645 * sd:.2f}), coverage {c:.3f}")
