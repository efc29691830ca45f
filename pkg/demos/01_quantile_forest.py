"""
Conditional quantiles from a quantile regression forest.

A forest fit on skewed, heteroskedastic data returns interval endpoints
that move with the query point, while an unconditional quantile cannot.

    python demos/01_quantile_forest.py
"""

from __future__ import annotations

import numpy as np

from spci import ForestParams, QuantileForest, RngSeed, empirical_quantile

rng = np.random.default_rng(0)
X = rng.uniform(0, 3, size=(2000, 1))
y = X[:, 0] * rng.exponential(size=2000)

forest = QuantileForest(ForestParams(n_trees=50, min_leaf_size=60, seed=RngSeed(0))).fit(X, y)

print("unconditional 5% / 95%:", round(empirical_quantile(y, 0.05), 3), round(empirical_quantile(y, 0.95), 3))
for x in (0.25, 1.5, 2.75):
    lo, hi = forest.quantiles([x], [0.05, 0.95])
    print(f"x = {x:4}: 5% {lo:7.3f}   95% {hi:7.3f}   (true 95% {x * -np.log(0.05):.3f})")
