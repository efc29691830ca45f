"""
End-to-end acceptance checks at their stated tolerances.

Each test records one ``PASS``/``FAIL`` line, printed in the terminal
summary. The coverage experiments are slow (the drift and changepoint
runs dominate, several minutes each on one core).
"""

from __future__ import annotations

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from spci.conformal import SingleLeafQuantiles, SpciConfig, SpciState, SplitConformal, enbpi_step, spci_beta_search, spci_step
from spci.core import Method, ResidualWindow, RngSeed
from spci.evaluation import ExperimentConfig, run_bench, run_experiment, scenario_preset, simulation_columns, write_artifacts
from spci.io import write_columns
from spci.predictors import LeastSquares
from spci.quantile_forest import ForestParams, QuantileForest, conditional_cdf, conditional_quantile, forest_weights


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_1_nstat_width_gap():
    spci, enbpi = run_bench(scenario_preset("nstat"), ["spci", "enbpi"])
    cov, ws, we = spci.report.marginal_coverage, spci.report.mean_width, enbpi.report.mean_width
    verdict(
        1,
        0.88 <= cov <= 0.98 and ws <= 0.7 * we,
        f"nstat SPCI coverage {cov:.3f} in [0.88, 0.98]; width {ws:.2f} vs EnbPI {we:.2f} (ratio {ws / we:.2f} <= 0.7)",
    )


def test_2_hetero_normalized():
    spci, enbpi = run_bench(scenario_preset("hetero"), ["spci", "enbpi"])
    cov, ws, we = spci.report.marginal_coverage, spci.report.mean_width, enbpi.report.mean_width
    verdict(
        2,
        0.84 <= cov <= 0.96 and abs(ws / we - 1) <= 0.3,
        f"hetero normalized SPCI coverage {cov:.3f} in [0.84, 0.96]; width ratio to EnbPI {ws / we:.2f} within 1 +/- 0.3",
    )


def test_3_drift_and_changepoint():
    cov = {}
    for scen, adjusted in (("drift", 0.09), ("changepoint", 0.075)):
        for alpha in (0.1, adjusted):
            cov[scen, alpha] = run_experiment(scenario_preset(scen, alpha=alpha)).report.marginal_coverage
    ok = (
        cov["drift", 0.1] >= 0.85
        and cov["changepoint", 0.1] >= 0.85
        and cov["drift", 0.09] >= 0.88
        and cov["changepoint", 0.075] >= 0.88
    )
    detail = ", ".join(f"{s} alpha={a}: {c:.3f}" for (s, a), c in cov.items())
    verdict(3, ok, f"{detail} (need >= 0.85 at 0.1, >= 0.88 adjusted)")


def test_4_split_conformal_iid():
    covs = []
    beta = np.array([1.0, -0.5, 0.25, 2.0, 0.0])
    for trial in range(200):
        rng = np.random.default_rng([4, trial])
        X = rng.normal(size=(2500, 5))
        y = X @ beta + rng.normal(size=2500)
        sc = SplitConformal(LeastSquares(), 0.1, RngSeed(trial)).fit(X[:2000], y[:2000])
        lo, hi = sc.lower_offset_, sc.upper_offset_
        pred = sc.model_.predict(X[2000:])
        covs.append(np.mean((pred + lo <= y[2000:]) & (y[2000:] <= pred + hi)))
    m = float(np.mean(covs))
    verdict(4, m >= 0.885, f"split conformal on i.i.d. data, 200 trials of T=2000: mean coverage {m:.4f} >= 0.885")


def test_5_single_leaf_reduction():
    rng = np.random.default_rng(5)
    mismatches = 0
    for k in range(50):
        n = int(rng.integers(1, 400))
        win = ResidualWindow(n, rng.standard_t(3, size=n) * rng.uniform(0.1, 10))
        alpha = float(rng.choice([0.05, 0.1, 0.2]))
        point = float(rng.normal())
        a = spci_step(point, win, None, SpciConfig(alpha=alpha, fixed_beta=alpha / 2), SpciState(model_factory=SingleLeafQuantiles))
        b = enbpi_step(point, win, None, alpha)
        mismatches += (a.lower, a.upper) != (b.lower, b.upper)
    verdict(5, mismatches == 0, f"single-leaf SPCI vs EnbPI on 50 windows: {mismatches} endpoint mismatches")


def test_6_quantile_forest_oracles():
    failures = []
    for k in range(120):
        rng = np.random.default_rng([6, k])
        n, d = int(rng.integers(2, 51)), int(rng.integers(1, 5))
        X = rng.normal(size=(n, d))
        y = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
        params = ForestParams(n_trees=int(rng.integers(1, 12)), min_leaf_size=int(rng.integers(1, 6)), seed=RngSeed(k))
        f = QuantileForest(params).fit(X, y)
        x = rng.normal(size=d)
        w = forest_weights(f, x)
        if abs(w.sum() - 1) > 1e-9 or not np.array_equal(w, oracles.weights_float(f, x)):
            failures.append((k, "weights"))
        prev = -1.0
        for z in np.sort(np.concatenate([y, rng.normal(size=5)])):
            c = conditional_cdf(f, x, z)
            if c != oracles.cdf(w, y, z) or c < prev:
                failures.append((k, "cdf"))
            prev = c
        wx = oracles.weights_exact(f, x)
        ps = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(size=20)]))
        qs = [conditional_quantile(f, x, p) for p in ps]
        if any(q != oracles.quantile_exact(wx, y, p) for p, q in zip(ps, qs)) or np.any(np.diff(qs) < 0):
            failures.append((k, "quantile"))
    verdict(6, not failures, f"QRF weights/CDF/quantile oracles on 120 instances: {len(failures)} failures {failures[:5]}")


def test_7_beta_search_exact():
    bad = 0
    for k in range(100):
        rng = np.random.default_rng([7, k])
        n, d = int(rng.integers(20, 120)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        y = rng.standard_t(3, size=n) + X[:, 0]
        f = QuantileForest(ForestParams(n_trees=10, min_leaf_size=3, seed=RngSeed(k))).fit(X, y)
        x = rng.normal(size=d)
        alpha = float(rng.choice([0.05, 0.1, 0.2]))
        beta, lo, hi = spci_beta_search(f, x, alpha, 21)
        best = None
        for j in range(21):
            b = alpha * j / 20
            ql, qh = conditional_quantile(f, x, b), conditional_quantile(f, x, 1 - alpha + b)
            if best is None or qh - ql < best[0]:
                best = (qh - ql, b, ql, qh)
        sym = conditional_quantile(f, x, 1 - alpha / 2) - conditional_quantile(f, x, alpha / 2)
        bad += not (abs(beta - best[1]) < 1e-12 and (lo, hi) == best[2:] and hi - lo <= sym)
    verdict(7, bad == 0, f"beta search vs exhaustive grid on 100 forests: {bad} disagreements")


def test_8_multistep_width_grows_with_horizon():
    cfg = scenario_preset("ar1", method="multistep-spci", horizon=4, seeds=tuple(range(20)))
    res = run_experiment(cfg)
    by_h = {s: [] for s in range(1, 5)}
    for trial in res.trials:
        for iv in trial.intervals:
            by_h[iv.extra["horizon"]].append(iv.width)
    widths = [float(np.mean(by_h[s])) for s in range(1, 5)]
    # a drop counts as a violation only beyond 2% of the previous width
    drops = [widths[s + 1] < 0.98 * widths[s] for s in range(3)]
    verdict(8, not any(drops), f"AR(1) S=4, 20 seeds: mean width by horizon {[round(w, 3) for w in widths]}")


def test_9_determinism(tmp_path):
    base = scenario_preset("ar1", sim_length=500, seeds=(0, 1), forest=ForestParams(n_jobs=1))
    variants = {
        "rerun": base,
        "tree-threads": base.replace(forest=ForestParams(n_jobs=3)),
        "trial-processes": base.replace(n_jobs=2),
    }
    ref = write_artifacts(run_experiment(base), tmp_path / "ref")
    same = {}
    for name, cfg in variants.items():
        out = write_artifacts(run_experiment(cfg), tmp_path / name)
        same[name] = all(ref[k].read_bytes() == out[k].read_bytes() for k in ("intervals", "rolling", "plot"))
    verdict(9, all(same.values()), f"byte-identical per-step CSVs: {same}")


def test_10_csv_smoke(tmp_path):
    path = write_columns(tmp_path / "ar1.csv", simulation_columns("ar1", 2000, RngSeed(0, 0)))
    results = {}
    for m in Method:
        kw = {"horizon": 2} if m is Method.MULTISTEP_SPCI else {}
        cfg = ExperimentConfig(method=m, data_path=str(path), lags=1, point_model="ls", seeds=(0,), **kw)
        res = run_experiment(cfg)  # the leakage audit runs on every step
        ivs = res.trials[0].intervals
        assert all(iv.lower <= iv.upper for iv in ivs)
        results[m.value] = res.report.marginal_coverage
    ok = all(0.8 <= c <= 1.0 for c in results.values())
    verdict(10, ok, "CSV path coverage " + ", ".join(f"{k} {v:.3f}" for k, v in results.items()))
