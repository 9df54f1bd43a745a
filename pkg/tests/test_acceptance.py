"""Acceptance criteria 1-10, each reporting a single PASS/FAIL line."""
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
from scipy import optimize

from offsetrad.chaining import greedy_cover, star_cover_construct
from offsetrad.core import DesignSample, FiniteDictionary, LinearClass
from offsetrad.geometry import DEFAULT_C, audit_geometric_inequality, audit_random_instances
from offsetrad.harness import ExperimentConfig, run_config, run_experiment
from offsetrad.harness.experiments import DOMINANCE_COLUMNS
from offsetrad.offset import (
    finite_class_bound,
    offset_mc,
    offset_sup_linear,
    offset_tail_check,
    rademacher,
)

TESTS = Path(__file__).parent


def test_criterion_01_geometric_inequality(acceptance_report):
    t0 = time.perf_counter()
    N, n, mins, viol = audit_random_instances(100_000, seed=2024, c=DEFAULT_C, tol=1e-9,
                                              max_N=6, max_n=10)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(500):
        k, p = int(rng.integers(2, 11)), int(rng.integers(1, 4))
        X = rng.standard_normal((k, p))
        rep = audit_geometric_inequality(LinearClass(X), DesignSample(X, rng.standard_normal(k)),
                                         c=1.0)
        worst = max(worst, float(np.max(np.abs(rep.lhs - rep.rhs_base))))
    ok = int(viol.sum()) == 0 and worst <= 1e-8
    acceptance_report(1, "geometric inequality", ok,
                      f"{int(viol.sum())} violations in {N.size} instances, "
                      f"min ratio {np.nanmin(mins):.4f}, Pythagorean gap {worst:.1e}",
                      time.perf_counter() - t0)
    assert ok


def test_criterion_02_finite_offset_bound(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    mean_fail = tail_fail = 0
    for i in range(100):
        N, n = int(rng.integers(1, 65)), int(rng.integers(10, 501))
        C = float(rng.uniform(0.25, 2.0))
        V = FiniteDictionary(rng.uniform(-1.0, 1.0, (N, n)))
        est = offset_mc(V, C, 10_000, seed=1000 + i)
        if est.mean > finite_class_bound(N, n, C) + 3 * est.stderr:
            mean_fail += 1
        for delta in (0.05, 0.2):
            if not offset_tail_check(V, C, 10_000, delta, seed=2000 + i).passed:
                tail_fail += 1
    ok = mean_fail == 0 and tail_fail == 0
    acceptance_report(2, "finite offset bound", ok,
                      f"mean-bound failures {mean_fail}/100, tail failures {tail_fail}/200",
                      time.perf_counter() - t0)
    assert ok


def test_criterion_03_linear_trace_identity(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        n, p = int(rng.integers(10, 60)), int(rng.integers(1, 6))
        X = rng.standard_normal((n, p))
        w = rademacher(rng, n) * rng.standard_normal(n)
        C = float(rng.uniform(0.1, 2.0))

        def neg(beta):
            h = X @ beta
            return -(2.0 * h @ w - C * h @ h) / n

        def grad(beta):
            return -(2.0 * X.T @ w - 2.0 * C * X.T @ (X @ beta)) / n

        res = optimize.minimize(neg, np.zeros(p), jac=grad, method="BFGS",
                                options={"gtol": 1e-13, "maxiter": 10_000})
        exact = offset_sup_linear(LinearClass(X), w, C, None, 2.0)
        worst = max(worst, abs(exact + res.fun) / max(abs(exact), 1e-300))
    n, C = 40, 0.5
    X = rng.standard_normal((n, 4))
    xi = rng.standard_normal(n)
    G = X.T @ X
    H = (X * xi[:, None] ** 2).T @ X
    target = float(np.trace(np.linalg.solve(G, H)) / (C * n))
    est = offset_mc(LinearClass(X), C, 100_000, seed=33, xi=xi, coef=2.0)
    z = (est.mean - target) / est.stderr
    ok = worst <= 1e-6 and abs(z) <= 3.0
    acceptance_report(3, "linear trace identity", ok,
                      f"max relative gap to BFGS {worst:.1e}, trace z-score {z:+.2f}",
                      time.perf_counter() - t0)
    assert ok


def test_criterion_04_parametric_rate(acceptance_report):
    t0 = time.perf_counter()
    rate = run_experiment(ExperimentConfig(
        "parametric_rate", "well_linear", tuple(2**k for k in range(7, 14)), trials=2000,
        seed=4, class_spec={"p": 5, "sigma": 1.0}))
    at500 = run_experiment(ExperimentConfig(
        "parametric_rate", "well_linear", (500,), trials=2000, seed=5,
        class_spec={"p": 5, "sigma": 1.0}))
    ratio = float(at500.column("ratio")[0])
    fit = rate.fit
    ok = 0.5 <= ratio <= 2.0 and fit.r2 >= 0.95 and abs(fit.slope + 1.0) <= 0.1
    acceptance_report(4, "parametric rate", ok,
                      f"ratio at n=500 {ratio:.3f} (window [0.5, 2]), slope {fit.slope:.4f}, "
                      f"r2 {fit.r2:.4f}", time.perf_counter() - t0)
    assert ok


def test_criterion_05_finite_aggregation(acceptance_report):
    t0 = time.perf_counter()
    res = run_experiment(ExperimentConfig(
        "finite_aggregation", "finite", tuple(2**k for k in range(7, 14)), trials=1000, seed=6,
        class_spec={"N": 32, "m": 32}, params={"metric": "q90_star"}))
    fit = res.fit
    ok = fit.r2 >= 0.95 and abs(fit.slope + 1.0) <= 0.15
    acceptance_report(5, "finite aggregation rate", ok,
                      f"q90 slope {fit.slope:.4f}, r2 {fit.r2:.4f}", time.perf_counter() - t0)
    assert ok


def test_criterion_06_nonparametric_rate(acceptance_report):
    t0 = time.perf_counter()
    res = run_experiment(ExperimentConfig(
        "nonparametric_rate", "lipschitz", tuple(2**k for k in range(7, 15)), trials=1, seed=7,
        params={"entropy": "lipschitz"}))
    fit = res.fit
    ok = fit.r2 >= 0.95 and abs(fit.slope + 2.0 / 3.0) <= 0.1
    acceptance_report(6, "nonparametric chaining rate", ok,
                      f"slope {fit.slope:.4f} (target -0.6667), r2 {fit.r2:.5f}",
                      time.perf_counter() - t0)
    assert ok


def test_criterion_07_star_hull_cover(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    failures = 0
    checked = 0
    for _ in range(20):
        N, n = int(rng.integers(1, 9)), int(rng.integers(2, 11))
        P = rng.standard_normal((N, n))
        P /= np.maximum(1.0, np.sqrt(np.mean(P**2, axis=1)))[:, None]
        for eps in (0.1, 0.2, 0.4):
            cov = star_cover_construct(P, eps, check_points=10_000)
            base = greedy_cover(P, eps)
            checked += 1
            if not (cov.valid and cov.scale == 2 * eps
                    and cov.size <= math.ceil(2 / eps) * base.size):
                failures += 1
    ok = failures == 0
    acceptance_report(7, "star-hull cover", ok, f"{failures} failures in {checked} covers",
                      time.perf_counter() - t0)
    assert ok


def test_criterion_08_critical_radius(acceptance_report):
    t0 = time.perf_counter()
    fin = run_experiment(ExperimentConfig(
        "critical_radius", "finite", (256,), trials=1, seed=9, class_spec={"N": 6, "m": 16},
        params={"delta": 0.05, "reps": 2000, "check_reps": 10_000}))
    row = dict(zip(fin.columns, fin.rows[0]))
    lin = run_experiment(ExperimentConfig(
        "critical_radius", "well_linear", tuple(2**k for k in range(7, 13)), trials=4, seed=10,
        class_spec={"p": 5, "sigma": 1.0},
        params={"delta": 0.05, "reps": 2000, "check_reps": 0}))
    fit = lin.fit
    ok = bool(row["restriction_ok"]) and fit.r2 >= 0.95 and abs(fit.slope + 1.0) <= 0.15
    acceptance_report(8, "critical radius", ok,
                      f"restriction frequency {row['restriction_frequency']:.4f} >= "
                      f"{row['restriction_threshold']:.4f}, r2-vs-n slope {fit.slope:.4f}, "
                      f"r2 {fit.r2:.4f}", time.perf_counter() - t0)
    assert ok


def test_criterion_09_minimax_lower_bound(acceptance_report):
    t0 = time.perf_counter()
    res = run_experiment(ExperimentConfig(
        "minimax_lower", "finite", (2, 3, 4), trials=10, seed=11, class_spec={"N": 3},
        params={"c": 1}))
    holds = int(np.sum(res.column("holds")))
    margin = float(np.min(res.column("bayes_regret") - res.column("lower_bound")))
    ok = holds == 10
    acceptance_report(9, "minimax lower bound", ok,
                      f"{holds}/10 instances hold, min margin {margin:.4f}, slack 0",
                      time.perf_counter() - t0)
    assert ok


def test_criterion_10_property_suites_and_dominance_table(acceptance_report, tmp_path):
    t0 = time.perf_counter()
    suites = ["test_core.py", "test_estimators.py", "test_geometry.py", "test_offset.py",
              "test_chaining.py"]
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / s) for s in suites]],
                          capture_output=True, text=True, cwd=TESTS.parent)
    cfg = {"seed": 12, "experiments": [
        {"name": "dominance", "kind": "dominance", "scenario": "finite", "n_grid": [64],
         "trials": 300, "class": {"N": 6, "m": 16}},
        {"name": "dominance_t5", "kind": "dominance", "scenario": "finite", "n_grid": [64],
         "trials": 300, "class": {"N": 6, "m": 16},
         "noise": {"kind": "student_t", "scale": 1.0, "df": 5}},
    ]}
    out = run_config(cfg, tmp_path)
    headers = [(out / f"{e['name']}.csv").read_text().splitlines()[0] for e in cfg["experiments"]]
    schema_ok = all(h == ",".join(DOMINANCE_COLUMNS) for h in headers)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr
    ok = proc.returncode == 0 and schema_ok
    acceptance_report(10, "property suites and dominance table", ok,
                      f"property suites: {summary}; dominance schema ok: {schema_ok}",
                      time.perf_counter() - t0)
    assert ok
