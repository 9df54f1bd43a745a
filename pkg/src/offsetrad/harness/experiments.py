"""End-to-end experiments: rate fits, dominance diagnostics, critical radii."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..chaining import GreedyEntropy, LipschitzEntropy, PowerEntropy, chaining_bound
from ..core import FiniteDictionary, difference_star_hull, shifted_star_class
from ..estimators import erm_finite, erm_linear, star_estimator
from ..geometry import DEFAULT_C, audit_random_instances
from ..offset import (
    LocalizedLinear,
    LocalizedSegments,
    critical_radius,
    fourth_moment_ratio,
    isometry_ratio,
    offset_sup_star,
    rademacher,
    restriction_identity,
)
from .config import ExperimentConfig
from .minimax import minimax_lower_bound
from .parallel import map_trials, trial_seeds
from .rates import RateFit, fit_rate
from .scenarios import FiniteTruth, excess_loss, generate

EXCESS_TOL = 1e-10


class NegativeExcessLoss(AssertionError):
    """An excess loss that must be nonnegative came out negative."""


@dataclass(frozen=True)
class ExperimentResult:
    """Table (fixed column order) plus a JSON-ready summary."""

    name: str
    kind: str
    columns: tuple
    rows: list
    summary: dict = field(default_factory=dict)
    fit: RateFit | None = None

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])


def _check_nonnegative(value: float, what: str) -> float:
    if value < -EXCESS_TOL:
        raise NegativeExcessLoss(f"{what} excess loss {value:.3e} < 0")
    return value


def _rate_summary(fit: RateFit | None, target: float | None, tol: float | None) -> dict:
    if fit is None:
        return {}
    out = {"fit": fit.to_dict()}
    if target is not None:
        out["expected_slope"] = target
        out["slope_tol"] = tol
        out["slope_ok"] = fit.check(target, tol)
    return out


# -- parametric rate (OLS) -------------------------------------------------

def experiment_parametric_rate(cfg: ExperimentConfig) -> ExperimentResult:
    """Mean OLS excess loss per n, and the conditional trace identity.

    Table columns: n, trials, mean_excess, stderr_excess, sigma2p_over_n,
    ratio, trace_mean, trace_stderr, trace_target, trace_z.
    """
    if cfg.scenario not in ("well_linear", "misspec_linear"):
        raise ValueError("parametric_rate needs a linear scenario")
    params = cfg.scenario_params()
    trace_reps = int(cfg.params.get("trace_reps", 2000))
    rows = []
    sigma2 = None
    p = None
    for i, n in enumerate(cfg.n_grid):

        def one(ss, n=n):
            prob = generate(cfg.scenario, n, ss, **params)
            beta = erm_linear(prob.cls, prob.sample).beta
            return _check_nonnegative(excess_loss(beta, prob.truth), "OLS")

        ex = np.array(map_trials(one, trial_seeds(cfg.seed, i, cfg.trials)))
        # trace identity conditional on one design: E tr(G^-1 H) = sigma^2 p
        ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(10_000 + i,))
        prob = generate(cfg.scenario, n, ss, **params)
        X = prob.cls.features
        p = X.shape[1]
        sigma2 = prob.truth.noise.variance
        lev = np.einsum("ij,ij->i", X @ np.linalg.pinv(X.T @ X), X)
        xi = prob.truth.noise.draw(np.random.default_rng(ss.spawn(1)[0]), (trace_reps, n))
        tr = (xi**2) @ lev
        t_mean = float(tr.mean())
        t_se = float(tr.std(ddof=1) / math.sqrt(trace_reps)) if trace_reps > 1 else 0.0
        target = sigma2 * p
        z = (t_mean - target) / t_se if t_se > 0 else 0.0
        mean = float(ex.mean())
        se = float(ex.std(ddof=1) / math.sqrt(ex.size)) if ex.size > 1 else 0.0
        rows.append((n, cfg.trials, mean, se, sigma2 * p / n, mean / (sigma2 * p / n),
                     t_mean / n, t_se / n, target / n, z))
    columns = ("n", "trials", "mean_excess", "stderr_excess", "sigma2p_over_n", "ratio",
               "trace_mean", "trace_stderr", "trace_target", "trace_z")
    res = ExperimentResult(cfg.name, cfg.kind, columns, rows)
    fit = fit_rate(res.column("n"), res.column("mean_excess")) if len(rows) >= 4 else None
    summary = {
        "sigma2": sigma2,
        "p": p,
        "ratio_window": [0.5, 2.0],
        "ratio_window_note": "artifact tolerance on the constant",
        "ratio_in_window": [bool(0.5 <= r[5] <= 2.0) for r in rows],
        "trace_within_3se": [bool(abs(r[9]) <= 3.0) for r in rows],
        **_rate_summary(fit, cfg.params.get("expected_slope", -1.0 if fit else None),
                        cfg.params.get("slope_tol", 0.1)),
    }
    return ExperimentResult(cfg.name, cfg.kind, columns, rows, summary, fit)


# -- finite aggregation ----------------------------------------------------

def experiment_finite_aggregation(cfg: ExperimentConfig) -> ExperimentResult:
    """Star and ERM excess-loss quantiles per n on a finite dictionary.

    Table columns: n, trials, mean_star, q90_star, q95_star, mean_erm,
    q90_erm, q95_erm, frac_lambda_lt_1, min_excess_star.
    """
    if cfg.scenario != "finite":
        raise ValueError("finite_aggregation needs the finite scenario")
    params = cfg.scenario_params()
    metric = cfg.params.get("metric", "q90_star")
    rows = []
    for i, n in enumerate(cfg.n_grid):

        def one(ss, n=n):
            prob = generate("finite", n, ss, **params)
            fit = star_estimator(prob.cls, prob.sample)
            e_star = excess_loss(fit, prob.truth)
            if cfg.specification == "well" or fit.lambda_star == 1.0:
                # outside F only a misspecified truth allows a negative value
                _check_nonnegative(e_star, "Star")
            j = erm_finite(prob.cls, prob.sample)
            e_erm = _check_nonnegative(
                excess_loss(prob.truth.dictionary.values[j], prob.truth), "ERM")
            return e_star, e_erm, fit.lambda_star < 1.0

        out = map_trials(one, trial_seeds(cfg.seed, i, cfg.trials))
        es = np.array([o[0] for o in out])
        ee = np.array([o[1] for o in out])
        lt1 = np.array([o[2] for o in out])
        rows.append((n, cfg.trials, float(es.mean()), float(np.quantile(es, 0.9)),
                     float(np.quantile(es, 0.95)), float(ee.mean()),
                     float(np.quantile(ee, 0.9)), float(np.quantile(ee, 0.95)),
                     float(lt1.mean()), float(es.min())))
    columns = ("n", "trials", "mean_star", "q90_star", "q95_star", "mean_erm", "q90_erm",
               "q95_erm", "frac_lambda_lt_1", "min_excess_star")
    res = ExperimentResult(cfg.name, cfg.kind, columns, rows)
    fit = None
    vals = res.column(metric)
    if len(rows) >= 4 and np.all(vals > 0):
        fit = fit_rate(res.column("n"), vals)
    summary = {
        "metric": metric,
        "N": int(params.get("N", 8)),
        "specification": cfg.specification,
        **_rate_summary(fit, cfg.params.get("expected_slope", -1.0 if fit else None),
                        cfg.params.get("slope_tol", 0.15)),
    }
    return ExperimentResult(cfg.name, cfg.kind, columns, rows, summary, fit)


# -- nonparametric rate via chaining ---------------------------------------

def _entropy_for(cfg: ExperimentConfig, n: int, i: int):
    kind = cfg.params.get("entropy", "lipschitz")
    if kind == "lipschitz":
        return LipschitzEntropy(), 1.0
    if kind == "power":
        p = float(cfg.params.get("p", 1.0))
        return PowerEntropy(p, float(cfg.params.get("scale", 1.0))), p
    if kind == "sample":
        ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(i,))
        prob = generate(cfg.scenario, n, ss, **cfg.scenario_params())
        # chaining applies to the class centred at f*
        return GreedyEntropy(prob.cls.values - prob.sample.fstar), None
    raise ValueError(f"unknown entropy {kind!r}")


def experiment_nonparametric_rate(cfg: ExperimentConfig) -> ExperimentResult:
    """Chaining bound per n.

    Table columns: n, total, gamma, alpha, term_finite, term_alpha,
    term_dudley.
    """
    C = float(cfg.params.get("C", 0.25))
    gamma_grid = np.geomspace(*cfg.params.get("gamma_range", [1e-3, 2.0]),
                              int(cfg.params.get("gamma_points", 200)))
    rows = []
    p = None
    for i, n in enumerate(cfg.n_grid):
        ent, p = _entropy_for(cfg, n, i)
        if "alpha_grid" in cfg.params:
            alpha_grid = np.asarray(cfg.params["alpha_grid"], dtype=float)
        elif p is not None and p >= 2:
            # the entropy integral diverges at 0, so alpha must stay positive
            alpha_grid = np.geomspace(1e-5, 1.0, 80)
        else:
            alpha_grid = np.array([0.0])
        b = chaining_bound(ent, C, gamma_grid, alpha_grid, n=n)
        rows.append((n, b.total, b.gamma, b.alpha, b.term_finite, b.term_alpha, b.term_dudley))
    columns = ("n", "total", "gamma", "alpha", "term_finite", "term_alpha", "term_dudley")
    res = ExperimentResult(cfg.name, cfg.kind, columns, rows)
    totals = res.column("total")
    fit = None
    if len(rows) >= 4 and np.all(totals > 0):
        fit = fit_rate(res.column("n"), totals)
    summary = {"entropy": cfg.params.get("entropy", "lipschitz"), "C": C, "p": p}
    if p is not None and p < 2:
        target = cfg.params.get("expected_slope", -2.0 / (2.0 + p))
        summary.update(_rate_summary(fit, target if fit else None,
                                     cfg.params.get("slope_tol", 0.1)))
        summary["asserted"] = fit is not None
    else:
        if fit is not None:
            summary["fit"] = fit.to_dict()
        summary["asserted"] = False
        if p is not None:
            summary["regime_note"] = "p >= 2: slope reported against -1/p, not asserted"
            summary["reference_slope"] = -1.0 / p
    return ExperimentResult(cfg.name, cfg.kind, columns, rows, summary, fit)


# -- stochastic dominance diagnostic ---------------------------------------

DOMINANCE_COLUMNS = ("c_tilde", "u", "p_excess", "p_offset", "delta_hat", "rhs", "slack",
                     "violation")


def experiment_dominance(cfg: ExperimentConfig) -> ExperimentResult:
    """Empirical check of ``P(E > 4u) <= 4 delta + 4 P(offset sup > u)``.

    One excess loss and one offset supremum (with noise multipliers, unit
    coefficient) per trial and per c_tilde. Table columns: see
    ``DOMINANCE_COLUMNS``.
    """
    if cfg.scenario != "finite":
        raise ValueError("dominance needs the finite scenario (exact population norms)")
    n = cfg.n_grid[0]
    C = float(cfg.params.get("C", 1.0))
    c_grid = [float(v) for v in cfg.params.get("c_tilde", [C / 4, C / 2, C])]
    eta = float(cfg.params.get("eta", 0.5))
    levels = cfg.params.get("levels", [0.5, 0.75, 0.9, 0.95, 0.99])
    c_prime = float(cfg.params.get("c_prime", C / 2))
    params = cfg.scenario_params()

    def one(ss):
        prob = generate("finite", n, ss, **params)
        fit = star_estimator(prob.cls, prob.sample)
        e = excess_loss(fit, prob.truth)
        tr: FiniteTruth = prob.truth
        H = shifted_star_class(prob.cls, prob.sample.fstar)
        rng = np.random.default_rng(ss.spawn(1)[0])
        eps = rademacher(rng, n)
        sups = [float(offset_sup_star(H, eps, c, xi=prob.sample.xi, coef=1.0)) for c in c_grid]
        diff = difference_star_hull(tr.dictionary)
        try:
            ratio = isometry_ratio(diff, tr.law, tr.sample_index)
        except ValueError:
            ratio = 1.0
        return e, sups, 1.0 - ratio

    out = map_trials(one, trial_seeds(cfg.seed, 0, cfg.trials))
    E = np.array([o[0] for o in out])
    S = np.array([o[1] for o in out]).reshape(len(out), len(c_grid))
    etas = np.array([o[2] for o in out])
    delta_hat = float(np.mean(etas > eta))
    T = len(out)
    us = np.quantile(E / 4.0, levels)
    rows = []
    for j, c in enumerate(c_grid):
        for u in us:
            pe = float(np.mean(E > 4 * u))
            po = float(np.mean(S[:, j] > u))
            rhs = 4 * delta_hat + 4 * po
            slack = 3.0 * math.sqrt(max(pe * (1 - pe), 1.0 / T) / T)
            rows.append((c, float(u), pe, po, delta_hat, rhs, slack, bool(pe > rhs + slack)))

    # moment constants: A over the shifted class, B = sup_z E[xi^4 | z]
    probe = generate("finite", n, np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, 0)),
                     **params)
    tr = probe.truth
    D = tr.dictionary
    A = fourth_moment_ratio(shifted_star_class(D, D.values[tr.fstar_index]), tr.law.probs,
                            int(cfg.params.get("lambda_grid", 101)))
    d = tr.regression - D.values[tr.fstar_index]
    s2 = tr.noise.variance
    B = float(np.max(d**4 + 6 * d * d * s2 + tr.noise.fourth_moment))
    threshold = 32.0 * math.sqrt(A * B) / (c_prime * n)
    viol = {str(c): float(np.mean([r[7] for r in rows if r[0] == c])) for c in c_grid}
    summary = {
        "n": n,
        "trials": T,
        "C": C,
        "c_tilde": c_grid,
        "c_prime": c_prime,
        "eta": eta,
        "delta_hat": delta_hat,
        "A": A,
        "B": B,
        "u_threshold": threshold,
        "noise": tr.noise.kind,
        "violation_frequency": viol,
        "min_excess": float(E.min()),
        "note": "diagnostic only: the dominance constants are not asserted",
    }
    return ExperimentResult(cfg.name, cfg.kind, DOMINANCE_COLUMNS, rows, summary)


# -- critical radius -------------------------------------------------------

def _critical_finite(cfg, n, i, C, delta, reps, check_reps, bracket):
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(i,))
    prob = generate("finite", n, ss, **cfg.scenario_params())
    tr: FiniteTruth = prob.truth
    diff = difference_star_hull(tr.dictionary)
    H = LocalizedSegments(diff.take(tr.sample_index), diff.gram(tr.law.probs))
    eta_hat = 1.0 - isometry_ratio(diff, tr.law, tr.sample_index)
    kappa = C * (1.0 - eta_hat)
    xi = prob.sample.xi
    seed = int(ss.generate_state(1)[0])
    cr = critical_radius(H, kappa, delta, C, reps, bracket, seed=seed, xi=xi)
    chk = restriction_identity(H, cr.r, C, check_reps, seed + 1, xi=xi)
    return eta_hat, kappa, cr, chk


def _critical_linear(cfg, n, i, t, C, delta, reps, check_reps, bracket):
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(i, t))
    prob = generate(cfg.scenario, n, ss, **cfg.scenario_params())
    H = LocalizedLinear(prob.cls, prob.truth.cov)
    eta_hat = 1.0 - isometry_ratio(prob.cls, prob.truth.law, prob.cls.features)
    kappa = C * (1.0 - eta_hat)
    xi = prob.sample.xi
    seed = int(ss.generate_state(1)[0])
    cr = critical_radius(H, kappa, delta, C, reps, bracket, seed=seed, xi=xi)
    chk = restriction_identity(H, cr.r, C, check_reps, seed + 1, xi=xi) if check_reps else None
    return eta_hat, kappa, cr, chk


CRITICAL_COLUMNS = ("n", "design", "eta_hat", "kappa", "r", "r2", "prob_at_r",
                    "restriction_frequency", "restriction_threshold", "restriction_ok")


def experiment_critical_radius(cfg: ExperimentConfig) -> ExperimentResult:
    """Critical radius with kappa = C (1 - eta_hat) and the restriction identity.

    On the finite scenario the star hull of F - F is used; on linear
    scenarios the linear class with its population covariance. Table
    columns: see ``CRITICAL_COLUMNS``.
    """
    C = float(cfg.params.get("C", 1.0))
    delta = float(cfg.params.get("delta", 0.05))
    reps = int(cfg.params.get("reps", 2000))
    check_reps = int(cfg.params.get("check_reps", 10_000))
    bracket = tuple(cfg.params.get("r_bracket", [1e-4, 10.0]))
    designs = cfg.trials
    rows = []
    for i, n in enumerate(cfg.n_grid):
        for t in range(designs):
            if cfg.scenario == "finite":
                if t:
                    break
                eta_hat, kappa, cr, chk = _critical_finite(cfg, n, i, C, delta, reps,
                                                           check_reps, bracket)
            else:
                eta_hat, kappa, cr, chk = _critical_linear(cfg, n, i, t, C, delta, reps,
                                                           check_reps, bracket)
            if chk is not None:
                slack = 3.0 * math.sqrt(2 * delta * (1 - 2 * delta) / chk.reps)
                thr = 1.0 - 2.0 * delta - slack
                freq, ok = chk.frequency, bool(chk.frequency >= thr)
            else:
                freq, thr, ok = float("nan"), float("nan"), True
            rows.append((n, t, eta_hat, kappa, cr.r, cr.r**2, cr.prob_estimate_at_r,
                         freq, thr, ok))
    ns = np.array(cfg.n_grid, dtype=float)
    r2 = np.array([np.mean([r[5] for r in rows if r[0] == n]) for n in cfg.n_grid])
    fit = fit_rate(ns, r2) if len(ns) >= 4 and np.all(r2 > 0) else None
    summary = {
        "C": C,
        "delta": delta,
        "reps": reps,
        "check_reps": check_reps,
        "mean_r2": r2.tolist(),
        "restriction_ok": all(r[9] for r in rows),
    }
    if cfg.scenario != "finite":
        summary.update(_rate_summary(fit, cfg.params.get("expected_slope", -1.0 if fit else None),
                                     cfg.params.get("slope_tol", 0.15)))
    elif fit is not None:
        summary["fit"] = fit.to_dict()
    return ExperimentResult(cfg.name, cfg.kind, CRITICAL_COLUMNS, rows, summary, fit)


# -- minimax lower bound ---------------------------------------------------

MINIMAX_COLUMNS = ("instance", "n", "c", "m", "N", "rad_design", "rad_g", "lower_bound",
                   "bayes_regret", "bayes_rule_worst_regret", "grid_slack", "holds")


def experiment_minimax_lower(cfg: ExperimentConfig) -> ExperimentResult:
    """Exhaustive comparison on tiny random instances (one per trial).

    Instance t uses n = n_grid[t mod len(n_grid)] and a dictionary of
    ``N`` functions with values uniform in [-1, 1].
    """
    c = int(cfg.params.get("c", 1))
    N = int(cfg.class_spec.get("N", 3))
    grid = cfg.params.get("lambda_grid")
    rows = []
    for t in range(cfg.trials):
        n = cfg.n_grid[t % len(cfg.n_grid)]
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(t,)))
        F = FiniteDictionary(rng.uniform(-1.0, 1.0, (N, (1 + c) * n)))
        rec = minimax_lower_bound(F, n, c, grid)
        rows.append((t, rec.n, rec.c, rec.m, rec.N, rec.rad_design, rec.rad_g, rec.lower_bound,
                     rec.bayes_regret, rec.bayes_rule_worst_regret, rec.grid_slack, rec.holds))
    summary = {
        "instances": len(rows),
        "holding": int(sum(r[11] for r in rows)),
        "lambda_grid": grid,
        "note": "bayes_regret (uniform prior on sign patterns) lower-bounds the minimax regret",
    }
    return ExperimentResult(cfg.name, cfg.kind, MINIMAX_COLUMNS, rows, summary)


# -- geometric inequality audit --------------------------------------------

def experiment_geom_check(cfg: ExperimentConfig) -> ExperimentResult:
    c = float(cfg.params.get("c", DEFAULT_C))
    tol = float(cfg.params.get("tol", 1e-9))
    N, n, mins, viol = audit_random_instances(
        cfg.trials, cfg.seed, c, tol, int(cfg.class_spec.get("max_N", 6)),
        int(cfg.class_spec.get("max_n", cfg.n_grid[-1])))
    rows = [(t, int(a), int(b), float(m), int(v)) for t, (a, b, m, v)
            in enumerate(zip(N, n, mins, viol))]
    summary = {"c": c, "tol": tol, "trials": cfg.trials, "violations": int(viol.sum()),
               "min_ratio": float(mins.min())}
    return ExperimentResult(cfg.name, cfg.kind, ("trial", "N", "n", "min_ratio", "violations"),
                            rows, summary)


EXPERIMENTS = {
    "parametric_rate": experiment_parametric_rate,
    "finite_aggregation": experiment_finite_aggregation,
    "nonparametric_rate": experiment_nonparametric_rate,
    "dominance": experiment_dominance,
    "critical_radius": experiment_critical_radius,
    "minimax_lower": experiment_minimax_lower,
    "geom_check": experiment_geom_check,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return EXPERIMENTS[cfg.kind](cfg)
