"""Audits of the Star estimator's geometric inequality and the excess-loss
decomposition that follows from it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DesignSample, FiniteDictionary, LinearClass
from .estimators import StarFitResult, star_estimator

DEFAULT_C = 1.0 / 18.0


@dataclass(frozen=True)
class GeomAuditReport:
    """Per-member records of ``lhs >= c * rhs_base``.

    ``lhs = E_n(h - Y)^2 - E_n(f_hat - Y)^2`` and ``rhs_base = E_n(f_hat - h)^2``.
    ``ratio`` is NaN where ``rhs_base <= tol``.
    """

    lhs: np.ndarray
    rhs_base: np.ndarray
    ratio: np.ndarray
    min_ratio: float
    violations_at_c: int
    c: float
    tol: float
    fit: StarFitResult


def audit_geometric_inequality(
    F: FiniteDictionary | LinearClass,
    s: DesignSample,
    c: float = DEFAULT_C,
    tol: float = 1e-9,
    probes: np.ndarray | None = None,
    fit: StarFitResult | None = None,
) -> GeomAuditReport:
    """Check the inequality for every ``h`` in a dictionary.

    For a linear class the members ``h = X beta`` are taken from ``probes``
    (rows are weight vectors; default: 64 seeded Gaussian draws).
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if fit is None:
        fit = star_estimator(F, s)
    if isinstance(F, LinearClass):
        if probes is None:
            probes = np.random.default_rng(0).standard_normal((64, F.p))
        H = np.atleast_2d(probes) @ F.features.T
    else:
        H = F.values
    y = s.y
    fhat = fit.f_hat
    lhs = np.mean((H - y) ** 2, axis=1) - np.mean((fhat - y) ** 2)
    rhs = np.mean((fhat - H) ** 2, axis=1)
    ratio = np.full(lhs.shape, np.nan)
    pos = rhs > tol
    ratio[pos] = lhs[pos] / rhs[pos]
    min_ratio = float(np.min(ratio[pos])) if np.any(pos) else float("inf")
    violations = int(np.sum(lhs < c * rhs - tol))
    return GeomAuditReport(lhs, rhs, ratio, min_ratio, violations, c, tol, fit)


def random_nonconvex_instance(rng: np.random.Generator, max_N: int = 6, max_n: int = 10):
    """A Gaussian dictionary and response with N in [2, max_N], n in [2, max_n]."""
    N = int(rng.integers(2, max_N + 1))
    n = int(rng.integers(2, max_n + 1))
    F = FiniteDictionary(rng.standard_normal((N, n)))
    y = rng.standard_normal(n)
    return F, DesignSample(np.zeros((n, 1)), y)


def audit_random_instances(trials: int, seed: int, c: float = DEFAULT_C, tol: float = 1e-9,
                           max_N: int = 6, max_n: int = 10):
    """Run the audit on ``trials`` random non-convex instances.

    Returns arrays ``(N, n, min_ratio, violations)`` with one entry per trial.
    """
    rng = np.random.default_rng(seed)
    out_N = np.empty(trials, dtype=int)
    out_n = np.empty(trials, dtype=int)
    out_min = np.empty(trials)
    out_v = np.empty(trials, dtype=int)
    for t in range(trials):
        F, s = random_nonconvex_instance(rng, max_N, max_n)
        rep = audit_geometric_inequality(F, s, c=c, tol=tol)
        out_N[t], out_n[t] = F.size, s.n
        out_min[t], out_v[t] = rep.min_ratio, rep.violations_at_c
    return out_N, out_n, out_min, out_v


@dataclass(frozen=True)
class ExcessLossDecomposition:
    """The three terms bounding the excess loss, with the evaluated gap.

    ``margin`` is the Monte Carlo standard error of the excess-loss estimate
    on the evaluation set.
    """

    empirical_process: float
    population_quadratic: float
    empirical_quadratic: float
    bound: float
    excess_loss: float
    margin: float

    @property
    def holds(self) -> bool:
        return self.excess_loss <= self.bound + self.margin


def corollary2_decomposition(
    f_hat: np.ndarray,
    sample: DesignSample,
    f_hat_eval: np.ndarray,
    eval_sample: DesignSample,
    c: float = DEFAULT_C,
) -> ExcessLossDecomposition:
    """Deterministic bound on the excess loss of a Star fit.

    ``sample`` is the training sample and ``eval_sample`` a large held-out
    sample standing in for the population; both must carry ``fstar``.
    Population expectations are averages over ``eval_sample``.
    """
    if not (sample.has_truth and eval_sample.has_truth):
        raise ValueError("both samples must carry the best-in-class function fstar")
    fs, y = sample.fstar, sample.y
    fs_e, y_e = eval_sample.fstar, eval_sample.y
    f_hat = np.asarray(f_hat, dtype=float)
    f_hat_e = np.asarray(f_hat_eval, dtype=float)

    cross_emp = np.mean(2 * (fs - y) * (fs - f_hat))
    cross_pop = np.mean(2 * (fs_e - y_e) * (fs_e - f_hat_e))
    t1 = float(cross_emp - cross_pop)
    t2 = float(np.mean((fs_e - f_hat_e) ** 2))
    t3 = float(-(1 + c) * np.mean((fs - f_hat) ** 2))

    diff = (f_hat_e - y_e) ** 2 - (fs_e - y_e) ** 2
    excess = float(np.mean(diff))
    margin = float(np.std(diff, ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else 0.0
    return ExcessLossDecomposition(t1, t2, t3, t1 + t2 + t3, excess, margin)
