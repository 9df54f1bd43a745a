"""Empirical risk minimisation and the two-step Star estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DesignSample, FiniteDictionary, LinearClass, StarHullClass, evaluate, values


@dataclass(frozen=True)
class LinearERM:
    beta: np.ndarray
    rank: int
    singular: bool


@dataclass(frozen=True)
class StarFitResult:
    """Outcome of the two-step procedure.

    ``g_hat`` is the first-step minimiser (row index for a dictionary, weight
    vector for a linear class); ``f_hat`` is the final fit on the design and
    equals ``lambda_star * g + (1 - lambda_star) * f_{base_index}``.
    """

    g_hat: int | np.ndarray
    f_hat: np.ndarray
    lambda_star: float
    base_index: int | None
    risk_g: float
    risk_f: float
    singular: bool = False

    def to_dict(self) -> dict:
        g = self.g_hat
        return {
            "g_hat": int(g) if np.isscalar(g) else [float(v) for v in np.ravel(g)],
            "lambda_star": float(self.lambda_star),
            "base_index": None if self.base_index is None else int(self.base_index),
            "risk_g": float(self.risk_g),
            "risk_f": float(self.risk_f),
            "singular": bool(self.singular),
        }


def empirical_risks(F: FiniteDictionary, y: np.ndarray) -> np.ndarray:
    r = F.values - np.asarray(y, dtype=float)[None, :]
    return np.mean(r * r, axis=1)


def erm_finite(F: FiniteDictionary, s: DesignSample) -> int:
    """Index of the dictionary member with smallest empirical square loss.

    Ties go to the lowest index.
    """
    if F.n != s.n:
        raise ValueError("dictionary and sample sizes differ")
    return int(np.argmin(empirical_risks(F, s.y)))


def erm_linear(L: LinearClass, s: DesignSample) -> LinearERM:
    """Least squares via SVD; minimum-norm solution if the Gram matrix is singular."""
    if L.n != s.n:
        raise ValueError("design and sample sizes differ")
    beta, _, rank, _ = np.linalg.lstsq(L.features, s.y, rcond=None)
    return LinearERM(beta=beta, rank=int(rank), singular=int(rank) < L.p)


def segment_minimize(g, f, y) -> tuple[float, float]:
    """Minimise ``|lam * (g - f) + (f - y)|_n^2`` over lam in [0, 1].

    Returns ``(lam_star, risk)``. A degenerate segment (g == f on the design)
    returns ``lam_star = 1``.
    """
    g, f, y = values(g), values(f), values(y)
    if not (g.shape == f.shape == y.shape):
        raise ValueError("g, f and y must have equal length")
    lam, risk = _segment_minimize_rows(g, f[None, :], y)
    return float(lam[0]), float(risk[0])


def _segment_minimize_rows(g: np.ndarray, F: np.ndarray, y: np.ndarray):
    d = g[None, :] - F
    r = F - y[None, :]
    dd = np.mean(d * d, axis=1)
    dr = np.mean(d * r, axis=1)
    lam = np.ones(F.shape[0])
    ok = dd > 0
    lam[ok] = np.clip(-dr[ok] / dd[ok], 0.0, 1.0)
    res = r + lam[:, None] * d
    return lam, np.mean(res * res, axis=1)


def star_estimator(F: FiniteDictionary | LinearClass, s: DesignSample) -> StarFitResult:
    """Two-step Star fit.

    Step one is ERM over ``F``; step two is ERM over the star hull of ``F``
    around the step-one fit, solved segment by segment in closed form. For a
    linear class the hull is the class itself and the OLS fit is returned.
    """
    if isinstance(F, LinearClass):
        fit = erm_linear(F, s)
        fhat = F.features @ fit.beta
        risk = float(np.mean((fhat - s.y) ** 2))
        return StarFitResult(fit.beta, fhat, 1.0, None, risk, risk, fit.singular)
    if not isinstance(F, FiniteDictionary):
        raise TypeError("star_estimator supports FiniteDictionary and LinearClass")

    y = s.y
    risks = empirical_risks(F, y)
    j = int(np.argmin(risks))
    g = F.values[j]
    risk_g = float(risks[j])
    lam, seg_risk = _segment_minimize_rows(g, F.values, y)
    # argmin keeps the lowest base index among ties
    k = int(np.argmin(seg_risk))
    hull = StarHullClass(F, g)
    fhat = evaluate(hull, (k, lam[k]))
    risk_f = float(np.mean((fhat - y) ** 2))
    if risk_f > risk_g:
        # roundoff guard: the centre itself is always in the hull
        k, fhat, risk_f = j, g.copy(), risk_g
        lam[k] = 1.0
    return StarFitResult(j, fhat, float(lam[k]), k, risk_g, risk_f)


def star_fit_values(fit: StarFitResult, F_values: np.ndarray) -> np.ndarray:
    """Rebuild a finite-class Star fit on other points (rows of ``F_values``)."""
    if fit.base_index is None:
        raise ValueError("linear fits are rebuilt from their weights")
    g = F_values[int(fit.g_hat)]
    f = F_values[int(fit.base_index)]
    lam = fit.lambda_star
    if lam == 1.0:
        return g.copy()
    if lam == 0.0:
        return f.copy()
    return lam * g + (1.0 - lam) * f
