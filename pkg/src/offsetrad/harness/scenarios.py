"""Synthetic regression problems with exactly known population quantities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import DesignSample, FiniteDictionary, LinearClass
from ..estimators import StarFitResult, star_fit_values
from ..offset import FiniteSupportLaw, GaussianLaw


@dataclass(frozen=True)
class NoiseSpec:
    """``gaussian`` (sd = scale), ``student_t`` (scale * t_df) or
    ``uniform`` (unit-variance uniform times scale)."""

    kind: str = "gaussian"
    scale: float = 1.0
    df: float = 5.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "student_t", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "student_t" and self.df <= 4:
            raise ValueError("student_t noise needs df > 4 (finite fourth moment)")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(size)
        if self.kind == "student_t":
            return self.scale * rng.standard_t(self.df, size)
        return self.scale * rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)

    @property
    def variance(self) -> float:
        if self.kind == "student_t":
            return self.scale**2 * self.df / (self.df - 2)
        return self.scale**2

    @property
    def fourth_moment(self) -> float:
        s4 = self.scale**4
        if self.kind == "gaussian":
            return 3.0 * s4
        if self.kind == "student_t":
            df = self.df
            return s4 * 3.0 * df * df / ((df - 2) * (df - 4))
        return s4 * 9.0 / 5.0

    @classmethod
    def from_dict(cls, d: dict | None) -> "NoiseSpec":
        return cls(**(d or {}))


@dataclass(frozen=True)
class LinearTruth:
    cov: np.ndarray
    beta_star: np.ndarray
    noise: NoiseSpec
    quad: float = 0.0

    @property
    def law(self) -> GaussianLaw:
        return GaussianLaw(self.cov)

    def excess_loss_weights(self, beta) -> float:
        d = np.asarray(beta, dtype=float) - self.beta_star
        return float(d @ self.cov @ d)


@dataclass(frozen=True)
class FiniteTruth:
    """Finite-support design with the dictionary known on every support point."""

    law: FiniteSupportLaw
    dictionary: FiniteDictionary
    regression: np.ndarray
    fstar_index: int
    sample_index: np.ndarray
    noise: NoiseSpec

    def risk_values(self, f_support: np.ndarray) -> float:
        """Population risk minus the noise variance (common to all fits)."""
        return float(((f_support - self.regression) ** 2) @ self.law.probs)

    def excess_loss_values(self, f_support: np.ndarray) -> float:
        return self.risk_values(f_support) - self.risk_values(self.dictionary.values[self.fstar_index])


@dataclass(frozen=True)
class Problem:
    scenario: str
    sample: DesignSample
    cls: Any
    truth: Any
    extras: dict = field(default_factory=dict)


def _noise(noise, sigma: float) -> NoiseSpec:
    """Explicit noise spec wins; otherwise Gaussian with sd ``sigma``."""
    if noise is None:
        return NoiseSpec("gaussian", float(sigma))
    if isinstance(noise, dict):
        return NoiseSpec.from_dict(noise)
    return noise


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _well_linear(n, rng, p=5, sigma=1.0, noise=None, beta=None, **_):
    noise = _noise(noise, sigma)
    beta_star = np.ones(p) if beta is None else np.asarray(beta, dtype=float)
    cov = np.eye(p)
    X = rng.standard_normal((n, p))
    fstar = X @ beta_star
    y = fstar + noise.draw(rng, n)
    truth = LinearTruth(cov, beta_star, noise)
    return Problem("well_linear", DesignSample(X, y, fstar=fstar), LinearClass(X), truth)


def _misspec_linear(n, rng, p=3, sigma=1.0, quad=1.0, noise=None, **_):
    noise = _noise(noise, sigma)
    beta0 = np.ones(p)
    cov = np.eye(p)
    X = rng.standard_normal((n, p))
    # E[x x_1^2] = 0 for centred Gaussians, so beta0 stays the best linear fit
    # while the residual y - x^T beta0 has mean quad
    y = X @ beta0 + quad * X[:, 0] ** 2 + noise.draw(rng, n)
    truth = LinearTruth(cov, beta0, noise, quad)
    return Problem("misspec_linear", DesignSample(X, y, fstar=X @ beta0), LinearClass(X), truth)


def finite_dictionary_on_support(N: int, m: int, class_seed: int = 0, amplitude: float = 1.0):
    """N bounded smooth functions on m equispaced support points of [0, 1]."""
    rng = np.random.default_rng(class_seed)
    z = (np.arange(m) + 0.5) / m
    k = np.arange(1, 4)
    a = rng.uniform(-1, 1, (N, 3))
    phase = rng.uniform(0, 2 * np.pi, (N, 3))
    vals = np.einsum("jk,jkm->jm", a, np.sin(np.pi * k[None, :, None] * z[None, None, :]
                                          + phase[:, :, None])) / 3.0
    return z, FiniteDictionary(amplitude * vals)


def _finite(n, rng, N=8, m=32, sigma=1.0, noise=None, specification="well", class_seed=0,
            shift=0.5, amplitude=1.0, **_):
    noise = _noise(noise, sigma)
    z, D = finite_dictionary_on_support(N, m, class_seed, amplitude)
    if specification == "well":
        reg = D.values[0].copy()
    elif specification == "misspecified":
        # centre of two members plus an off-dictionary bump
        reg = 0.5 * (D.values[0] + D.values[1]) + shift * amplitude * np.cos(3 * np.pi * z) / 3
    else:
        raise ValueError("specification must be 'well' or 'misspecified'")
    law = FiniteSupportLaw(z, np.full(m, 1.0 / m))
    risks = ((D.values - reg) ** 2) @ law.probs
    j_star = int(np.argmin(risks))
    idx = law.sample_indices(n, rng)
    y = reg[idx] + noise.draw(rng, n)
    fstar = D.values[j_star][idx]
    sample = DesignSample(z[idx], y, fstar=fstar)
    truth = FiniteTruth(law, D, reg, j_star, idx, noise)
    return Problem("finite", sample, D.take(idx), truth)


def lipschitz_functions(K: int, x: np.ndarray, rng: np.random.Generator, knots: int = 64):
    """K random 1-Lipschitz maps [0, 1] -> [0, 1] evaluated at x."""
    t = np.linspace(0.0, 1.0, knots + 1)
    h = t[1] - t[0]
    steps = rng.uniform(-1.0, 1.0, (K, knots)) * h
    start = rng.uniform(0.0, 1.0, (K, 1))
    path = np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)
    # fold into [0, 1]: the reflection map is 1-Lipschitz
    path = np.abs(((path + 1.0) % 2.0) - 1.0)
    return np.vstack([np.interp(x, t, row) for row in path])


def _lipschitz(n, rng, K=256, sigma=0.5, noise=None, **_):
    noise = _noise(noise, sigma)
    x = np.sort(rng.uniform(0.0, 1.0, n))
    V = lipschitz_functions(K, x, rng)
    reg = V[0]
    y = reg + noise.draw(rng, n)
    return Problem("lipschitz", DesignSample(x, y, fstar=reg), FiniteDictionary(V), None)


SCENARIOS = {
    "well_linear": _well_linear,
    "misspec_linear": _misspec_linear,
    "finite": _finite,
    "lipschitz": _lipschitz,
}


def generate(scenario: str, n: int, seed, **params) -> Problem:
    """Draw one problem instance; deterministic given ``seed``.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`.
    """
    try:
        make = SCENARIOS[scenario]
    except KeyError:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}") from None
    if n < 1:
        raise ValueError("n must be >= 1")
    return make(int(n), _rng(seed), **params)


def excess_loss(fit, truth) -> float:
    """Population excess loss of a fit, exact for the registered scenarios.

    ``fit`` is a :class:`StarFitResult`, a weight vector (linear truth) or a
    vector of values on the support (finite truth).
    """
    if truth is None:
        raise ValueError("scenario carries no truth")
    if isinstance(truth, LinearTruth):
        beta = fit.g_hat if isinstance(fit, StarFitResult) else fit
        return truth.excess_loss_weights(beta)
    if isinstance(truth, FiniteTruth):
        if isinstance(fit, StarFitResult):
            f_support = star_fit_values(fit, truth.dictionary.values)
        else:
            f_support = np.asarray(fit, dtype=float)
        return truth.excess_loss_values(f_support)
    raise TypeError(f"unsupported truth {type(truth).__name__}")
