"""Offset Rademacher complexities.

The offset process evaluated at ``h`` is

    (1/n) * sum_i (coef * eps_i * w_i * h_i - C * h_i^2)

with ``w = xi`` (noise multipliers) or ``w = 1``. ``coef`` is 1 or 2; both
conventions are in use for this object, so every function takes it
explicitly. The suprema below are exact for dictionaries, segment families
(per-segment concave quadratic in lambda) and linear classes (closed form).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import FiniteDictionary, LinearClass, SegmentFamily, StarHullClass

QUANTILE_LEVELS = (0.5, 0.9, 0.95, 0.99)
_CHUNK = 4096


class SingularGramWarning(UserWarning):
    """The Gram matrix of a linear class is singular; a pseudo-inverse was used."""


def parse_convention(name: str) -> tuple[float, bool]:
    """``'1eps' | '2eps' | '1eps-noise' | '2eps-noise'`` -> (coef, use_noise)."""
    table = {
        "1eps": (1.0, False),
        "2eps": (2.0, False),
        "1eps-noise": (1.0, True),
        "2eps-noise": (2.0, True),
    }
    try:
        return table[name]
    except KeyError:
        raise ValueError(f"unknown convention {name!r}; choose from {sorted(table)}") from None


def rademacher(rng: np.random.Generator, size) -> np.ndarray:
    return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0


def _weights(eps, xi) -> np.ndarray:
    E = np.asarray(eps, dtype=float)
    if xi is not None:
        E = E * np.asarray(xi, dtype=float)
    return E


def _squeeze(out: np.ndarray, eps) -> float | np.ndarray:
    return float(out[0]) if np.ndim(eps) == 1 else out


# -- exact suprema ---------------------------------------------------------

def offset_sup_finite(V, eps, C: float, xi=None, coef: float = 1.0):
    """Exact max over the rows of ``V`` for one draw (``eps`` of shape (n,))
    or a batch of draws (shape (R, n))."""
    if C <= 0:
        raise ValueError("C must be positive")
    M = V.values if isinstance(V, FiniteDictionary) else np.atleast_2d(np.asarray(V, dtype=float))
    W = np.atleast_2d(_weights(eps, xi))
    n = M.shape[1]
    quad = np.sum(M * M, axis=1)
    obj = (coef * (W @ M.T) - C * quad[None, :]) / n
    return _squeeze(obj.max(axis=1), eps)


def _segment_intervals(aa, ab, bb, r: float | None):
    """Sub-interval of [0, 1] on which ``|a + lam b|^2 <= r^2``."""
    K = aa.shape[0]
    lo, hi = np.zeros(K), np.ones(K)
    if r is None:
        return lo, hi, np.ones(K, dtype=bool)
    r2 = r * r
    feasible = np.empty(K, dtype=bool)
    flat = bb <= 1e-14 * (1.0 + aa)
    feasible[flat] = aa[flat] <= r2 * (1 + 1e-12) + 1e-300
    curved = ~flat
    if np.any(curved):
        A, B, Cq = bb[curved], ab[curved], aa[curved] - r2
        disc = B * B - A * Cq
        ok = disc >= 0
        sq = np.sqrt(np.maximum(disc, 0.0))
        l1 = (-B - sq) / A
        l2 = (-B + sq) / A
        lo_c = np.maximum(0.0, l1)
        hi_c = np.minimum(1.0, l2)
        feasible[curved] = ok & (lo_c <= hi_c)
        lo[curved] = np.where(feasible[curved], lo_c, 0.0)
        hi[curved] = np.where(feasible[curved], hi_c, 1.0)
    return lo, hi, feasible


def _segment_sup_batch(fam: SegmentFamily, W: np.ndarray, C: float, coef: float,
                       lo=None, hi=None, feasible=None, return_argmax: bool = False):
    n = fam.n
    aa, ab, bb = fam.quadratic_coefficients()
    K = fam.n_segments
    if lo is None:
        lo, hi, feasible = np.zeros(K), np.ones(K), np.ones(K, dtype=bool)
    p, q, r, s = fam.index.T
    flat = bb <= 1e-14 * (1.0 + aa)
    R = W.shape[0]
    best = np.empty(R)
    arg_k = np.empty(R, dtype=np.intp)
    arg_lam = np.empty(R)
    step = max(1, (1 << 22) // max(K, 1))
    for start in range(0, R, step):
        Wc = W[start:start + step]
        wU = Wc @ fam.U.T
        la = coef * (wU[:, p] - wU[:, q]) / n
        lb = coef * (wU[:, r] - wU[:, s]) / n
        slope0 = lb - 2 * C * ab
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(flat, np.where(slope0 > 0, 1.0, 0.0), slope0 / (2 * C * bb))
        lam = np.clip(lam, lo, hi)
        val = la + lam * lb - C * (aa + 2 * lam * ab + lam * lam * bb)
        val = np.where(feasible, val, -np.inf)
        k = np.argmax(val, axis=1)
        rows = np.arange(val.shape[0])
        best[start:start + step] = val[rows, k]
        arg_k[start:start + step] = k
        arg_lam[start:start + step] = lam[rows, k]
    if return_argmax:
        return best, arg_k, arg_lam
    return best


def _as_segments(H) -> SegmentFamily:
    if isinstance(H, SegmentFamily):
        return H
    if isinstance(H, StarHullClass):
        return H.segments()
    raise TypeError(f"expected a segment family, got {type(H).__name__}")


def offset_sup_star(H, eps, C: float, xi=None, coef: float = 1.0):
    """Exact supremum over a segment family (e.g. ``shifted_star_class``).

    On each segment ``h(lam) = a + lam * b`` the objective is a concave
    quadratic in lam; its clamped maximiser is taken per segment, then the
    best segment.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    fam = _as_segments(H)
    W = np.atleast_2d(_weights(eps, xi))
    return _squeeze(_segment_sup_batch(fam, W, C, coef), eps)


def offset_argmax_star(H, eps, C: float, xi=None, coef: float = 1.0):
    """``(value, segment index, lambda)`` of the maximiser for one draw."""
    fam = _as_segments(H)
    W = np.atleast_2d(_weights(eps, xi))
    v, k, lam = _segment_sup_batch(fam, W, C, coef, return_argmax=True)
    return float(v[0]), int(k[0]), float(lam[0])


def _gram_pinv(X: np.ndarray) -> tuple[np.ndarray, bool]:
    G = X.T @ X
    rank = np.linalg.matrix_rank(G, hermitian=True)
    singular = rank < G.shape[0]
    if singular:
        warnings.warn("singular Gram matrix; using the pseudo-inverse", SingularGramWarning,
                      stacklevel=3)
        return np.linalg.pinv(G, hermitian=True), True
    return linalg.cho_solve(linalg.cho_factor(G), np.eye(G.shape[0])), False


def offset_sup_linear(L: LinearClass, eps, C: float, xi=None, coef: float = 1.0):
    """Closed-form supremum over ``beta in R^p``.

    With ``a = sum_i eps_i w_i x_i`` the value is
    ``coef^2 * a^T G^{-1} a / (4 C n)``; for coef=2 this is ``a^T G^{-1} a / (C n)``.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    X = L.features
    W = np.atleast_2d(_weights(eps, xi))
    Ginv, _ = _gram_pinv(X)
    A = W @ X
    out = coef * coef * np.einsum("ij,jk,ik->i", A, Ginv, A) / (4.0 * C * L.n)
    return _squeeze(out, eps)


def offset_sup_linear_unit(L: LinearClass, eps, c: float):
    """The unit-multiplier form ``|sum_t eps_t x_t|^2_{Sigma^{-1}} / (4 c n)``
    with ``Sigma = sum_t x_t x_t^T``, computed by a direct linear solve."""
    X = L.features
    E = np.atleast_2d(np.asarray(eps, dtype=float))
    S = E @ X
    Sigma = X.T @ X
    sol = np.linalg.solve(Sigma, S.T).T
    out = np.sum(S * sol, axis=1) / (4.0 * c * L.n)
    return _squeeze(out, eps)


def offset_sup(cls, eps, C: float, xi=None, coef: float = 1.0):
    """Dispatch to the exact supremum for the class type."""
    if isinstance(cls, FiniteDictionary):
        return offset_sup_finite(cls, eps, C, xi, coef)
    if isinstance(cls, LinearClass):
        return offset_sup_linear(cls, eps, C, xi, coef)
    if isinstance(cls, (SegmentFamily, StarHullClass)):
        return offset_sup_star(cls, eps, C, xi, coef)
    if isinstance(cls, (LocalizedSegments, LocalizedLinear)):
        return _squeeze(cls.sup(np.atleast_2d(_weights(eps, xi)), C, coef), eps)
    raise TypeError(f"unsupported class type {type(cls).__name__}")


def _class_n(cls) -> int:
    if isinstance(cls, np.ndarray):
        return cls.shape[1]
    return cls.n


# -- Monte Carlo -----------------------------------------------------------

@dataclass(frozen=True)
class OffsetEstimate:
    mean: float
    stderr: float
    quantiles: dict
    reps: int
    seed: int
    c_offset: float
    multipliers: str
    coef: float = 1.0

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "quantiles": {str(k): v for k, v in self.quantiles.items()},
            "reps": self.reps,
            "seed": self.seed,
            "c_offset": self.c_offset,
            "multipliers": self.multipliers,
            "coef": self.coef,
        }


def offset_draws(cls, C: float, reps: int, seed: int, xi=None, coef: float = 1.0) -> np.ndarray:
    """``reps`` independent suprema; bit-reproducible for a given seed."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    n = _class_n(cls)
    rng = np.random.default_rng(seed)
    out = np.empty(reps)
    for start in range(0, reps, _CHUNK):
        m = min(_CHUNK, reps - start)
        eps = rademacher(rng, (m, n))
        out[start:start + m] = offset_sup(cls, eps, C, xi, coef)
    return out


def summarize(draws: np.ndarray, seed: int, C: float, multipliers: str, coef: float,
              levels=QUANTILE_LEVELS) -> OffsetEstimate:
    reps = draws.size
    sd = float(np.std(draws, ddof=1)) if reps > 1 else 0.0
    qs = np.quantile(draws, levels)
    return OffsetEstimate(
        mean=float(np.mean(draws)),
        stderr=sd / math.sqrt(reps),
        quantiles={float(l): float(v) for l, v in zip(levels, qs)},
        reps=int(reps),
        seed=int(seed),
        c_offset=float(C),
        multipliers=multipliers,
        coef=float(coef),
    )


def offset_mc(cls, C: float, reps: int, seed: int, xi=None, coef: float = 1.0,
              levels=QUANTILE_LEVELS) -> OffsetEstimate:
    """Monte Carlo mean, standard error and quantiles of the supremum."""
    draws = offset_draws(cls, C, reps, seed, xi, coef)
    return summarize(draws, seed, C, "none" if xi is None else "noise", coef, levels)


@dataclass(frozen=True)
class TailCheck:
    threshold: float
    exceedance: float
    slack: float
    delta: float
    reps: int

    @property
    def margin(self) -> float:
        return self.delta + self.slack - self.exceedance

    @property
    def passed(self) -> bool:
        return self.margin >= 0


def noise_multiplier_constant(V, xi, C: float) -> float:
    """``sup_{v != 0} sum v_i^2 xi_i^2 / (2 C sum v_i^2)``."""
    M = V.values if isinstance(V, FiniteDictionary) else np.atleast_2d(V)
    xi = np.asarray(xi, dtype=float)
    den = np.sum(M * M, axis=1)
    nz = den > 0
    if not np.any(nz):
        return 0.0
    return float(np.max(np.sum(M[nz] ** 2 * xi**2, axis=1) / (2 * C * den[nz])))


def finite_class_bound(N: int, n: int, C: float, delta: float | None = None,
                       M: float | None = None) -> float:
    """Expectation (``delta=None``) or tail threshold for a class of N vectors
    under the unit-coefficient convention. With multipliers, pass ``M``."""
    logs = math.log(N) + (0.0 if delta is None else math.log(1.0 / delta))
    scale = 1.0 / (2.0 * C) if M is None else M
    return scale * logs / n


def offset_tail_check(V: FiniteDictionary, C: float, reps: int, delta: float, seed: int = 0,
                      xi=None, n_sd: float = 3.0) -> TailCheck:
    """Frequency with which the supremum (coef 1) reaches the finite-class
    tail threshold, against ``delta`` plus a binomial slack of ``n_sd``
    standard deviations."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    M = None if xi is None else noise_multiplier_constant(V, xi, C)
    thr = finite_class_bound(V.size, V.n, C, delta, M)
    draws = offset_draws(V, C, reps, seed, xi, 1.0)
    freq = float(np.mean(draws >= thr))
    slack = n_sd * math.sqrt(delta * (1 - delta) / reps)
    return TailCheck(thr, freq, slack, delta, reps)


# -- localisation ----------------------------------------------------------

@dataclass(frozen=True)
class LocalizedSegments:
    """Segment family with population second moments.

    ``family`` holds values on the sample; ``pop_gram`` the population Gram
    matrix of the rows of ``family.U`` (e.g. from a finite-support law).
    """

    family: SegmentFamily
    pop_gram: np.ndarray

    @property
    def n(self) -> int:
        return self.family.n

    def pop_coefficients(self):
        return self.family.quadratic_coefficients(self.pop_gram)

    def sup(self, W: np.ndarray, C: float, coef: float, r: float | None = None) -> np.ndarray:
        if r is None:
            return _segment_sup_batch(self.family, W, C, coef)
        lo, hi, feas = _segment_intervals(*self.pop_coefficients(), r)
        return _segment_sup_batch(self.family, W, C, coef, lo, hi, feas)


@dataclass(frozen=True)
class LocalizedLinear:
    """Linear class with known population covariance of the covariates."""

    cls: LinearClass
    cov: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.cls.n

    def _whitened(self):
        if "eig" not in self._cache:
            Lc = np.linalg.cholesky(np.asarray(self.cov, dtype=float))
            Linv = linalg.solve_triangular(Lc, np.eye(Lc.shape[0]), lower=True)
            G = self.cls.gram()
            Gt = Linv @ G @ Linv.T
            g, Q = np.linalg.eigh((Gt + Gt.T) / 2)
            self._cache["eig"] = (Linv, g, Q)
        return self._cache["eig"]

    def sup(self, W: np.ndarray, C: float, coef: float, r: float | None = None) -> np.ndarray:
        X = self.cls.features
        n = X.shape[0]
        if r is None:
            return np.atleast_1d(offset_sup_linear(self.cls, W, C, None, coef))
        Linv, g, Q = self._whitened()
        c = (W @ X) @ Linv.T @ Q
        cg = C * g
        if np.any(cg <= 0):
            raise ValueError("restricted linear supremum needs a nonsingular Gram matrix")
        r2 = r * r

        def norm2(mu):
            return np.sum((coef * c / (2 * (cg + mu[:, None]))) ** 2, axis=1)

        mu = np.zeros(c.shape[0])
        active = norm2(mu) > r2
        if np.any(active):
            ca = c[active]
            m = np.zeros(ca.shape[0])
            for _ in range(200):
                den = cg + m[:, None]
                u2 = np.sum((coef * ca / (2 * den)) ** 2, axis=1)
                du2 = -np.sum(coef**2 * ca**2 / (2 * den**3), axis=1)
                nrm = np.sqrt(u2)
                phi = 1.0 / nrm - 1.0 / r
                dphi = -0.5 * du2 / (u2 * nrm)
                step = phi / dphi
                m_new = np.maximum(m - step, 0.0)
                done = np.abs(m_new - m) <= 1e-15 * (1.0 + m_new)
                m = m_new
                if np.all(done):
                    break
            mu[active] = m
        u = coef * c / (2 * (cg + mu[:, None]))
        return np.sum(coef * c * u - cg * u * u, axis=1) / n


@dataclass(frozen=True)
class CriticalRadiusResult:
    r: float
    kappa: float
    delta: float
    prob_estimate_at_r: float
    bisection_trace: list

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "kappa": self.kappa,
            "delta": self.delta,
            "prob_estimate_at_r": self.prob_estimate_at_r,
            "bisection_trace": [[float(a), float(b)] for a, b in self.bisection_trace],
        }


class BracketError(ValueError):
    """The radius bracket does not contain the crossing."""


def _local_prob(H, r, kappa, C, coef, xi, reps, rng) -> float:
    hits = 0
    for start in range(0, reps, _CHUNK):
        m = min(_CHUNK, reps - start)
        W = _weights(rademacher(rng, (m, H.n)), xi)
        s = H.sup(W, C, coef, r)
        hits += int(np.sum(s <= kappa * r * r * (1 + 1e-12)))
    return hits / reps


def critical_radius(H, kappa: float, delta: float, C: float, reps: int,
                    r_bracket: tuple[float, float], seed: int = 0, xi=None,
                    coef: float = 2.0, rtol: float = 1e-3,
                    max_steps: int = 80) -> CriticalRadiusResult:
    """Smallest radius r with P(localised supremum <= kappa r^2) >= 1 - delta.

    ``H`` is a :class:`LocalizedSegments` or :class:`LocalizedLinear`; the
    ball is taken in the population norm. Each evaluation uses fresh draws
    from a seed spawned off ``seed``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    lo, hi = map(float, r_bracket)
    if not 0 <= lo < hi:
        raise ValueError("need 0 <= r_lo < r_hi")
    seeds = np.random.SeedSequence(seed).spawn(max_steps + 2)
    trace = []

    def prob(r, i):
        p = _local_prob(H, r, kappa, C, coef, xi, reps, np.random.default_rng(seeds[i]))
        trace.append((r, p))
        return p

    p_lo = prob(lo, 0)
    if p_lo >= 1 - delta:
        return CriticalRadiusResult(lo, kappa, delta, p_lo, trace)
    p_hi = prob(hi, 1)
    if p_hi < 1 - delta:
        raise BracketError(f"P = {p_hi:.4f} < 1 - delta at r_hi = {hi}")
    step = 2
    while hi - lo > rtol * hi and step < max_steps + 2:
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        p_mid = prob(mid, step)
        step += 1
        if p_mid >= 1 - delta:
            hi, p_hi = mid, p_mid
        else:
            lo = mid
    return CriticalRadiusResult(hi, kappa, delta, p_hi, trace)


@dataclass(frozen=True)
class RestrictionCheck:
    frequency: float
    reps: int
    r: float
    max_gap: float


def restriction_identity(H, r: float, C: float, reps: int, seed: int, xi=None,
                         coef: float = 2.0, rtol: float = 1e-9) -> RestrictionCheck:
    """Fraction of draws in which the unrestricted supremum equals the
    supremum over the population r-ball."""
    rng = np.random.default_rng(seed)
    equal = 0
    gap = 0.0
    for start in range(0, reps, _CHUNK):
        m = min(_CHUNK, reps - start)
        W = _weights(rademacher(rng, (m, H.n)), xi)
        full = H.sup(W, C, coef, None)
        loc = H.sup(W, C, coef, r)
        d = full - loc
        equal += int(np.sum(d <= rtol * np.maximum(1.0, np.abs(full)) + 1e-15))
        gap = max(gap, float(np.max(d)))
    return RestrictionCheck(equal / reps, reps, r, gap)


# -- lower isometry --------------------------------------------------------

@dataclass(frozen=True)
class FiniteSupportLaw:
    """Covariate law uniform or weighted on ``m`` support points."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (pts.shape[0],) or np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("probs must be a probability vector over the support")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", p)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.m, size=n, p=self.probs)


@dataclass(frozen=True)
class GaussianLaw:
    """Centred Gaussian covariates with covariance ``cov``."""

    cov: np.ndarray

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cov = np.asarray(self.cov, dtype=float)
        return rng.standard_normal((n, cov.shape[0])) @ np.linalg.cholesky(cov).T


def _ratio_min_segments(e, p, tol=1e-12):
    """Min over lam in [0,1] of e(lam)/p(lam) per segment, with
    e = e0 + 2 e1 lam + e2 lam^2 and p likewise; segments with p == 0 are skipped."""
    e0, e1, e2 = e
    p0, p1, p2 = p
    scale = np.maximum(np.maximum(np.abs(p0), np.abs(p2)), 1e-300)
    q2 = e2 * p1 - e1 * p2
    q1 = e2 * p0 - e0 * p2
    q0 = e1 * p0 - e0 * p1
    K = e0.shape[0]
    cands = [np.zeros(K), np.ones(K)]
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = q1 * q1 - 4 * q2 * q0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(q2) > 1e-300
        r1 = np.where(quad, (-q1 - sq) / (2 * q2), -q0 / q1)
        r2 = np.where(quad, (-q1 + sq) / (2 * q2), np.nan)
    cands += [r1, r2]
    best = np.full(K, np.inf)
    for lam in cands:
        lam = np.where(np.isfinite(lam) & (lam >= 0) & (lam <= 1), lam, np.nan)
        pv = p0 + 2 * lam * p1 + lam * lam * p2
        ev = e0 + 2 * lam * e1 + lam * lam * e2
        ok = np.isfinite(lam) & (pv > tol * scale)
        ratio = np.where(ok, ev / np.where(ok, pv, 1.0), np.inf)
        best = np.minimum(best, ratio)
    return best


def isometry_ratio(cls, law, sample) -> float:
    """Exact ``inf_{h != 0} E_n h^2 / E h^2`` for one design.

    ``cls`` is a dictionary or segment family evaluated on the support of a
    :class:`FiniteSupportLaw` (``sample`` = drawn support indices), or a
    linear class under a :class:`GaussianLaw` (``sample`` = n x p covariates).
    """
    if isinstance(law, GaussianLaw):
        X = np.asarray(sample, dtype=float)
        S_hat = X.T @ X / X.shape[0]
        return float(linalg.eigh(S_hat, np.asarray(law.cov, dtype=float), eigvals_only=True)[0])
    idx = np.asarray(sample)
    if isinstance(cls, FiniteDictionary):
        V = cls.values
        pop = V**2 @ law.probs
        emp = np.mean(V[:, idx] ** 2, axis=1)
        nz = pop > 1e-14 * max(1.0, pop.max())
        if not np.any(nz):
            raise ValueError("class contains only the zero function")
        return float(np.min(emp[nz] / pop[nz]))
    fam = _as_segments(cls)
    pop = fam.quadratic_coefficients(fam.gram(law.probs))
    emp = fam.take(idx).quadratic_coefficients()
    if np.all(np.maximum(pop[0], pop[2]) <= 0):
        raise ValueError("class contains only the zero function")
    return float(np.min(_ratio_min_segments(emp, pop)))


@dataclass(frozen=True)
class IsometryReport:
    """``eta_hats[t] = 1 - inf ratio`` in trial t; ``eta_hat`` is their median."""

    eta_hat: float
    eta_hats: np.ndarray
    n: int
    trials: int
    eta: float
    fraction_satisfying: float


def isometry_check(cls, law, eta: float, trials: int, n: int, seed: int = 0) -> IsometryReport:
    """Fraction of designs of size n on which the lower isometry event
    ``inf_h E_n h^2 / E h^2 >= 1 - eta`` holds."""
    rng = np.random.default_rng(seed)
    etas = np.empty(trials)
    for t in range(trials):
        if isinstance(law, GaussianLaw):
            smp = law.sample(n, rng)
        else:
            smp = law.sample_indices(n, rng)
        etas[t] = 1.0 - isometry_ratio(cls, law, smp)
    frac = float(np.mean(etas <= eta))
    return IsometryReport(float(np.median(etas)), etas, n, trials, eta, frac)


def fourth_moment_ratio(fam: SegmentFamily, probs: np.ndarray, grid: int = 101) -> float:
    """``sup_h E h^4 / (E h^2)^2`` over a lambda grid (family on the support)."""
    lam = np.linspace(0.0, 1.0, grid)
    best = 0.0
    p, q, r, s = fam.index.T
    A = fam.U[p] - fam.U[q]
    B = fam.U[r] - fam.U[s]
    for l in lam:
        h = A + l * B
        m2 = h**2 @ probs
        m4 = h**4 @ probs
        ok = m2 > 1e-14
        if np.any(ok):
            best = max(best, float(np.max(m4[ok] / m2[ok] ** 2)))
    return best
