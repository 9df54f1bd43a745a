"""Empirical l2 covers and chaining bounds for the offset process.

Covers are built greedily (farthest point first, always seeded with the
zero function), so their sizes are certified upper bounds on covering
numbers, not the minimal ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Dudley integrals with an unbounded entropy start at this fraction of gamma
# when alpha = 0 is requested.
ALPHA_FLOOR = 2.0**-40


@dataclass(frozen=True)
class CoverResult:
    """Centres (rows, zero always included) and the certified radius."""

    scale: float
    centers: np.ndarray
    covered_max_dist: float

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def valid(self) -> bool:
        return self.covered_max_dist <= self.scale + 1e-12

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "size": self.size,
            "covered_max_dist": self.covered_max_dist,
            "centers": self.centers.tolist(),
        }


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    return P


def _dist_to(P: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = P - c[None, :]
    return np.sqrt(np.mean(d * d, axis=1))


def nearest_distance(P: np.ndarray, centers: np.ndarray, block: int = 2048) -> np.ndarray:
    """d_n distance from every row of P to its nearest centre."""
    P = _as_points(P)
    centers = _as_points(centers)
    n = P.shape[1]
    cn = np.sum(centers**2, axis=1)
    out = np.empty(P.shape[0])
    for s in range(0, P.shape[0], block):
        B = P[s:s + block]
        d2 = np.sum(B**2, axis=1)[:, None] + cn[None, :] - 2 * B @ centers.T
        out[s:s + block] = np.sqrt(np.maximum(d2.min(axis=1), 0.0) / n)
    return out


def farthest_point_traversal(points) -> tuple[np.ndarray, np.ndarray]:
    """Greedy traversal starting from the zero function.

    Returns ``(order, radii)``: ``order[k]`` is the input row added as the
    (k+1)-th centre after zero, and ``radii[k]`` is the covering radius of the
    first k+1 centres (zero plus ``order[:k]``). ``radii`` is nonincreasing
    and ends at 0.
    """
    P = _as_points(points)
    d = np.sqrt(np.mean(P * P, axis=1))
    order, radii = [], []
    while True:
        i = int(np.argmax(d))
        radii.append(float(d[i]))
        if d[i] <= 0.0:
            break
        order.append(i)
        d = np.minimum(d, _dist_to(P, P[i]))
    return np.asarray(order, dtype=np.intp), np.asarray(radii)


def greedy_cover(points, delta: float) -> CoverResult:
    """A delta-cover in d_n containing the zero function."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    P = _as_points(points)
    centers = [np.zeros(P.shape[1])]
    d = np.sqrt(np.mean(P * P, axis=1))
    while d.size and d.max() > delta:
        i = int(np.argmax(d))
        centers.append(P[i])
        d = np.minimum(d, _dist_to(P, P[i]))
    C = np.vstack(centers)
    return CoverResult(float(delta), C, float(d.max()) if d.size else 0.0)


class GreedyEntropy:
    """log N(delta) from one greedy traversal of a finite class sample."""

    bounded = True

    def __init__(self, points):
        P = _as_points(points)
        self.n = P.shape[1]
        self.order, self.radii = farthest_point_traversal(P)
        pos = self.radii[self.radii > 0]
        self.min_radius = float(pos.min()) if pos.size else 0.0

    def size(self, delta) -> np.ndarray:
        delta = np.asarray(delta, dtype=float)
        # first k with radii[k] <= delta -> cover of k+1 centres
        k = np.searchsorted(-self.radii, -delta, side="left")
        return k + 1

    def __call__(self, delta):
        return np.log(self.size(delta))


class LipschitzEntropy:
    """Sup-norm covering of 1-Lipschitz functions [0, 1] -> [0, 1].

    Lattice step s = 2 delta / 3 on both axes; piecewise-linear lattice paths
    whose increments lie in {-s, 0, s} approximate every member to within
    1.5 s = delta. Count: (floor(1/s) + 1) * 3^ceil(1/s), plus the zero
    centre. A sup-norm cover is a d_n cover for any design.
    """

    bounded = False

    def __call__(self, delta):
        delta = np.asarray(delta, dtype=float)
        s = 2.0 * delta / 3.0
        with np.errstate(divide="ignore"):
            k = np.ceil(1.0 / s)
            logn = np.log(np.floor(1.0 / s) + 1.0) + k * math.log(3.0)
        logn = np.logaddexp(0.0, logn)
        return np.where(delta >= 1.0, 0.0, logn)


class PowerEntropy:
    """log N(delta) = (scale / delta)^p."""

    bounded = False

    def __init__(self, p: float, scale: float = 1.0):
        self.p = float(p)
        self.scale = float(scale)

    def __call__(self, delta):
        delta = np.asarray(delta, dtype=float)
        return (self.scale / delta) ** self.p


def _trapezoid(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def dudley_integral(entropy: Callable, lo: float, hi: float, rtol: float = 0.005,
                    max_level: int = 14) -> tuple[float, int]:
    """Trapezoid estimate of ``int_lo^hi sqrt(log N(delta)) d delta``.

    Nodes are dyadic in scale (``hi * 2^(-j / m)``); m doubles until two
    successive estimates differ by less than ``rtol``. Returns
    ``(value, nodes used)``.
    """
    if hi <= lo:
        return 0.0, 0
    if lo <= 0:
        raise ValueError("lower limit must be positive")
    octaves = math.log2(hi / lo)
    prev = None
    for level in range(max_level + 1):
        m = 1 << level
        J = max(1, int(math.ceil(octaves * m)))
        x = hi * 2.0 ** (-np.arange(J + 1) / m)
        x[-1] = lo
        x = x[::-1]
        y = np.sqrt(np.maximum(entropy(x), 0.0))
        val = _trapezoid(y, x)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val, x.size
        if prev is not None and val == 0.0 == prev:
            return 0.0, x.size
        prev = val
    return prev, x.size


def _integral(entropy, alpha: float, gamma: float, rtol: float) -> tuple[float, float]:
    """Integral from alpha to gamma; returns (effective alpha, value)."""
    if gamma <= 0 or alpha >= gamma:
        return alpha, 0.0
    if alpha > 0:
        return alpha, dudley_integral(entropy, alpha, gamma, rtol)[0]
    if getattr(entropy, "bounded", False):
        # entropy is constant below the smallest positive traversal radius
        floor = min(entropy.min_radius, gamma)
        if floor <= 0:
            return 0.0, 0.0
        head = floor * math.sqrt(float(entropy(0.0)))
        return 0.0, head + dudley_integral(entropy, floor, gamma, rtol)[0]
    a = gamma * ALPHA_FLOOR
    return a, dudley_integral(entropy, a, gamma, rtol)[0]


@dataclass(frozen=True)
class ChainingBound:
    gamma: float
    alpha: float
    term_finite: float
    term_alpha: float
    term_dudley: float
    n: int
    C: float

    @property
    def total(self) -> float:
        return self.term_finite + self.term_alpha + self.term_dudley

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "term_finite": self.term_finite,
            "term_alpha": self.term_alpha,
            "term_dudley": self.term_dudley,
            "total": self.total,
            "n": self.n,
            "C": self.C,
        }


def _entropy_and_n(sample_or_entropy, n):
    if callable(sample_or_entropy):
        if n is None:
            raise ValueError("n is required with an entropy function")
        return sample_or_entropy, int(n)
    ent = GreedyEntropy(sample_or_entropy)
    return ent, ent.n if n is None else int(n)


def chaining_terms(entropy, n: int, C: float, gamma: float, alpha: float,
                   rtol: float = 0.005) -> ChainingBound:
    a, integral = _integral(entropy, alpha, gamma, rtol)
    return ChainingBound(
        gamma=float(gamma),
        alpha=float(a),
        term_finite=(2.0 / C) * float(entropy(gamma)) / n if gamma > 0 else math.inf,
        term_alpha=4.0 * a,
        term_dudley=12.0 / math.sqrt(n) * integral,
        n=n,
        C=float(C),
    )


def chaining_bound(sample_or_entropy, C: float, gamma_grid, alpha_grid, n: int | None = None,
                   rtol: float = 0.005) -> ChainingBound:
    """Minimise the chaining bound over the (gamma, alpha) grid, alpha <= gamma.

    ``sample_or_entropy`` is a class sample (rows on the design; covers are
    greedy) or a callable ``delta -> log N(delta)`` together with ``n``.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    entropy, n = _entropy_and_n(sample_or_entropy, n)
    best = None
    for g in np.asarray(gamma_grid, dtype=float):
        for a in np.asarray(alpha_grid, dtype=float):
            if a > g:
                continue
            cb = chaining_terms(entropy, n, C, g, a, rtol)
            if best is None or cb.total < best.total:
                best = cb
    if best is None:
        raise ValueError("no admissible (gamma, alpha) pair with alpha <= gamma")
    return best


def star_cover_construct(F_sample, epsilon: float, check_points: int = 10_000) -> CoverResult:
    """Cover of the star hull ``{lam f : f in F, lam in [0,1]}`` at scale 2 epsilon.

    Centres are ``lam_k * c_j`` for an epsilon-cover ``{c_j}`` of F and
    ``lam_k`` on the grid {0, eps, 2 eps, ...} plus 1. Validity is certified on
    ``check_points`` evenly spaced lambdas for every member of F.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    P = _as_points(F_sample)
    norms = np.sqrt(np.mean(P * P, axis=1))
    if np.any(norms > 1.0 + 1e-12):
        raise ValueError(f"members must have empirical norm <= 1 (max {norms.max():.6g})")
    base = greedy_cover(P, epsilon)
    K = int(math.ceil(1.0 / epsilon))
    lam = np.minimum(np.arange(1, K + 1) * epsilon, 1.0)
    lam = np.unique(lam)
    nz = base.centers[np.any(base.centers != 0, axis=1)]
    parts = [np.zeros((1, P.shape[1]))]
    if nz.size:
        parts.append((lam[:, None, None] * nz[None, :, :]).reshape(-1, P.shape[1]))
    centers = np.unique(np.vstack(parts), axis=0)
    grid = np.linspace(0.0, 1.0, check_points)
    worst = 0.0
    for f in P:
        worst = max(worst, float(nearest_distance(grid[:, None] * f[None, :], centers).max()))
    return CoverResult(2.0 * epsilon, centers, worst)


def sum_class_cover(cover_a: CoverResult, cover_b: CoverResult, members_a=None,
                    members_b=None, n_check: int = 1000, seed: int = 0) -> CoverResult:
    """Pairwise sums of centres: a cover of F + F' at the summed scale.

    When member samples are given, validity is certified on ``n_check``
    random sums; otherwise the certificate is the triangle inequality applied
    to the two input certificates.
    """
    A, B = cover_a.centers, cover_b.centers
    centers = np.unique((A[:, None, :] + B[None, :, :]).reshape(-1, A.shape[1]), axis=0)
    scale = cover_a.scale + cover_b.scale
    if members_a is None or members_b is None:
        worst = cover_a.covered_max_dist + cover_b.covered_max_dist
    else:
        Ma, Mb = _as_points(members_a), _as_points(members_b)
        rng = np.random.default_rng(seed)
        i = rng.integers(0, Ma.shape[0], n_check)
        j = rng.integers(0, Mb.shape[0], n_check)
        worst = float(nearest_distance(Ma[i] + Mb[j], centers).max())
    return CoverResult(scale, centers, worst)


def chaining_tail_bound(sample_or_entropy, C: float, gamma: float, u: float,
                        n: int | None = None, alpha_grid=None, rtol: float = 0.005) -> float:
    """High-probability threshold of the chaining lemma at level ``u``:

    ``u * inf_alpha {4 alpha + 12/sqrt(n) int_alpha^gamma sqrt(log N)}
      + (2/C) (log N(gamma) + u) / n``.
    """
    if u <= 0:
        raise ValueError("u must be positive")
    entropy, n = _entropy_and_n(sample_or_entropy, n)
    if alpha_grid is None:
        alpha_grid = np.concatenate([[0.0], gamma * np.geomspace(1e-4, 1.0, 60)])
    inner = math.inf
    for a in np.asarray(alpha_grid, dtype=float):
        if a > gamma:
            continue
        a_eff, integral = _integral(entropy, a, gamma, rtol)
        inner = min(inner, 4.0 * a_eff + 12.0 / math.sqrt(n) * integral)
    return u * inner + (2.0 / C) * (float(entropy(gamma)) + u) / n


def tail_bound_probability(u, c: float) -> np.ndarray:
    """Right-hand side ``2/(1 - e^-2) exp(-c u^2) + exp(-u)``."""
    u = np.asarray(u, dtype=float)
    return 2.0 / (1.0 - math.exp(-2.0)) * np.exp(-c * u * u) + np.exp(-u)


def fit_tail_constant(us, exceedance) -> float:
    """Largest universal constant c for which every observed exceedance
    frequency stays below the tail bound (``inf`` if ``exp(-u)`` alone suffices,
    0 if even c = 0 fails)."""
    us = np.asarray(us, dtype=float)
    fr = np.asarray(exceedance, dtype=float)
    k = 2.0 / (1.0 - math.exp(-2.0))
    c_max = math.inf
    for u, f in zip(us, fr):
        room = f - math.exp(-u)
        if room <= 0:
            continue
        if room >= k:
            return 0.0
        c_max = min(c_max, -math.log(room / k) / (u * u))
    return c_max
