"""Exhaustive evaluation of the offset-complexity lower bound on minimax regret.

The hard distributions put X uniform on m = (1 + c) n design points and set
Y = eps_X for a sign vector eps. Under a uniform prior on eps the Bayes
estimator is available in closed form: after seeing the labels on the set I
of observed points, the posterior mean of Y is eps on I and 0 elsewhere, so
the Bayes response maximises (1/m) sum_j (2 mu_j g_j - g_j^2) over G. The
Bayes regret is a lower bound on the minimax regret over estimators in G.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..core import FiniteDictionary, SegmentFamily, shifted_star_class
from ..offset import _segment_sup_batch, offset_sup_finite

MAX_SIGN_PATTERNS = 1 << 16


class InstanceTooLarge(ValueError):
    """The exhaustive enumeration would exceed the sign-pattern cap."""


def sign_patterns(k: int) -> np.ndarray:
    """All 2^k vectors in {-1, +1}^k, shape (2^k, k)."""
    if k > 16:
        raise InstanceTooLarge(f"2^{k} sign patterns exceed the cap of 2^16")
    if k == 0:
        return np.zeros((1, 0))
    bits = (np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1
    return 2.0 * bits - 1.0


def sum_star_class(F: FiniteDictionary) -> SegmentFamily:
    """``G = F + star(F - F)``: members ``f_j + lam (f_k - f_l)``."""
    return shifted_star_class(F, np.zeros(F.n))


def offset_rademacher_design(F: FiniteDictionary) -> float:
    """Exact ``E_eps sup_f (1/m) sum 2 eps_i f_i - f_i^2`` on the given design."""
    E = sign_patterns(F.n)
    return float(np.mean(offset_sup_finite(F, E, C=1.0, coef=2.0)))


def offset_rademacher_tuples(G: SegmentFamily, k: int) -> tuple[float, tuple]:
    """Sup over size-k multisets of domain points of the exact offset complexity.

    Returns the value and a maximising multiset.
    """
    E = sign_patterns(k)
    best, arg = -np.inf, ()
    for t in itertools.combinations_with_replacement(range(G.n), k):
        v = float(np.mean(_segment_sup_batch(G.take(np.array(t)), E, 1.0, 2.0)))
        if v > best:
            best, arg = v, t
    return best, arg


def _observed_sets(m: int, n: int) -> tuple[list[tuple], np.ndarray]:
    counts = Counter(frozenset(s) for s in itertools.product(range(m), repeat=n))
    sets = sorted((tuple(sorted(s)) for s in counts), key=lambda s: (len(s), s))
    probs = np.array([counts[frozenset(s)] for s in sets], dtype=float) / float(m) ** n
    return sets, probs


@dataclass(frozen=True)
class MinimaxRecord:
    n: int
    c: int
    m: int
    N: int
    rad_design: float
    rad_g: float
    lower_bound: float
    bayes_regret: float
    bayes_rule_worst_regret: float
    grid_slack: float
    lambda_grid: int | None

    @property
    def holds(self) -> bool:
        return self.bayes_regret >= self.lower_bound - self.grid_slack - 1e-12

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["holds"] = self.holds
        return d


def _bayes_responses(G: SegmentFamily, M: np.ndarray, lambda_grid: int | None):
    """Maximiser of (1/m) sum 2 mu g - g^2 over G for each row mu of M.

    Returns (value, member values) with member values of shape (R, m).
    """
    if lambda_grid is None:
        val, k, lam = _segment_sup_batch(G, M, 1.0, 2.0, return_argmax=True)
        p, q, r, s = G.index[k].T
        members = (G.U[p] - G.U[q]) + lam[:, None] * (G.U[r] - G.U[s])
        return val, members
    V = G.dense_sample(np.linspace(0.0, 1.0, lambda_grid))
    obj = (2.0 * M @ V.T - np.sum(V * V, axis=1)[None, :]) / G.n
    j = np.argmax(obj, axis=1)
    return obj[np.arange(len(j)), j], V[j]


def minimax_lower_bound(F: FiniteDictionary, n: int, c: int = 1,
                        lambda_grid: int | None = None) -> MinimaxRecord:
    """Compare the Bayes regret on the hard family with the offset lower bound.

    ``F`` holds values on the m = (1 + c) n domain points. With
    ``lambda_grid`` set, estimator responses are restricted to members of G
    at that many equispaced lambdas; shrinking the estimator set can only
    raise the minimax value, so the reported slack stays 0.
    """
    if c < 1 or int(c) != c:
        raise ValueError("c must be a positive integer")
    m = (1 + c) * n
    if F.n != m:
        raise ValueError(f"F must be evaluated on (1 + c) n = {m} points")
    if m > 16:
        raise InstanceTooLarge(f"2^{m} sign patterns exceed the cap of 2^16")
    G = sum_star_class(F)
    rad_design = offset_rademacher_design(F)
    rad_g, _ = offset_rademacher_tuples(G, c * n)
    lower = rad_design - c / (1 + c) * rad_g

    E = sign_patterns(m)
    sets, probs = _observed_sets(m, n)
    best_f = offset_sup_finite(F, E, C=1.0, coef=2.0)
    # expected risk (minus 1) of the Bayes rule for every true eps
    risk = np.zeros(E.shape[0])
    bayes_gain = 0.0
    for I, pI in zip(sets, probs):
        I = np.array(I)
        sub = sign_patterns(len(I))
        M = np.zeros((sub.shape[0], m))
        M[:, I] = sub
        val, g = _bayes_responses(G, M, lambda_grid)
        bayes_gain += pI * float(np.mean(val))
        # map each full eps to the row of its restriction to I
        bits = ((E[:, I] + 1) / 2).astype(np.int64)
        row = bits @ (1 << np.arange(len(I)))
        gg = g[row]
        risk += pI * np.sum(gg * gg - 2.0 * gg * E, axis=1) / m
    regret = risk + best_f
    return MinimaxRecord(
        n=n, c=int(c), m=m, N=F.size,
        rad_design=rad_design, rad_g=rad_g, lower_bound=lower,
        bayes_regret=float(rad_design - bayes_gain),
        bayes_rule_worst_regret=float(np.max(regret)),
        grid_slack=0.0, lambda_grid=lambda_grid,
    )
