from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

MIN_R2 = 0.95


class RateFitError(RuntimeError):
    """A log-log fit is too poor for its slope to be asserted."""


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    points: tuple

    def check(self, target: float, tol: float, min_r2: float = MIN_R2) -> bool:
        """Whether ``|slope - target| <= tol``; raises when r^2 < min_r2."""
        if not self.r2 >= min_r2:
            raise RateFitError(
                f"r^2 = {self.r2:.4f} < {min_r2} (slope {self.slope:.4f}); "
                f"points: {[(round(a, 3), round(b, 3)) for a, b in self.points]}"
            )
        return abs(self.slope - target) <= tol

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "points": [list(p) for p in self.points],
        }


def fit_rate(ns, metric) -> RateFit:
    """Least-squares line through (log n, log metric)."""
    ns = np.asarray(ns, dtype=float)
    metric = np.asarray(metric, dtype=float)
    if ns.size < 4:
        raise ValueError("a rate fit needs at least 4 points")
    if np.any(metric <= 0):
        raise ValueError("metric must be positive for a log-log fit")
    lx, ly = np.log(ns), np.log(metric)
    res = stats.linregress(lx, ly)
    pts = tuple((float(a), float(b)) for a, b in zip(lx, ly))
    return RateFit(float(res.slope), float(res.intercept), float(res.rvalue**2), pts)
