"""Data model: design samples, function classes and empirical geometry.

Every function is represented only through its values on a fixed set of
points, so a class member is a length-``n`` vector and all geometry lives
in ``R^n`` with the normalised inner product ``<f, g>_n = mean(f * g)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

ArrayLike = Union[np.ndarray, Sequence[float], "EvaluatedFunction"]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EvaluatedFunction:
    """A function known only through its values on the design."""

    v: np.ndarray

    def __post_init__(self):
        v = _frozen(np.ravel(self.v))
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        object.__setattr__(self, "v", v)

    def __len__(self) -> int:
        return self.v.shape[0]

    def norm(self) -> float:
        return empirical_norm(self.v)

    def inner(self, other: ArrayLike) -> float:
        return empirical_inner(self.v, other)


def values(f: ArrayLike) -> np.ndarray:
    """Return the value vector of ``f`` as a float array."""
    if isinstance(f, EvaluatedFunction):
        return f.v
    return np.asarray(f, dtype=float)


def empirical_norm(f: ArrayLike) -> float:
    """sqrt(mean(f_i^2))."""
    v = values(f)
    return float(np.sqrt(np.mean(v * v)))


def empirical_inner(f: ArrayLike, g: ArrayLike) -> float:
    """mean(f_i * g_i)."""
    a, b = values(f), values(g)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(a * b))


def empirical_distance(f: ArrayLike, g: ArrayLike) -> float:
    """Empirical l2 distance d_n(f, g)."""
    return empirical_norm(values(f) - values(g))


@dataclass(frozen=True)
class DesignSample:
    """Covariates ``x`` (n x d), responses ``y`` and optional truth.

    ``fstar`` holds the best-in-class function on the design and ``xi`` the
    residuals ``y - fstar``; ``xi`` is computed once and stored.
    """

    x: np.ndarray
    y: np.ndarray
    fstar: np.ndarray | None = None
    xi: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.ravel(np.asarray(self.y, dtype=float))
        n = y.shape[0]
        if n < 1:
            raise ValueError("sample must contain at least one point")
        if x.shape[0] != n:
            raise ValueError(f"x has {x.shape[0]} rows but y has {n} entries")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        if self.fstar is None:
            if self.xi is not None:
                raise ValueError("xi given without fstar")
            return
        fstar = np.ravel(np.asarray(self.fstar, dtype=float))
        if fstar.shape != (n,):
            raise ValueError("fstar must have one value per design point")
        if self.xi is None:
            xi = y - fstar
        else:
            xi = np.ravel(np.asarray(self.xi, dtype=float))
            if not np.array_equal(xi, y - fstar):
                raise ValueError("xi must equal y - fstar exactly")
        object.__setattr__(self, "fstar", _frozen(fstar))
        object.__setattr__(self, "xi", _frozen(xi))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.fstar is not None


@dataclass(frozen=True)
class FiniteDictionary:
    """N functions given by their values on n points (row j is f_j)."""

    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("dictionary needs at least one row")
        if not np.all(np.isfinite(v)):
            raise ValueError("dictionary rows must be finite")
        labels = tuple(self.labels) if len(self.labels) else tuple(range(v.shape[0]))
        if len(labels) != v.shape[0]:
            raise ValueError("one label per row required")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def max_norm(self) -> float:
        return float(np.sqrt(np.max(np.mean(self.values**2, axis=1))))

    def in_unit_ball(self, tol: float = 1e-12) -> bool:
        """True when every member has empirical norm at most one."""
        return self.max_norm() <= 1.0 + tol

    def take(self, columns: np.ndarray) -> "FiniteDictionary":
        """Restrict to a subset (or resampling) of the points."""
        return FiniteDictionary(self.values[:, np.asarray(columns)], self.labels)


@dataclass(frozen=True)
class LinearClass:
    """Linear functions x -> x^T beta, beta in R^p, on a fixed design."""

    features: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("features must be an n x p matrix with p >= 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", _frozen(X))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def gram(self) -> np.ndarray:
        X = self.features
        return X.T @ X


@dataclass(frozen=True)
class SegmentFamily:
    """Union of segments ``{a_k + lam * b_k : lam in [0, 1]}``.

    Segments are encoded by four row indices into ``U``:
    ``a = U[p] - U[q]`` and ``b = U[r] - U[s]``. Working from ``U`` keeps all
    inner products available through the small Gram matrix of its rows, so
    families with N^3 segments never materialise N^3 vectors.
    """

    U: np.ndarray
    index: np.ndarray
    kind: str = "segments"

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2:
            raise ValueError("U must be 2-d")
        idx = np.asarray(self.index, dtype=np.intp)
        if idx.ndim != 2 or idx.shape[1] != 4:
            raise ValueError("index must be K x 4")
        if idx.size and (idx.min() < 0 or idx.max() >= U.shape[0]):
            raise ValueError("segment index out of range")
        object.__setattr__(self, "U", _frozen(U))
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "index", idx)

    @property
    def n(self) -> int:
        return self.U.shape[1]

    @property
    def n_segments(self) -> int:
        return self.index.shape[0]

    def endpoints(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        p, q, r, s = self.index[k]
        return self.U[p] - self.U[q], self.U[r] - self.U[s]

    def member(self, k: int, lam: float) -> np.ndarray:
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        a, b = self.endpoints(k)
        return a + lam * b

    def take(self, columns: np.ndarray) -> "SegmentFamily":
        return SegmentFamily(self.U[:, np.asarray(columns)], self.index, self.kind)

    def gram(self, weights: np.ndarray | None = None) -> np.ndarray:
        """Weighted Gram matrix of the rows of U (default weights 1/n)."""
        if weights is None:
            return self.U @ self.U.T / self.n
        return (self.U * np.asarray(weights, dtype=float)) @ self.U.T

    def quadratic_coefficients(self, gram: np.ndarray | None = None):
        """Per-segment (|a|^2, <a, b>, |b|^2) under ``gram``."""
        G = self.gram() if gram is None else gram
        p, q, r, s = self.index.T
        aa = G[p, p] - 2 * G[p, q] + G[q, q]
        bb = G[r, r] - 2 * G[r, s] + G[s, s]
        ab = G[p, r] - G[p, s] - G[q, r] + G[q, s]
        return aa, ab, np.maximum(bb, 0.0)

    def dense_sample(self, lambdas: np.ndarray) -> np.ndarray:
        """All members at the given lambdas, shape (K * L, n)."""
        lam = np.asarray(lambdas, dtype=float)
        p, q, r, s = self.index.T
        A = self.U[p] - self.U[q]
        B = self.U[r] - self.U[s]
        return (A[:, None, :] + lam[None, :, None] * B[:, None, :]).reshape(-1, self.n)


@dataclass(frozen=True)
class StarHullClass:
    """Star hull {lam * g + (1 - lam) * f : f in base, lam in [0, 1]}."""

    base: FiniteDictionary
    center: np.ndarray

    def __post_init__(self):
        c = _frozen(np.ravel(values(self.center)))
        if c.shape[0] != self.base.n:
            raise ValueError("center length must match the base dictionary")
        object.__setattr__(self, "center", c)

    @property
    def n(self) -> int:
        return self.base.n

    def segments(self) -> SegmentFamily:
        # member = f_j + lam * (g - f_j); rows: base..., center, zero
        N = self.base.size
        U = np.vstack([self.base.values, self.center, np.zeros(self.n)])
        j = np.arange(N)
        idx = np.column_stack([j, np.full(N, N + 1), np.full(N, N), j])
        return SegmentFamily(U, idx, kind="star_hull")


FunctionClass = Union[FiniteDictionary, LinearClass, StarHullClass, SegmentFamily]


def evaluate(cls: FunctionClass, member) -> np.ndarray:
    """Values of one class member on the design.

    ``member`` is a row index (dictionary), a weight vector (linear class) or
    an ``(index, lam)`` pair (star hull or segment family).
    """
    if isinstance(cls, FiniteDictionary):
        j = int(member)
        if not 0 <= j < cls.size:
            raise IndexError(f"index {j} out of range for {cls.size} functions")
        return cls.values[j].copy()
    if isinstance(cls, LinearClass):
        beta = np.ravel(np.asarray(member, dtype=float))
        if beta.shape[0] != cls.p:
            raise ValueError(f"expected {cls.p} weights, got {beta.shape[0]}")
        return cls.features @ beta
    if isinstance(cls, StarHullClass):
        j, lam = member
        j = int(j)
        lam = float(lam)
        if not 0 <= j < cls.base.size:
            raise IndexError(f"index {j} out of range for {cls.base.size} functions")
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        f = cls.base.values[j]
        if lam == 1.0:
            return cls.center.copy()
        if lam == 0.0:
            return f.copy()
        return lam * cls.center + (1.0 - lam) * f
    if isinstance(cls, SegmentFamily):
        k, lam = member
        k = int(k)
        if not 0 <= k < cls.n_segments:
            raise IndexError(f"segment {k} out of range")
        return cls.member(k, float(lam))
    raise TypeError(f"unsupported class type {type(cls).__name__}")


def shifted_star_class(F: FiniteDictionary, f_star: ArrayLike) -> SegmentFamily:
    """The class ``F - f* + star(F - F)``.

    Members are ``(f_j - f*) + lam * (f_k - f_l)`` for all index triples.
    """
    fs = np.ravel(values(f_star))
    if fs.shape[0] != F.n:
        raise ValueError("f_star length must match the dictionary")
    N = F.size
    U = np.vstack([F.values, fs])
    j, k, l = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    idx = np.column_stack(
        [j.ravel(), np.full(N**3, N), k.ravel(), l.ravel()]
    )
    return SegmentFamily(U, idx, kind="shifted_star")


def difference_star_hull(F: FiniteDictionary) -> SegmentFamily:
    """``star(F - F)`` around zero: members ``lam * (f_k - f_l)``.

    Star-shaped around 0, unlike ``F - f* + star(F - F)`` in general.
    """
    N = F.size
    U = np.vstack([F.values, np.zeros(F.n)])
    k, l = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    K = N * N
    idx = np.column_stack([np.full(K, N), np.full(K, N), k.ravel(), l.ravel()])
    return SegmentFamily(U, idx, kind="difference_star")


def zero_class(n: int) -> SegmentFamily:
    """The class {0} as a (degenerate) segment family."""
    return SegmentFamily(np.zeros((1, n)), np.zeros((1, 4), dtype=np.intp), kind="zero")


# -- CSV interchange -------------------------------------------------------

def write_sample_csv(path: str | Path, sample: DesignSample) -> None:
    """Header ``x_1,...,x_d,y[,fstar,xi]``."""
    header = [f"x_{i + 1}" for i in range(sample.d)] + ["y"]
    cols = [sample.x, sample.y[:, None]]
    if sample.has_truth:
        header += ["fstar", "xi"]
        cols += [sample.fstar[:, None], sample.xi[:, None]]
    data = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])


def read_sample_csv(path: str | Path) -> DesignSample:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(v) for v in r] for r in reader if r]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    if "y" not in header:
        raise ValueError(f"{path}: missing 'y' column")
    xcols = [i for i, h in enumerate(header) if h.startswith("x_")]
    y = data[:, header.index("y")]
    fstar = data[:, header.index("fstar")] if "fstar" in header else None
    xi = data[:, header.index("xi")] if "xi" in header and fstar is not None else None
    return DesignSample(data[:, xcols], y, fstar=fstar, xi=xi)


def write_matrix_csv(path: str | Path, M: np.ndarray, prefix: str = "v") -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{prefix}_{i + 1}" for i in range(M.shape[1])])
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path: str | Path) -> np.ndarray:
    """Read a headed numeric CSV matrix."""
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))


def read_dictionary_csv(path: str | Path) -> FiniteDictionary:
    """One dictionary member per row, one column per design point."""
    return FiniteDictionary(read_matrix_csv(path))


def read_linear_csv(path: str | Path) -> LinearClass:
    return LinearClass(read_matrix_csv(path))
