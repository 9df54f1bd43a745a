import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from offsetrad.core import (
    FiniteDictionary,
    LinearClass,
    difference_star_hull,
    shifted_star_class,
    zero_class,
)
from offsetrad.offset import (
    BracketError,
    FiniteSupportLaw,
    GaussianLaw,
    LocalizedLinear,
    LocalizedSegments,
    SingularGramWarning,
    critical_radius,
    finite_class_bound,
    isometry_check,
    isometry_ratio,
    offset_argmax_star,
    offset_draws,
    offset_mc,
    offset_sup,
    offset_sup_finite,
    offset_sup_linear,
    offset_sup_linear_unit,
    offset_sup_star,
    offset_tail_check,
    parse_convention,
    rademacher,
    restriction_identity,
)


def _objective(h, w, C, coef):
    h = np.atleast_2d(h)
    n = h.shape[1]
    return (coef * h @ w - C * np.sum(h * h, axis=1)) / n


def test_parse_convention():
    assert parse_convention("1eps") == (1.0, False)
    assert parse_convention("2eps-noise") == (2.0, True)
    with pytest.raises(ValueError):
        parse_convention("3eps")


def test_finite_zero_vector():
    assert offset_sup_finite(np.zeros((1, 6)), np.ones(6), 1.0) == 0.0


def test_finite_matches_row_scan():
    rng = np.random.default_rng(0)
    V = rng.standard_normal((3, 5))
    eps = rademacher(rng, 5)
    xi = rng.standard_normal(5)
    for coef in (1.0, 2.0):
        scan = max((coef * np.dot(eps * xi, v) - 0.7 * np.dot(v, v)) / 5 for v in V)
        assert offset_sup_finite(V, eps, 0.7, xi, coef) == pytest.approx(scan, rel=1e-14)


def test_finite_batch_matches_single_draws():
    rng = np.random.default_rng(1)
    V = rng.standard_normal((4, 9))
    E = rademacher(rng, (20, 9))
    batch = offset_sup_finite(V, E, 0.5)
    single = [offset_sup_finite(V, e, 0.5) for e in E]
    np.testing.assert_allclose(batch, single, rtol=0, atol=1e-15)


def test_finite_expectation_bound_example():
    rng = np.random.default_rng(2)
    V = FiniteDictionary(rng.uniform(-1, 1, (4, 100)))
    est = offset_mc(V, 1.0, 20_000, seed=3)
    assert est.mean <= math.log(4) / 200 + 3 * est.stderr
    assert finite_class_bound(4, 100, 1.0) == pytest.approx(0.006931, abs=1e-6)


def test_star_zero_class():
    assert offset_sup_star(zero_class(5), np.ones(5), 1.0) == 0.0


def _random_shifted(rng, N=3, n=6):
    V = rng.standard_normal((N, n))
    return shifted_star_class(FiniteDictionary(V), V[0])


def test_star_dominates_endpoint_slices():
    rng = np.random.default_rng(4)
    H = _random_shifted(rng)
    for _ in range(20):
        eps = rademacher(rng, H.n)
        ends = H.dense_sample(np.array([0.0, 1.0]))
        assert offset_sup_star(H, eps, 1.0) >= _objective(ends, eps, 1.0, 1.0).max() - 1e-12


def test_star_matches_lambda_grid():
    rng = np.random.default_rng(5)
    lam = np.linspace(0.0, 1.0, 100_001)
    for coef in (1.0, 2.0):
        H = _random_shifted(rng, N=3, n=5)
        eps = rademacher(rng, 5)
        xi = rng.standard_normal(5)
        w = eps * xi
        p, q, r, s = H.index.T
        A = H.U[p] - H.U[q]
        B = H.U[r] - H.U[s]
        best = -np.inf
        for a, b in zip(A, B):
            pts = a[None, :] + lam[:, None] * b[None, :]
            best = max(best, _objective(pts, w, 0.8, coef).max())
        assert offset_sup_star(H, eps, 0.8, xi, coef) == pytest.approx(best, abs=1e-8)
        val, k, l = offset_argmax_star(H, eps, 0.8, xi, coef)
        assert _objective(H.member(k, l), w, 0.8, coef)[0] == pytest.approx(val, abs=1e-12)


def test_linear_zero_linear_term():
    X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    eps = np.array([1.0, -1.0, 1.0, -1.0])
    assert offset_sup_linear(LinearClass(X), eps, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_linear_matches_numeric_maximization():
    rng = np.random.default_rng(6)
    for coef in (1.0, 2.0):
        X = rng.standard_normal((20, 3))
        w = rademacher(rng, 20) * rng.standard_normal(20)

        def neg(beta):
            h = X @ beta
            return -(coef * h @ w - 0.3 * h @ h) / 20

        def grad(beta):
            h = X @ beta
            return -(coef * X.T @ w - 0.6 * X.T @ h) / 20

        res = optimize.minimize(neg, np.zeros(3), jac=grad, method="BFGS",
                                options={"gtol": 1e-12})
        exact = offset_sup_linear(LinearClass(X), w, 0.3, None, coef)
        assert exact == pytest.approx(-res.fun, rel=1e-6)


def test_linear_unit_form_agrees():
    rng = np.random.default_rng(7)
    for _ in range(10):
        X = rng.standard_normal((15, 4))
        E = rademacher(rng, (5, 15))
        C = float(rng.uniform(0.1, 3))
        np.testing.assert_allclose(offset_sup_linear(LinearClass(X), E, C, None, 2.0),
                                   offset_sup_linear_unit(LinearClass(X), E, C / 4), rtol=1e-10)


def test_linear_trace_identity():
    rng = np.random.default_rng(8)
    n, C = 30, 0.5
    X = rng.standard_normal((n, 3))
    xi = rng.standard_normal(n)
    L = LinearClass(X)
    G = X.T @ X
    Hm = (X * xi[:, None] ** 2).T @ X
    target = np.trace(np.linalg.solve(G, Hm)) / (C * n)
    est = offset_mc(L, C, 40_000, seed=9, xi=xi, coef=2.0)
    assert abs(est.mean - target) <= 3 * est.stderr


def test_singular_gram_is_flagged():
    a = np.arange(1.0, 6.0)[:, None]
    X = np.hstack([a, a])
    with pytest.warns(SingularGramWarning):
        v = offset_sup_linear(LinearClass(X), np.ones(5), 1.0)
    assert v == pytest.approx(offset_sup_linear(LinearClass(a), np.ones(5), 1.0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["finite", "star", "linear"]))
def test_sup_dominates_sampled_members(seed, kind):
    rng = np.random.default_rng(seed)
    n = 8
    eps = rademacher(rng, n)
    C = float(rng.uniform(0.1, 2))
    if kind == "finite":
        V = rng.standard_normal((5, n))
        cls, members = FiniteDictionary(V), V
    elif kind == "star":
        cls = _random_shifted(rng, 3, n)
        k = rng.integers(0, cls.n_segments, 100)
        members = np.array([cls.member(int(j), float(l)) for j, l in zip(k, rng.uniform(0, 1, 100))])
    else:
        X = rng.standard_normal((n, 2))
        cls, members = LinearClass(X), rng.standard_normal((100, 2)) @ X.T
    for coef in (1.0, 2.0):
        sup = offset_sup(cls, eps, C, None, coef)
        assert sup >= _objective(members, eps, C, coef).max() - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["finite", "star", "linear"]))
def test_sup_nonincreasing_in_C(seed, kind):
    rng = np.random.default_rng(seed)
    n = 7
    eps = rademacher(rng, (10, n))
    if kind == "finite":
        cls = FiniteDictionary(rng.standard_normal((4, n)))
    elif kind == "star":
        cls = _random_shifted(rng, 3, n)
    else:
        cls = LinearClass(rng.standard_normal((n, 3)))
    C1, C2 = sorted(rng.uniform(0.05, 3, 2))
    assert np.all(offset_sup(cls, eps, C1) >= offset_sup(cls, eps, C2) - 1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_star_hull_with_zero_has_nonnegative_sup(seed):
    rng = np.random.default_rng(seed)
    H = _random_shifted(rng, 4, 6)
    assert np.all(offset_sup_star(H, rademacher(rng, (20, 6)), 1.0) >= 0.0)


def test_mc_zero_class_and_reproducibility():
    est = offset_mc(FiniteDictionary(np.zeros((1, 5))), 1.0, 100, seed=1)
    assert est.mean == 0.0 and est.stderr == 0.0
    V = FiniteDictionary(np.random.default_rng(0).standard_normal((6, 12)))
    a = offset_draws(V, 1.0, 5000, seed=42)
    b = offset_draws(V, 1.0, 5000, seed=42)
    assert a.tobytes() == b.tobytes()
    est = offset_mc(V, 1.0, 5000, seed=42)
    q = [est.quantiles[k] for k in sorted(est.quantiles)]
    assert q == sorted(q) and est.stderr >= 0
    assert est.to_dict()["multipliers"] == "none"


def test_tail_check_singleton_and_lemma_threshold():
    rng = np.random.default_rng(10)
    one = FiniteDictionary(rng.uniform(-1, 1, (1, 50)))
    assert offset_tail_check(one, 1.0, 4000, 0.5, seed=1).passed
    V = FiniteDictionary(rng.uniform(-1, 1, (16, 200)))
    chk = offset_tail_check(V, 1.0, 10_000, 0.05, seed=2)
    assert chk.passed and chk.threshold == pytest.approx((math.log(16) + math.log(20)) / 400)


def test_tail_check_with_unbounded_noise():
    rng = np.random.default_rng(11)
    V = FiniteDictionary(rng.uniform(-1, 1, (8, 100)))
    xi = rng.standard_t(5, 100)
    chk = offset_tail_check(V, 1.0, 10_000, 0.1, seed=3, xi=xi)
    assert chk.passed


def test_critical_radius_zero_class():
    H = LocalizedSegments(zero_class(6), np.zeros((1, 1)))
    res = critical_radius(H, 0.5, 0.05, 1.0, 200, (1e-4, 1.0), seed=1)
    assert res.r == 1e-4 and res.prob_estimate_at_r == 1.0


def _finite_localized(seed=0, N=4, m=12, n=60):
    rng = np.random.default_rng(seed)
    D = FiniteDictionary(rng.uniform(-1, 1, (N, m)))
    fam = difference_star_hull(D)
    law = FiniteSupportLaw(np.arange(m), np.full(m, 1 / m))
    idx = law.sample_indices(n, rng)
    return LocalizedSegments(fam.take(idx), fam.gram(law.probs)), fam, law, idx


def test_localized_segments_match_grid():
    H, fam, law, idx = _finite_localized()
    rng = np.random.default_rng(1)
    w = rademacher(rng, H.n)
    r = 0.3
    lam = np.linspace(0, 1, 20_001)
    pts_pop = fam.dense_sample(lam)
    pop2 = pts_pop**2 @ law.probs
    pts = H.family.dense_sample(lam)
    vals = _objective(pts, w, 1.0, 2.0)
    best = vals[pop2 <= r * r].max()
    got = H.sup(w[None, :], 1.0, 2.0, r)[0]
    assert got >= best - 1e-12 and got <= best + 1e-4
    assert H.sup(w[None, :], 1.0, 2.0, None)[0] >= got


def test_localized_linear_restricted_sup():
    rng = np.random.default_rng(2)
    cov = np.array([[1.0, 0.3], [0.3, 2.0]])
    X = GaussianLaw(cov).sample(40, rng)
    H = LocalizedLinear(LinearClass(X), cov)
    W = rademacher(rng, (5, 40)) * rng.standard_normal(40)
    r = 0.05
    got = H.sup(W, 1.0, 2.0, r)
    full = H.sup(W, 1.0, 2.0, None)
    Lc = np.linalg.cholesky(cov)
    ang = np.linspace(0, 2 * np.pi, 4001)
    rad = np.linspace(0, r, 201)
    u = (rad[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], -1)[None]).reshape(-1, 2)
    betas = np.linalg.solve(Lc.T, u.T).T
    for i in range(5):
        vals = _objective(betas @ X.T, W[i], 1.0, 2.0)
        assert got[i] >= vals.max() - 1e-12
        assert got[i] <= vals.max() + 1e-6
        assert got[i] <= full[i] + 1e-12


def test_critical_radius_bracket_error_and_restriction():
    H, *_ = _finite_localized(seed=3, n=200)
    with pytest.raises(BracketError):
        critical_radius(H, 1e-6, 0.05, 1.0, 200, (1e-4, 1e-3), seed=1)
    res = critical_radius(H, 0.5, 0.05, 1.0, 1000, (1e-4, 10.0), seed=1)
    assert res.prob_estimate_at_r >= 0.95
    chk = restriction_identity(H, res.r, 1.0, 2000, seed=5)
    assert 0.0 <= chk.frequency <= 1.0
    full = restriction_identity(H, 100.0, 1.0, 500, seed=5)
    assert full.frequency == 1.0


def test_critical_radius_is_reproducible():
    H, *_ = _finite_localized(seed=4)
    a = critical_radius(H, 0.5, 0.1, 1.0, 300, (1e-4, 10.0), seed=8)
    b = critical_radius(H, 0.5, 0.1, 1.0, 300, (1e-4, 10.0), seed=8)
    assert a.to_dict() == b.to_dict()


def test_isometry_linear_matches_eigen_oracle():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((3, 3))
    cov = A @ A.T + np.eye(3)
    law = GaussianLaw(cov)
    X = law.sample(30, rng)
    w, V = np.linalg.eigh(cov)
    root_inv = V @ np.diag(w**-0.5) @ V.T
    oracle = np.linalg.eigvalsh(root_inv @ (X.T @ X / 30) @ root_inv)[0]
    assert isometry_ratio(LinearClass(X), law, X) == pytest.approx(oracle, abs=1e-8)


def test_isometry_finite_large_n_and_zero_class():
    rng = np.random.default_rng(6)
    m = 10
    D = FiniteDictionary(rng.uniform(-1, 1, (5, m)))
    law = FiniteSupportLaw(np.arange(m), np.full(m, 1 / m))
    rep = isometry_check(D, law, eta=0.1, trials=50, n=10_000, seed=1)
    assert rep.fraction_satisfying >= 0.99
    with pytest.raises(ValueError):
        isometry_ratio(FiniteDictionary(np.zeros((2, m))), law, np.arange(m))


def test_isometry_gaussian_diagnostic_runs():
    rep = isometry_check(None, GaussianLaw(np.eye(3)), eta=1 / 72, trials=40, n=30, seed=2)
    assert 0.0 <= rep.fraction_satisfying <= 1.0
    assert rep.eta_hat == float(np.median(rep.eta_hats))


def test_isometry_segment_family_matches_grid():
    H, fam, law, idx = _finite_localized(seed=7, n=25)
    ratio = isometry_ratio(fam, law, idx)
    lam = np.linspace(0, 1, 2001)
    pop = fam.dense_sample(lam) ** 2 @ law.probs
    emp = np.mean(fam.take(idx).dense_sample(lam) ** 2, axis=1)
    ok = pop > 1e-12
    assert ratio <= np.min(emp[ok] / pop[ok]) + 1e-12
    assert ratio >= np.min(emp[ok] / pop[ok]) - 1e-3


def test_no_warning_for_regular_gram():
    X = np.random.default_rng(0).standard_normal((10, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        offset_sup_linear(LinearClass(X), np.ones(10), 1.0)
