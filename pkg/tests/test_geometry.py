import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offsetrad.core import DesignSample, FiniteDictionary, LinearClass
from offsetrad.estimators import star_estimator, star_fit_values
from offsetrad.geometry import (
    DEFAULT_C,
    audit_geometric_inequality,
    audit_random_instances,
    corollary2_decomposition,
)


def test_default_constant():
    assert DEFAULT_C == pytest.approx(1 / 18)


def test_linear_subspace_pythagorean_equality():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, p = int(rng.integers(3, 30)), int(rng.integers(1, 4))
        X = rng.standard_normal((n, p))
        s = DesignSample(X, rng.standard_normal(n))
        rep = audit_geometric_inequality(LinearClass(X), s, c=1.0)
        assert np.max(np.abs(rep.lhs - rep.rhs_base)) <= 1e-8
        assert rep.violations_at_c == 0


def test_segment_closed_interval_dictionary_holds_at_c_one():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 10))
        a, b = rng.standard_normal((2, n))
        t = np.linspace(0.0, 1.0, 41)
        F = FiniteDictionary(a + t[:, None] * (b - a))
        s = DesignSample(np.zeros((n, 1)), rng.standard_normal(n))
        rep = audit_geometric_inequality(F, s, c=1.0)
        assert rep.violations_at_c == 0


def test_random_nonconvex_instances_have_no_violations():
    N, n, min_ratio, violations = audit_random_instances(2000, seed=11)
    assert violations.sum() == 0
    assert np.all(min_ratio[np.isfinite(min_ratio)] >= DEFAULT_C)
    assert N.min() >= 2 and N.max() <= 6 and n.max() <= 10


def test_min_ratio_ignores_zero_records():
    V = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    rep = audit_geometric_inequality(FiniteDictionary(V), DesignSample(np.zeros((2, 1)), [1.0, 0.0]))
    assert np.isnan(rep.ratio[0]) and np.isnan(rep.ratio[1])
    assert rep.min_ratio == rep.ratio[2]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([-3.0, -0.5, 0.01, 2.0, 40.0]))
def test_min_ratio_scale_equivariance(seed, scale):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((5, 7))
    y = rng.standard_normal(7)
    a = audit_geometric_inequality(FiniteDictionary(V), DesignSample(np.zeros((7, 1)), y), tol=1e-12)
    b = audit_geometric_inequality(FiniteDictionary(scale * V),
                                   DesignSample(np.zeros((7, 1)), scale * y), tol=1e-12 * scale**2)
    assert b.min_ratio == pytest.approx(a.min_ratio, rel=1e-10)


def test_audit_rejects_bad_parameters():
    F = FiniteDictionary(np.eye(2))
    s = DesignSample(np.zeros((2, 1)), [0.0, 1.0])
    with pytest.raises(ValueError):
        audit_geometric_inequality(F, s, c=-1.0)
    with pytest.raises(ValueError):
        audit_geometric_inequality(F, s, tol=0.0)


def test_decomposition_zero_when_fit_is_optimal():
    rng = np.random.default_rng(2)
    fs = rng.standard_normal(10)
    s = DesignSample(np.zeros((10, 1)), fs + rng.standard_normal(10), fstar=fs)
    fe = rng.standard_normal(100)
    e = DesignSample(np.zeros((100, 1)), fe + rng.standard_normal(100), fstar=fe)
    dec = corollary2_decomposition(fs, s, fe, e)
    assert dec.empirical_process == 0 and dec.population_quadratic == 0
    assert dec.empirical_quadratic == 0 and dec.bound == 0 and dec.excess_loss == 0
    assert dec.holds


def test_decomposition_requires_truth():
    s = DesignSample(np.zeros((2, 1)), [0.0, 1.0])
    with pytest.raises(ValueError):
        corollary2_decomposition(np.zeros(2), s, np.zeros(2), s)


def test_decomposition_bounds_linear_excess_loss():
    rng = np.random.default_rng(3)
    beta = np.array([1.0, -0.5])
    for _ in range(5):
        X = rng.standard_normal((50, 2))
        s = DesignSample(X, X @ beta + rng.standard_normal(50), fstar=X @ beta)
        Xe = rng.standard_normal((1_000_000, 2))
        e = DesignSample(Xe, Xe @ beta + rng.standard_normal(Xe.shape[0]), fstar=Xe @ beta)
        fit = star_estimator(LinearClass(X), s)
        dec = corollary2_decomposition(fit.f_hat, s, Xe @ fit.g_hat, e)
        assert dec.holds


def test_decomposition_bounds_misspecified_finite_excess_loss():
    rng = np.random.default_rng(4)
    m = 40
    D = rng.uniform(-1, 1, (6, m))
    reg = np.sin(np.linspace(0, 3, m))
    jstar = int(np.argmin(np.mean((D - reg) ** 2, axis=1)))
    for _ in range(10):
        idx = rng.integers(0, m, 30)
        s = DesignSample(idx[:, None], reg[idx] + 0.3 * rng.standard_normal(30), fstar=D[jstar, idx])
        fit = star_estimator(FiniteDictionary(D[:, idx]), s)
        ide = rng.integers(0, m, 200_000)
        e = DesignSample(ide[:, None], reg[ide] + 0.3 * rng.standard_normal(ide.size),
                         fstar=D[jstar, ide])
        dec = corollary2_decomposition(fit.f_hat, s, star_fit_values(fit, D)[ide], e)
        assert dec.holds
