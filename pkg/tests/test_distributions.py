import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from unethical_odds.distributions import (
    Exponential,
    Gaussian,
    Lognormal,
    Pareto,
    StudentT,
    make_distribution,
)
from unethical_odds.errors import DomainError

ALL = [Gaussian(), Lognormal(), Exponential(), Pareto(7), Pareto(2), StudentT(12), StudentT(3)]

SCIPY = {
    "gaussian": stats.norm(),
    "lognormal": stats.lognorm(1.0),
    "exponential": stats.expon(),
    "pareto(7)": stats.pareto(7),
    "pareto(2)": stats.pareto(2),
    "student_t(12)": stats.t(12),
    "student_t(3)": stats.t(3),
}


def _t_quantile_oracle(p, nu, dps=40):
    """Bisection on the regularized incomplete-beta CDF in high precision."""
    mp.mp.dps = dps
    nu = mp.mpf(nu)

    def cdf(x):
        t = nu / (nu + x * x)
        tail = mp.betainc(nu / 2, mp.mpf(1) / 2, 0, t, regularized=True) / 2
        return 1 - tail if x > 0 else tail

    lo, hi = mp.mpf(-1e15), mp.mpf(1e15)
    target = mp.mpf(p)
    for _ in range(260):
        mid = (lo + hi) / 2
        if cdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


@pytest.mark.parametrize("d", ALL, ids=lambda d: d.label)
def test_cdf_sf_logpdf_match_scipy(d):
    ref = SCIPY[d.label]
    x = ref.ppf(np.linspace(0.001, 0.999, 41))
    np.testing.assert_allclose(d.cdf(x), ref.cdf(x), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(d.sf(x), ref.sf(x), rtol=1e-10, atol=1e-15)
    np.testing.assert_allclose(d.logpdf(x), ref.logpdf(x), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("d", ALL, ids=lambda d: d.label)
def test_quantile_round_trip(d):
    p = np.unique(np.concatenate([np.logspace(-12, -1, 12), np.linspace(0.05, 0.95, 19), 1 - np.logspace(-1, -12, 12)]))
    x = d.quantile(p)
    assert np.all(np.diff(x) > 0)
    # floating x carries relative error eps, which moves F by about eps * |x| * f(x)
    slack = 4 * np.finfo(float).eps * np.abs(x) * d.pdf(x)
    lower = p <= 0.5
    assert np.all(np.abs(d.cdf(x[lower]) - p[lower]) <= 1e-9 * p[lower] + slack[lower])
    assert np.all(np.abs(d.sf(x[~lower]) - (1 - p[~lower])) <= 1e-8 * (1 - p[~lower]) + slack[~lower])


@pytest.mark.parametrize("d", ALL, ids=lambda d: d.label)
def test_isf_reaches_deep_tail(d):
    q = np.logspace(-300, -1, 30)
    x = d.isf(q)
    assert np.all(np.isfinite(x))
    np.testing.assert_allclose(d.sf(x), q, rtol=1e-8)


@pytest.mark.parametrize("d", ALL, ids=lambda d: d.label)
@settings(max_examples=60, deadline=None)
@given(p=st.floats(min_value=1e-10, max_value=1 - 1e-10))
def test_quantile_inverts_cdf_property(d, p):
    x = d.quantile(p)
    assert d.in_support(x)
    assert abs(d.quantile(d.cdf(x)) - x) <= 1e-8 * max(1.0, abs(x))


def test_cdf_trivial_values():
    assert Exponential().cdf(0.0) == 0.0
    assert Pareto(1).cdf(2.0) == pytest.approx(0.5, abs=1e-15)
    assert Gaussian().cdf(0.0) == 0.5
    assert Pareto(3).cdf(0.5) == 0.0 and Pareto(3).pdf(0.5) == 0.0
    assert Pareto(3).cdf(1.0) == 0.0


def test_quantile_examples():
    assert Pareto(2).quantile(0.75) == pytest.approx(2.0, rel=1e-14)
    n = 1000
    assert Exponential().quantile(1 - 1 / n) == pytest.approx(math.log(n), rel=1e-12)
    assert Gaussian().quantile(0.5) == 0.0 and StudentT(12).quantile(0.5) == 0.0


@pytest.mark.parametrize("p", [0.975, 0.5 + 1e-6, 0.6, 0.9, 1 - 1e-6, 1 - 1e-12, 0.025, 1e-9])
@pytest.mark.parametrize("nu", [12, 3, 1.5])
def test_student_t_quantile_high_precision_oracle(p, nu):
    ref = _t_quantile_oracle(p, nu)
    assert StudentT(nu).quantile(p) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_rejects_outside_unit_interval(p):
    with pytest.raises(DomainError):
        Gaussian().quantile(p)


def test_reciprocal_hazard():
    x = np.array([0.0, 0.5, 3.0, 40.0])
    np.testing.assert_allclose(Exponential().reciprocal_hazard(x), 1.0, rtol=1e-12)
    xs = np.array([1.5, 10.0, 1e3])
    np.testing.assert_allclose(Pareto(7).reciprocal_hazard(xs), xs / 7, rtol=1e-12)
    mp.mp.dps = 30
    mills = mp.quad(lambda t: mp.npdf(t), [3, mp.inf]) / mp.npdf(3)
    assert Gaussian().reciprocal_hazard(3.0) == pytest.approx(float(mills), rel=1e-10)
    assert float(mills) == pytest.approx(0.30459, abs=1e-5)


@pytest.mark.parametrize("d,x", [(Exponential(), -1.0), (Pareto(2), 0.9), (Lognormal(), 0.0)])
def test_reciprocal_hazard_outside_support(d, x):
    with pytest.raises(DomainError):
        d.reciprocal_hazard(x)


def test_normalizing_constants_closed_forms():
    c = Exponential().normalizing_constants(20)
    assert (c.b_n, c.a_n, c.xi) == (pytest.approx(math.log(20)), 1.0, 0.0)
    assert c.b_n == pytest.approx(2.9957, abs=1e-4)
    c = Pareto(2).normalizing_constants(100)
    assert (c.b_n, c.a_n, c.xi) == (pytest.approx(10.0), pytest.approx(5.0), 0.5)
    c = Gaussian().normalizing_constants(10**6)
    assert c.b_n == pytest.approx(math.sqrt(2 * math.log(1e6)), rel=1e-14)
    assert c.b_n == pytest.approx(5.2565, abs=1e-4)
    assert c.a_n == pytest.approx(0.19024, abs=1e-5)
    c = Lognormal().normalizing_constants(1000)
    r = math.sqrt(2 * math.log(1000))
    assert c.b_n == pytest.approx(math.exp(r)) and c.a_n == pytest.approx(math.exp(r) / r)


@pytest.mark.parametrize("n", [10, 1000, 10**6, 10**9])
def test_student_t_generic_recipe(n):
    d = StudentT(12)
    c = d.normalizing_constants(n)
    assert abs(d.cdf(c.b_n) - (1 - 1 / n)) < 1e-9
    assert c.a_n == pytest.approx(float(d.reciprocal_hazard(c.b_n)), rel=1e-12)
    assert c.xi == pytest.approx(1 / 12)


@pytest.mark.parametrize("d", ALL, ids=lambda d: d.label)
def test_normalizing_constants_invariants(d):
    c = d.normalizing_constants(500)
    assert c.a_n > 0
    assert c.xi in (0.0, pytest.approx(1 / d.nu if d.nu else 0.0))
    with pytest.raises(DomainError):
        d.normalizing_constants(1)


@pytest.mark.parametrize("d", [Pareto(7), Exponential()], ids=lambda d: d.label)
def test_reciprocal_hazard_derivative_tends_to_xi(d):
    b = d.normalizing_constants(10**6).b_n
    h = 1e-4 * b
    deriv = (d.reciprocal_hazard(b + h) - d.reciprocal_hazard(b - h)) / (2 * h)
    assert abs(deriv - d.tail_index) < 0.05


def test_sample_mean_and_determinism():
    x = Exponential().sample(10**6, seed=11)
    assert abs(x.mean() - 1.0) < 0.005
    np.testing.assert_array_equal(Exponential().sample(1000, seed=3), Exponential().sample(1000, seed=3))
    assert not np.array_equal(Exponential().sample(1000, seed=3), Exponential().sample(1000, seed=4))
    with pytest.raises(DomainError):
        Gaussian().sample(0, seed=1)


def test_sample_prefix_consistent_across_blocks():
    full = Gaussian().sample(20000, seed=5)
    tail = Gaussian().sample(5000, seed=5, start=15000)
    np.testing.assert_array_equal(full[15000:], tail)


@pytest.mark.parametrize("d", ALL, ids=lambda d: d.label)
def test_sample_ks_distance(d):
    x = d.sample(10**5, seed=2024)
    assert stats.kstest(x, SCIPY[d.label].cdf).statistic < 0.01


def test_make_distribution_aliases():
    assert make_distribution("normal") == Gaussian()
    assert make_distribution("t", 12) == StudentT(12)
    assert make_distribution("Student-T", 5) == StudentT(5)
    with pytest.raises(DomainError):
        make_distribution("pareto")
    with pytest.raises(DomainError):
        make_distribution("cauchy")
    with pytest.raises(DomainError):
        Pareto(0)
    assert StudentT(12) != Pareto(12) and hash(Pareto(7)) == hash(Pareto(7.0))
