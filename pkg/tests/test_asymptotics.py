import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from unethical_odds.asymptotics import (
    RedGreenModel,
    Regime,
    advantage_limit,
    classify_limit,
    khintchine_constants,
    limiting_pu_pareto,
    odds_ratio,
    pu_from_odds,
    split_counts,
    upsilon_star,
)
from unethical_odds.distributions import Exponential, Gaussian, Lognormal, Pareto, StudentT
from unethical_odds.errors import DomainError

probs = st.floats(min_value=1e-6, max_value=1 - 1e-6)


def test_odds_ratio_examples():
    assert odds_ratio(0.1, 0.1) == pytest.approx(1.0)
    assert odds_ratio(0.345, 0.05) == pytest.approx(10.0, rel=0.01)
    assert odds_ratio(0.0917, 0.01) == pytest.approx(10.0, rel=0.01)
    for bad in (0.0, 1.0):
        with pytest.raises(DomainError):
            odds_ratio(bad, 0.1)
        with pytest.raises(DomainError):
            odds_ratio(0.3, bad)


def test_pu_from_odds_examples():
    assert pu_from_odds(1.0, 0.1) == pytest.approx(0.1, abs=1e-15)
    assert pu_from_odds(10, 0.05) == pytest.approx(0.3448, abs=1e-4)
    assert pu_from_odds(10, 0.01) == pytest.approx(0.0917, abs=1e-4)
    with pytest.raises(DomainError):
        pu_from_odds(0.0, 0.1)


@given(u=st.floats(min_value=1e-3, max_value=1e3), eta=probs)
def test_odds_round_trip(u, eta):
    p = pu_from_odds(u, eta)
    if 0 < p < 1:
        assert odds_ratio(p, eta) == pytest.approx(u, rel=1e-8)


@given(p=probs, eta=probs)
def test_pu_round_trip(p, eta):
    assert pu_from_odds(odds_ratio(p, eta), eta) == pytest.approx(p, rel=1e-9, abs=1e-15)


def test_khintchine_examples():
    for xi in (-0.3, 0.0, 0.5, 2.0):
        a, b = khintchine_constants(0.5, xi)
        assert a == pytest.approx(1.0) and b == pytest.approx(0.0, abs=1e-15)
    a, b = khintchine_constants(0.1, 0.0)
    assert a == 1.0 and b == pytest.approx(math.log(1 / 9)) and b == pytest.approx(-2.1972, abs=1e-4)
    a, b = khintchine_constants(0.1, 0.5)
    assert a == pytest.approx(1 / 3) and b == pytest.approx(-4 / 3)


@pytest.mark.parametrize("xi", [1e-9, -1e-9, 1e-6, -3e-5, 9.9e-5, 1e-4, 1e-3])
def test_khintchine_continuous_at_zero(xi):
    eta = 0.1
    L = math.log(eta / (1 - eta))
    _, b = khintchine_constants(eta, xi)
    exact = math.expm1(xi * L) / xi
    if abs(xi) < 1e-8:
        assert b == L and abs(b - exact) < 1e-8 and abs(b - L) < 1e-6
    else:
        assert b == pytest.approx(exact, rel=1e-12)


def test_upsilon_star_examples():
    assert upsilon_star(0.0, 7) == 1.0
    assert 1.40 <= upsilon_star(0.05, 7) <= 1.41
    assert 17.0 <= upsilon_star(0.5, 7) <= 17.2
    with pytest.raises(DomainError):
        upsilon_star(-0.1, 7)
    with pytest.raises(DomainError):
        upsilon_star(0.1, 0)


@given(g1=st.floats(0.001, 2), g2=st.floats(0.001, 2), nu=st.floats(0.5, 30))
def test_upsilon_star_monotone(g1, g2, nu):
    lo, hi = sorted((g1, g2))
    if hi > lo * (1 + 1e-9):
        assert upsilon_star(hi, nu) > upsilon_star(lo, nu)
        assert upsilon_star(lo, nu + 1) > upsilon_star(lo, nu)


def test_limiting_pu_examples():
    assert limiting_pu_pareto(0.1, 0.0, 12) == 0.1
    assert limiting_pu_pareto(0.1, 0.2, 12) == pytest.approx(0.4977, abs=1e-4)
    assert limiting_pu_pareto(0.1, 0.5, 7) == pytest.approx(0.65499, abs=1e-5)


@pytest.mark.parametrize("eta", [0.01, 0.1, 0.5, 0.9])
@pytest.mark.parametrize("gamma", [0.0, 0.05, 0.2, 1.0])
@pytest.mark.parametrize("nu", [1.0, 3.0, 7.0, 12.0])
def test_limiting_pu_consistent_with_odds(eta, gamma, nu):
    assert abs(limiting_pu_pareto(eta, gamma, nu) - pu_from_odds(upsilon_star(gamma, nu), eta)) < 1e-12


def test_model_validation_and_counts():
    with pytest.raises(DomainError):
        RedGreenModel(Gaussian(), 0.0)
    with pytest.raises(DomainError):
        RedGreenModel(Gaussian(), 0.1, delta=-1)
    assert split_counts(0.1, 10_000) == (1000, 9000)
    assert split_counts(0.15, 10) == (2, 8)
    with pytest.raises(DomainError):
        split_counts(0.01, 10)


@pytest.mark.parametrize("base", [Gaussian(), Lognormal(), Exponential(), Pareto(3), StudentT(12)], ids=str)
def test_advantage_zero_without_advantage(base):
    a = advantage_limit(RedGreenModel(base, 0.1), 10_000)
    assert a.value == 0.0 and a.limit == 0.0 and not a.diverges


def test_advantage_limits():
    a = advantage_limit(RedGreenModel(Exponential(), 0.1, 0.5, 0.0), 10_000)
    assert a.value == pytest.approx(0.5) and a.limit == 0.5 and not a.diverges
    assert advantage_limit(RedGreenModel(Gaussian(), 0.1, 0.5, 0.0), 10_000).diverges
    assert advantage_limit(RedGreenModel(Exponential(), 0.1, 0.0, 0.2), 10_000).diverges
    ln = advantage_limit(RedGreenModel(Lognormal(), 0.1, 0.5, 0.0), 10**6)
    assert not ln.diverges and ln.limit == 0.0 and 0 < ln.value < 0.5
    with pytest.raises(DomainError):
        advantage_limit(RedGreenModel(Gaussian(), 0.1, 0.5), 9)


@pytest.mark.parametrize("nu", [3.0, 7.0])
def test_pareto_advantage_converges_to_closed_form(nu):
    limit = 0.3 * nu * (1 / 9) ** (1 / nu)
    # with delta = 0 the Pareto constants make the ratio exact at every S
    a = advantage_limit(RedGreenModel(Pareto(nu), 0.1, 0.0, 0.3), 10**6)
    assert a.limit == pytest.approx(limit) and a.value == pytest.approx(limit, rel=1e-12)
    # delta / a_n decays like S^(-1/nu)
    gaps = [advantage_limit(RedGreenModel(Pareto(nu), 0.1, 0.5, 0.3), S).value - limit for S in (10**4, 10**8, 10**12)]
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_gaussian_advantage_grows():
    vals = [advantage_limit(RedGreenModel(Gaussian(), 0.1, 0.5, 0.0), S).value for S in (10**3, 10**5, 10**8)]
    assert vals[0] < vals[1] < vals[2]


def test_classification_examples():
    assert classify_limit(RedGreenModel(Gaussian(), 0.1, 0.5, 0.0)).regime is Regime.RED_DOMINATES
    assert classify_limit(RedGreenModel(Gaussian(), 0.1, 0.0, 0.2)).regime is Regime.RED_DOMINATES
    assert classify_limit(RedGreenModel(Lognormal(), 0.1, 0.5, 0.0)).regime is Regime.NEUTRAL
    assert classify_limit(RedGreenModel(Lognormal(), 0.1, 0.0, 0.1)).regime is Regime.RED_DOMINATES
    assert classify_limit(RedGreenModel(Exponential(), 0.1, 0.0, 0.1)).regime is Regime.RED_DOMINATES
    c = classify_limit(RedGreenModel(Pareto(7), 0.1, 0.0, 0.5))
    assert c.regime is Regime.FINITE_ODDS and c.upsilon_star == pytest.approx(17.0859375)
    assert c.pu_limit == pytest.approx(limiting_pu_pareto(0.1, 0.5, 7))
    c = classify_limit(RedGreenModel(StudentT(12), 0.1, 0.5, 0.0))
    assert c.regime is Regime.NEUTRAL and c.upsilon_star == 1.0 and c.pu_limit == 0.1


@pytest.mark.parametrize("base", [Gaussian(), Lognormal(), Exponential(), Pareto(3), StudentT(12)], ids=str)
def test_neutral_without_advantage(base):
    assert classify_limit(RedGreenModel(base, 0.2)).regime is Regime.NEUTRAL


def test_exponential_delta_only_has_finite_odds():
    # Gumbel maxima shifted by delta: odds scale by exp(delta)
    c = classify_limit(RedGreenModel(Exponential(), 0.1, 0.5, 0.0))
    assert c.regime is Regime.FINITE_ODDS
    assert c.upsilon_star == pytest.approx(math.exp(0.5))
