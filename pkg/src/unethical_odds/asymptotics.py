"""Closed-form large-S behaviour of the red/green maximum race.

Red returns are ``delta + (1 + gamma) * Z`` and green returns are ``Z`` with
``Z`` drawn from a common base law; a fraction ``eta`` of the ``S``
strategies is red.  As ``S`` grows, the probability that the best strategy
is red either settles at a finite value (Pareto-type tails), tends to one,
or stays at ``eta``.

When the two limiting variables have equal support but different tail
indexes, the one with the larger index wins with probability one; that
case is outside the location/scale model handled here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .distributions import (
    Exponential,
    Gaussian,
    Lognormal,
    Pareto,
    ReturnDistribution,
    StudentT,
)
from .errors import DomainError

__all__ = [
    "RedGreenModel",
    "Regime",
    "LimitClassification",
    "AdvantageLimit",
    "odds_ratio",
    "pu_from_odds",
    "khintchine_constants",
    "upsilon_star",
    "limiting_pu_pareto",
    "advantage_limit",
    "classify_limit",
    "split_counts",
]

XI_ZERO = 1e-8
XI_SERIES = 1e-4


@dataclass(frozen=True)
class RedGreenModel:
    """Base law plus the red share ``eta``, mean advantage ``delta`` and volatility inflation ``gamma``."""

    base: ReturnDistribution
    eta: float
    delta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise DomainError("eta must lie in (0, 1)")
        if self.delta < 0 or self.gamma < 0:
            raise DomainError("delta and gamma must be non-negative")

    @property
    def fat_tailed(self) -> bool:
        return isinstance(self.base, (Pareto, StudentT))


def split_counts(eta: float, S: int) -> tuple[int, int]:
    """Red and green counts ``(m, n)`` with ``m = round(eta * S)``."""
    m = int(round(eta * S))
    n = int(S) - m
    if m < 1 or n < 1:
        raise DomainError(f"S={S} with eta={eta} leaves an empty red or green set")
    return m, n


def odds_ratio(p_u: float, eta: float) -> float:
    """Odds of a red choice divided by the odds under uniform random choice."""
    if not 0.0 < p_u < 1.0:
        raise DomainError("p_u must lie in (0, 1)")
    if not 0.0 < eta < 1.0:
        raise DomainError("eta must lie in (0, 1)")
    return (p_u / (1.0 - p_u)) / (eta / (1.0 - eta))


def pu_from_odds(upsilon: float, eta: float) -> float:
    """Probability of a red choice implied by an odds ratio ``upsilon``."""
    if not upsilon > 0:
        raise DomainError("upsilon must be positive")
    if not 0.0 < eta < 1.0:
        raise DomainError("eta must lie in (0, 1)")
    w = upsilon * eta / (1.0 - eta)
    return w / (1.0 + w)


def khintchine_constants(eta: float, xi: float) -> tuple[float, float]:
    """Limits ``alpha = lim a_m/a_n`` and ``beta = lim (b_m - b_n)/a_n`` for ``m/n = eta/(1-eta)``.

    ``beta`` is continuous at ``xi = 0``, where it equals ``log(eta/(1-eta))``;
    a short series replaces the ratio for small ``|xi|``.
    """
    if not 0.0 < eta < 1.0:
        raise DomainError("eta must lie in (0, 1)")
    L = math.log(eta / (1.0 - eta))
    alpha = math.exp(xi * L)
    if abs(xi) < XI_ZERO:
        beta = L
    elif abs(xi) < XI_SERIES:
        beta = L * (1.0 + xi * L / 2.0 + (xi * L) ** 2 / 6.0)
    else:
        beta = math.expm1(xi * L) / xi
    return alpha, beta


def upsilon_star(gamma: float, nu: float) -> float:
    """Limiting odds ratio ``(1 + gamma)**nu`` for Pareto-type tails."""
    if gamma < 0:
        raise DomainError("gamma must be non-negative")
    if not nu > 0:
        raise DomainError("nu must be positive")
    return (1.0 + gamma) ** nu


def limiting_pu_pareto(eta: float, gamma: float, nu: float) -> float:
    """Large-S probability that red wins when tails are Pareto with index ``nu``."""
    if not 0.0 < eta < 1.0:
        raise DomainError("eta must lie in (0, 1)")
    g = upsilon_star(gamma, nu)
    return eta * g / (1.0 - eta + eta * g)


@dataclass(frozen=True)
class AdvantageLimit:
    """``(delta + gamma * b_m) / a_n`` at a given S and its large-S limit.

    ``limit`` is None exactly when ``diverges`` is True.
    """

    value: float
    limit: float | None
    diverges: bool


def advantage_limit(model: RedGreenModel, S: int) -> AdvantageLimit:
    if S < 10:
        raise DomainError("advantage_limit needs S >= 10")
    m, n = split_counts(model.eta, S)
    cm = model.base.normalizing_constants(max(m, 2))
    cn = model.base.normalizing_constants(n)
    value = (model.delta + model.gamma * cm.b_n) / cn.a_n
    d, g = model.delta, model.gamma
    if d == 0 and g == 0:
        return AdvantageLimit(0.0, 0.0, False)
    base = model.base
    if isinstance(base, Gaussian):
        return AdvantageLimit(value, None, True)
    if isinstance(base, (Lognormal, Exponential)):
        if g > 0:
            return AdvantageLimit(value, None, True)
        # lognormal a_n grows without bound, so delta / a_n -> 0
        return AdvantageLimit(value, d if isinstance(base, Exponential) else 0.0, False)
    # Pareto-type: delta / a_n -> 0 and b_m / a_n -> nu * alpha_eta
    alpha, _ = khintchine_constants(model.eta, base.tail_index)
    return AdvantageLimit(value, g * base.nu * alpha, False)


class Regime(str, Enum):
    FINITE_ODDS = "finite_odds"
    RED_DOMINATES = "red_dominates"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class LimitClassification:
    """Large-S regime; ``pu_limit``/``upsilon_star`` are set only for finite odds."""

    regime: Regime
    reason: str
    pu_limit: float | None = None
    upsilon_star: float | None = None


def classify_limit(model: RedGreenModel) -> LimitClassification:
    base, d, g, eta = model.base, model.delta, model.gamma, model.eta
    if d == 0 and g == 0:
        return LimitClassification(Regime.NEUTRAL, "no red advantage: red and green are identical")
    if isinstance(base, Gaussian):
        return LimitClassification(
            Regime.RED_DOMINATES, "Gaussian maxima: a_n -> 0 so any advantage diverges"
        )
    if isinstance(base, Lognormal):
        if g > 0:
            return LimitClassification(
                Regime.RED_DOMINATES, "lognormal maxima: b_m / a_n diverges when gamma > 0"
            )
        return LimitClassification(
            Regime.NEUTRAL, "lognormal maxima: a_n -> infinity washes out delta when gamma = 0"
        )
    if isinstance(base, Exponential):
        if g > 0:
            return LimitClassification(
                Regime.RED_DOMINATES, "exponential maxima: gamma * log S diverges"
            )
        # Gumbel limits shifted by delta: Pr(X - Y < beta + delta), X - Y logistic
        ups = math.exp(d)
        return LimitClassification(
            Regime.FINITE_ODDS,
            "exponential maxima: advantage stays finite (delta) when gamma = 0",
            pu_from_odds(ups, eta),
            ups,
        )
    ups = upsilon_star(g, base.nu)
    if g == 0:
        return LimitClassification(
            Regime.NEUTRAL, "Pareto-type tails: delta / a_n -> 0, odds ratio tends to 1", eta, 1.0
        )
    return LimitClassification(
        Regime.FINITE_ODDS,
        "Pareto-type tails: Frechet limits give odds ratio (1 + gamma)^nu",
        limiting_pu_pareto(eta, g, base.nu),
        ups,
    )
