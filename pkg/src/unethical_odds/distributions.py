"""Base return laws with tail-accurate CDFs, quantiles and EVT constants.

Five laws are supported: standard Gaussian, standard lognormal, unit
exponential, Pareto with ``F(x) = 1 - x**-nu`` on ``x > 1``, and Student t
with ``nu`` degrees of freedom.

Every law exposes both lower- and upper-tail forms (``cdf``/``sf``,
``logcdf``/``logsf``, ``quantile``/``isf``).  The Monte Carlo code raises
``F`` to powers as large as 1e9, so it works with ``log F`` and upper-tail
probabilities directly instead of forming ``1 - p`` in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from . import streams

__all__ = [
    "NormalizingConstants",
    "ReturnDistribution",
    "Gaussian",
    "Lognormal",
    "Exponential",
    "Pareto",
    "StudentT",
    "make_distribution",
]


@dataclass(frozen=True)
class NormalizingConstants:
    """Scale ``a_n``, location ``b_n`` and tail index ``xi`` for maxima of ``n`` draws."""

    a_n: float
    b_n: float
    xi: float


def _check_probability(p: np.ndarray, name: str = "p") -> None:
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")


class ReturnDistribution:
    """Common interface; subclasses fill in the law-specific pieces."""

    kind: str = ""
    nu: float | None = None

    # -- law specific -----------------------------------------------------
    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        raise NotImplementedError

    def logpdf(self, x):
        raise NotImplementedError

    def _lower_quantile(self, p):
        """Quantile for ``p <= 0.5``."""
        raise NotImplementedError

    def _upper_quantile(self, q):
        """Quantile ``F^{-1}(1 - q)`` for ``q <= 0.5``."""
        raise NotImplementedError

    @property
    def tail_index(self) -> float:
        raise NotImplementedError

    @property
    def lower_endpoint(self) -> float:
        return -math.inf

    def normalizing_constants(self, n: int) -> NormalizingConstants:
        raise NotImplementedError

    # -- generic ------------------------------------------------------------
    @property
    def label(self) -> str:
        if self.nu is None:
            return self.kind
        return f"{self.kind}({self.nu:g})"

    def pdf(self, x):
        with np.errstate(divide="ignore"):
            return np.exp(self.logpdf(x))

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(x))

    def logcdf(self, x):
        """``log F(x)``, switching to ``log1p(-sf)`` in the upper tail."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            upper = np.log1p(-self.sf(x))
            lower = np.log(self.cdf(x))
        return np.where(self.cdf(x) > 0.5, upper, lower)

    def quantile(self, p):
        """Inverse CDF on (0, 1)."""
        p = np.asarray(p, dtype=float)
        _check_probability(p)
        low = np.minimum(p, 0.5)
        high = np.minimum(1.0 - p, 0.5)
        out = np.where(p <= 0.5, self._lower_quantile(low), self._upper_quantile(high))
        return out[()] if out.ndim == 0 else out

    def isf(self, q):
        """Upper-tail quantile ``F^{-1}(1 - q)`` without forming ``1 - q``."""
        q = np.asarray(q, dtype=float)
        _check_probability(q, "q")
        out = np.where(
            q <= 0.5,
            self._upper_quantile(np.minimum(q, 0.5)),
            self._lower_quantile(np.minimum(1.0 - q, 0.5)),
        )
        return out[()] if out.ndim == 0 else out

    def in_support(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) > self.lower_endpoint

    def reciprocal_hazard(self, x):
        """``(1 - F(x)) / f(x)``, evaluated as ``exp(logsf - logpdf)``."""
        x = np.asarray(x, dtype=float)
        if np.any(~self.in_support(x)):
            raise DomainError(f"x outside the support of {self.label}")
        out = np.exp(self.logsf(x) - self.logpdf(x))
        return out[()] if out.ndim == 0 else out

    def sample(self, n: int, seed: int, stream: str | int = "sample", start: int = 0) -> np.ndarray:
        """``n`` draws by inversion; identical for identical arguments."""
        if n < 1:
            raise DomainError("sample size must be at least 1")
        return self.quantile(streams.uniforms(seed, stream, n, start=start))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({'' if self.nu is None else self.nu})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.nu == other.nu

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.nu))


class Gaussian(ReturnDistribution):
    kind = "gaussian"

    def cdf(self, x):
        return special.ndtr(x)

    def sf(self, x):
        return special.ndtr(-np.asarray(x, dtype=float))

    def logcdf(self, x):
        return special.log_ndtr(x)

    def logsf(self, x):
        return special.log_ndtr(-np.asarray(x, dtype=float))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x - 0.5 * math.log(2.0 * math.pi)

    def _lower_quantile(self, p):
        return special.ndtri(p)

    def _upper_quantile(self, q):
        return -special.ndtri(q)

    @property
    def tail_index(self) -> float:
        return 0.0

    def normalizing_constants(self, n: int) -> NormalizingConstants:
        _check_n(n)
        b = math.sqrt(2.0 * math.log(n))
        return NormalizingConstants(a_n=1.0 / b, b_n=b, xi=0.0)


class Lognormal(ReturnDistribution):
    """``exp(Z)`` with ``Z`` standard Gaussian."""

    kind = "lognormal"

    @property
    def lower_endpoint(self) -> float:
        return 0.0

    def _z(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0.0, np.log(np.where(x > 0.0, x, 1.0)), -np.inf)

    def cdf(self, x):
        return special.ndtr(self._z(x))

    def sf(self, x):
        return special.ndtr(-self._z(x))

    def logcdf(self, x):
        return special.log_ndtr(self._z(x))

    def logsf(self, x):
        return special.log_ndtr(-self._z(x))

    def logpdf(self, x):
        z = self._z(x)
        with np.errstate(invalid="ignore"):
            out = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - z
        return np.where(np.isfinite(z), out, -np.inf)

    def _lower_quantile(self, p):
        return np.exp(special.ndtri(p))

    def _upper_quantile(self, q):
        return np.exp(-special.ndtri(q))

    @property
    def tail_index(self) -> float:
        return 0.0

    def normalizing_constants(self, n: int) -> NormalizingConstants:
        _check_n(n)
        root = math.sqrt(2.0 * math.log(n))
        b = math.exp(root)
        return NormalizingConstants(a_n=b / root, b_n=b, xi=0.0)


class Exponential(ReturnDistribution):
    """Unit-rate exponential on ``x >= 0``."""

    kind = "exponential"

    @property
    def lower_endpoint(self) -> float:
        return 0.0

    def in_support(self, x):
        return np.asarray(x, dtype=float) >= 0.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0.0, -np.expm1(-np.maximum(x, 0.0)), 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0.0, np.exp(-np.maximum(x, 0.0)), 1.0)

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.maximum(x, 0.0)

    def logcdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > 0.0, np.log(-np.expm1(-np.maximum(x, 0.0))), -np.inf)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, -x, -np.inf)

    def _lower_quantile(self, p):
        return -np.log1p(-p)

    def _upper_quantile(self, q):
        return -np.log(q)

    @property
    def tail_index(self) -> float:
        return 0.0

    def normalizing_constants(self, n: int) -> NormalizingConstants:
        _check_n(n)
        return NormalizingConstants(a_n=1.0, b_n=math.log(n), xi=0.0)


class Pareto(ReturnDistribution):
    """``F(x) = 1 - x**-nu`` for ``x > 1``; zero mass and density at or below 1."""

    kind = "pareto"

    def __init__(self, nu: float):
        if not nu > 0:
            raise DomainError("Pareto tail parameter nu must be positive")
        self.nu = float(nu)

    @property
    def lower_endpoint(self) -> float:
        return 1.0

    def _logx(self, x):
        x = np.asarray(x, dtype=float)
        return np.log(np.where(x > 1.0, x, 1.0))

    def logsf(self, x):
        return -self.nu * self._logx(x)

    def sf(self, x):
        return np.exp(self.logsf(x))

    def cdf(self, x):
        return -np.expm1(self.logsf(x))

    def logcdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(-np.expm1(self.logsf(x)))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        out = math.log(self.nu) - (self.nu + 1.0) * self._logx(x)
        return np.where(x > 1.0, out, -np.inf)

    def _lower_quantile(self, p):
        return np.exp(-np.log1p(-p) / self.nu)

    def _upper_quantile(self, q):
        return np.exp(-np.log(q) / self.nu)

    @property
    def tail_index(self) -> float:
        return 1.0 / self.nu

    def normalizing_constants(self, n: int) -> NormalizingConstants:
        _check_n(n)
        b = float(n) ** (1.0 / self.nu)
        return NormalizingConstants(a_n=b / self.nu, b_n=b, xi=1.0 / self.nu)


class StudentT(ReturnDistribution):
    """Student t with ``nu`` degrees of freedom.

    Tail probabilities come from the regularized incomplete beta function,
    ``P(T > x) = I_{nu/(nu+x^2)}(nu/2, 1/2) / 2`` for ``x >= 0``, switching
    to the complementary ``1/2 - I_{x^2/(nu+x^2)}(1/2, nu/2) / 2`` when
    ``x^2 < nu``.  Quantiles
    are found by safeguarded Newton iteration on ``log P(T > x)``, started
    from the incomplete-beta inverse and bracketed so every step stays
    inside a shrinking interval.
    """

    kind = "student_t"
    rtol = 1e-12

    def __init__(self, nu: float):
        if not nu > 0:
            raise DomainError("Student t degrees of freedom must be positive")
        self.nu = float(nu)
        self._logc = (
            special.gammaln((self.nu + 1.0) / 2.0)
            - special.gammaln(self.nu / 2.0)
            - 0.5 * math.log(self.nu * math.pi)
        )

    def _upper_prob(self, ax):
        # P(T > |x|); near 0 the complementary form avoids evaluating I_t at t ~ 1
        x2 = ax * ax
        denom = self.nu + x2
        with np.errstate(invalid="ignore"):
            far = 0.5 * special.betainc(self.nu / 2.0, 0.5, self.nu / denom)
            near = 0.5 - 0.5 * special.betainc(0.5, self.nu / 2.0, x2 / denom)
        return np.where(x2 < self.nu, near, far)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._upper_prob(np.abs(x))
        return np.where(x >= 0.0, tail, 1.0 - tail)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._upper_prob(np.abs(x))
        return np.where(x >= 0.0, 1.0 - tail, tail)

    def logsf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._upper_prob(np.abs(x))
        with np.errstate(divide="ignore"):
            return np.where(x >= 0.0, np.log(tail), np.log1p(-tail))

    def logcdf(self, x):
        x = np.asarray(x, dtype=float)
        tail = self._upper_prob(np.abs(x))
        with np.errstate(divide="ignore"):
            return np.where(x >= 0.0, np.log1p(-tail), np.log(tail))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return self._logc - (self.nu + 1.0) / 2.0 * np.log1p(x * x / self.nu)

    def _initial_upper(self, q):
        a, nu = self.nu / 2.0, self.nu
        x = np.empty_like(q)
        far = q < 0.25
        if np.any(far):
            w = special.betaincinv(a, 0.5, 2.0 * q[far])
            x[far] = np.sqrt(nu * (1.0 - w) / w)
        if np.any(~far):
            v = special.betaincinv(0.5, a, 1.0 - 2.0 * q[~far])
            x[~far] = np.sqrt(nu * v / (1.0 - v))
        return x

    def _upper_quantile(self, q):
        shape = np.shape(q)
        q = np.atleast_1d(np.asarray(q, dtype=float)).ravel()
        out = np.zeros_like(q)
        active = q < 0.5
        if not np.any(active):
            return out.reshape(shape)
        qa = q[active]
        target = np.log(qa)
        x = self._initial_upper(qa)
        lo = np.zeros_like(x)
        hi = np.full_like(x, np.inf)
        todo = np.ones(x.shape, dtype=bool)
        for _ in range(200):
            g = self._logsf_pos(x[todo]) - target[todo]
            # logsf is decreasing: g > 0 means x is below the root
            below = g > 0
            xt = x[todo]
            lo_t = np.where(below, xt, lo[todo])
            hi_t = np.where(below, hi[todo], xt)
            r = np.exp(self._logsf_pos(xt) - self.logpdf(xt))
            step = r * g
            cand = xt + step
            done = (np.abs(step) <= self.rtol * np.abs(xt)) | (g == 0)
            bad = ~done & (~((cand > lo_t) & (cand < hi_t)) | ~np.isfinite(cand))
            bisect = np.where(np.isfinite(hi_t), 0.5 * (lo_t + hi_t), 2.0 * xt + 1.0)
            cand = np.where(bad, bisect, cand)
            x[todo] = cand
            lo[todo] = lo_t
            hi[todo] = hi_t
            idx = np.flatnonzero(todo)
            todo[idx[done]] = False
            if not np.any(todo):
                break
        out[active] = x
        return out.reshape(shape)

    def _logsf_pos(self, x):
        return np.log(self._upper_prob(x))

    def _lower_quantile(self, p):
        return 0.0 - self._upper_quantile(p)

    @property
    def tail_index(self) -> float:
        return 1.0 / self.nu

    def normalizing_constants(self, n: int) -> NormalizingConstants:
        # generic recipe: b_n = F^{-1}(1 - 1/n), a_n = r(b_n)
        _check_n(n)
        b = float(self.isf(1.0 / n))
        return NormalizingConstants(a_n=float(self.reciprocal_hazard(b)), b_n=b, xi=1.0 / self.nu)


def _check_n(n: int) -> None:
    if n < 2:
        raise DomainError("normalizing constants need n >= 2")


_ALIASES = {
    "gaussian": Gaussian,
    "normal": Gaussian,
    "lognormal": Lognormal,
    "exponential": Exponential,
    "pareto": Pareto,
    "student_t": StudentT,
    "t": StudentT,
    "student-t": StudentT,
}


def make_distribution(kind: str, nu: float | None = None) -> ReturnDistribution:
    """Build a law from its name (``normal``, ``lognormal``, ``exponential``, ``pareto``, ``t``)."""
    try:
        cls = _ALIASES[kind.lower()]
    except KeyError:
        raise DomainError(f"unknown distribution {kind!r}; choose from {sorted(_ALIASES)}") from None
    if cls in (Pareto, StudentT):
        if nu is None:
            raise DomainError(f"{kind} needs a tail parameter nu")
        return cls(nu)
    return cls()
