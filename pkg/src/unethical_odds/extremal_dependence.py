"""Rank-based extremal dependence and the lag-k extremogram.

``chi(u)`` is the probability that one margin exceeds its ``u``-quantile
given that the other does.  The empirical version counts pairs whose
normalized ranks both exceed ``u`` and divides by the average number of
single-margin exceedances, which is the copula formula
``(1 - 2u + C(u, u)) / (1 - u)`` evaluated at the empirical margins.
Ranks are averaged over ties.

Applied to pairs ``(A(s), A(s + k*delta))`` from a process sampled on a
regular grid, the estimates across ``k`` form an extremogram.  Its decay
to the independence level ``1 - u`` indicates how far apart two strategies
must be before their extremes behave independently.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import streams
from .errors import DataError, DegenerateTiesError, DomainError, NoDecorrelationError

__all__ = [
    "ExtremogramEstimate",
    "InterpolatedProcess",
    "EffectiveCount",
    "SparseLagWarning",
    "chi_at_level",
    "extremogram",
    "extremogram_series",
    "effective_independent_count",
]

MIN_PAIRS = 50
SPARSE_LAG = 500


class SparseLagWarning(UserWarning):
    """Too few pairs at some lag for the estimate to be trusted."""


def _codes(x: np.ndarray) -> np.ndarray:
    """Dense integer ranks; equal values share a code."""
    values, inverse = np.unique(x, return_inverse=True)
    if values.size == 1:
        raise DegenerateTiesError("series is constant; ranks are all tied")
    return inverse.reshape(x.shape).astype(np.int32)


def _exceed(codes: np.ndarray, u: float) -> np.ndarray:
    """Row-wise mask of observations whose average rank exceeds ``u * n``.

    The value at sorted position ``floor(u * n)`` splits each row: larger
    codes always exceed, smaller never do, and ties with it exceed only if
    their shared average rank does.
    """
    n = codes.shape[1]
    T = u * n
    p = min(int(np.floor(T)), n - 1)
    pivot = np.partition(codes, p, axis=1)[:, p : p + 1]
    less = np.count_nonzero(codes < pivot, axis=1)
    tied = codes == pivot
    eq = np.count_nonzero(tied, axis=1)
    pivot_exceeds = (less + (eq + 1) / 2.0 > T)[:, None]
    return (codes > pivot) | (tied & pivot_exceeds)


def _chi_rows(cx: np.ndarray, cy: np.ndarray, u: float) -> np.ndarray:
    ex, ey = _exceed(cx, u), _exceed(cy, u)
    both = np.count_nonzero(ex & ey, axis=1)
    single = 0.5 * (np.count_nonzero(ex, axis=1) + np.count_nonzero(ey, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(single > 0, both / np.where(single > 0, single, 1.0), np.nan)


def chi_at_level(x, y=None, u: float = 0.95) -> float:
    """Empirical ``chi(u)`` from paired observations.

    Parameters
    ----------
    x, y : array_like
        The two margins.  If ``y`` is omitted, ``x`` must be an ``(n, 2)``
        array of pairs.
    u : float
        Quantile level in (0.5, 1).

    Returns
    -------
    float
        Estimate in ``[0, 1]``; 1 for identical margins and about ``1 - u``
        under independence.
    """
    if y is None:
        pairs = np.asarray(x, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise DataError("pairs must have shape (n, 2)")
        x, y = pairs[:, 0], pairs[:, 1]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("x and y must be one-dimensional and of equal length")
    if x.size < MIN_PAIRS:
        raise DataError(f"need at least {MIN_PAIRS} pairs, got {x.size}")
    if not 0.5 < u < 1.0:
        raise DomainError("u must lie in (0.5, 1)")
    cx, cy = _codes(x), _codes(y)
    chi = _chi_rows(cx[None, :], cy[None, :], u)[0]
    if not np.isfinite(chi):
        raise DataError(f"no observation exceeds level u={u}")
    return float(chi)


class _StationaryBootstrap:
    """Circular stationary-bootstrap index rows, shared across lags.

    One uniform per position decides both whether a new block starts there
    (``v < 1/L``) and, rescaled, where it starts.  Restricting the first
    ``n`` columns yields an exact resampling scheme for ``n`` positions, so a
    single draw serves every lag.
    """

    def __init__(self, rng: np.random.Generator, n_max: int, B: int, mean_block: float):
        v = rng.random((B, n_max))
        v[:, 0] /= mean_block
        pos = np.arange(n_max)
        last = np.maximum.accumulate(np.where(v < 1.0 / mean_block, pos, 0), axis=1)
        self._u = np.take_along_axis(v, last, axis=1) * mean_block  # uniform start fraction
        self._offset = (pos - last).astype(np.int64)

    def indices(self, n: int) -> np.ndarray:
        idx = (self._u[:, :n] * n).astype(np.int64)
        idx += self._offset[:, :n]
        idx[idx >= n] -= n
        return idx


@dataclass(frozen=True)
class ExtremogramEstimate:
    u: float
    lags: np.ndarray
    chi: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_pairs: np.ndarray
    domain_length: float

    def as_records(self) -> list[dict]:
        return [
            {"lag": float(l), "chi": float(c), "ci_low": float(lo), "ci_high": float(hi), "n_pairs": int(m)}
            for l, c, lo, hi, m in zip(self.lags, self.chi, self.ci_low, self.ci_high, self.n_pairs)
        ]


@dataclass(frozen=True)
class InterpolatedProcess:
    """Piecewise-linear function through ``knot_values`` at ``s = 0, 1, ..., L``.

    ``offset`` fixes the first grid point; when None a random start in
    ``[0, delta)`` is drawn from the seed passed to :func:`extremogram`.
    """

    knot_values: np.ndarray
    delta: float = 0.1
    offset: float | None = None

    def __post_init__(self):
        knots = np.asarray(self.knot_values, dtype=float)
        object.__setattr__(self, "knot_values", knots)
        if knots.size < 2:
            raise DataError("need at least two knots")
        if not self.delta > 0:
            raise DomainError("delta must be positive")

    @classmethod
    def gaussian(cls, S: int = 1001, seed: int = 0, delta: float = 0.1, offset: float | None = None):
        """``S`` independent standard Gaussian knots."""
        knots = streams.generator(seed, "interpolated-knots").standard_normal(S)
        return cls(knots, delta, offset)

    @property
    def length(self) -> float:
        return float(self.knot_values.size - 1)

    def __call__(self, s):
        return np.interp(s, np.arange(self.knot_values.size), self.knot_values)

    def grid(self, seed: int = 0) -> np.ndarray:
        start = self.offset
        if start is None:
            start = float(streams.generator(seed, "extremogram-offset").random()) * self.delta
        count = int(np.floor((self.length - start) / self.delta + 1e-9)) + 1
        return start + self.delta * np.arange(count)


def extremogram_series(
    values,
    delta: float,
    u: float = 0.95,
    max_lag: int = 50,
    seed: int = 0,
    n_boot: int = 500,
    block_length: float = 10.0,
    domain_length: float | None = None,
) -> ExtremogramEstimate:
    """Extremogram of a series observed on a grid with spacing ``delta``.

    Pointwise 95% intervals come from a stationary block bootstrap over
    pair positions (mean block length ``block_length`` grid steps), with
    ``n_boot`` resamples per lag.
    """
    a = np.asarray(values, dtype=float)
    N = a.size
    if domain_length is None:
        domain_length = delta * (N - 1)
    if max_lag < 1:
        raise DomainError("max_lag must be at least 1")
    if max_lag * delta >= domain_length / 2:
        raise DomainError("max_lag * delta must be below half the domain length")
    if not 0.5 < u < 1.0:
        raise DomainError("u must lie in (0.5, 1)")
    _codes(a)  # rejects constant series

    lags = delta * np.arange(max_lag + 1)
    chi = np.empty(max_lag + 1)
    lo = np.empty(max_lag + 1)
    hi = np.empty(max_lag + 1)
    npairs = np.empty(max_lag + 1, dtype=int)
    chi[0] = lo[0] = hi[0] = 1.0
    npairs[0] = N
    rng = streams.generator(seed, "extremogram-bootstrap")
    boot_rows = _StationaryBootstrap(rng, N - 1, n_boot, block_length)
    for k in range(1, max_lag + 1):
        x, y = a[:-k], a[k:]
        n = x.size
        npairs[k] = n
        if n < SPARSE_LAG:
            warnings.warn(f"only {n} pairs at lag {k}; estimate is unreliable", SparseLagWarning, stacklevel=2)
        chi[k] = chi_at_level(x, y, u)
        cx, cy = _codes(x), _codes(y)
        idx = boot_rows.indices(n)
        boot = _chi_rows(cx[idx], cy[idx], u)
        boot = boot[np.isfinite(boot)]
        lo[k], hi[k] = np.percentile(boot, [2.5, 97.5])
    return ExtremogramEstimate(u, lags, chi, lo, hi, npairs, float(domain_length))


def extremogram(
    proc: InterpolatedProcess,
    u: float = 0.95,
    max_lag: int = 50,
    seed: int = 0,
    n_boot: int = 500,
    block_length: float = 10.0,
) -> ExtremogramEstimate:
    """Evaluate ``proc`` on its grid and estimate ``chi`` at lags ``k * delta``."""
    values = proc(proc.grid(seed))
    return extremogram_series(
        values, proc.delta, u, max_lag, seed, n_boot, block_length, domain_length=proc.length
    )


class EffectiveCount(NamedTuple):
    distance: float
    count: float


def effective_independent_count(est: ExtremogramEstimate, baseline: float | None = None) -> EffectiveCount:
    """First lag whose interval covers the independence level, and how many such spacings fit in the domain."""
    if baseline is None:
        baseline = 1.0 - est.u
    for lag, lo, hi in zip(est.lags[1:], est.ci_low[1:], est.ci_high[1:]):
        if lo <= baseline <= hi:
            return EffectiveCount(float(lag), est.domain_length / float(lag))
    raise NoDecorrelationError(
        f"extremogram stays away from baseline {baseline:g} up to lag {est.lags[-1]:g}"
    )
