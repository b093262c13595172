"""Finite-S probability that the best of S strategies is red.

``pu_antithetic`` uses the inversion estimator: the red maximum is drawn
directly as ``F^{-1}(U^{1/m})`` and the exact conditional probability that
all ``n`` green returns fall below the scaled, shifted red maximum,
``F(delta + (1 + gamma) M)^n``, is averaged over ``U`` and its antithetic
partner ``1 - U``.  ``pu_direct`` is a brute-force simulator of all S
returns, drawn with numpy's own samplers so it shares no code path with the
inversion estimator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import streams
from ._parallel import ordered_map
from .asymptotics import RedGreenModel, odds_ratio, split_counts
from .distributions import Exponential, Gaussian, Lognormal, Pareto, StudentT
from .errors import DomainError, NumericError

__all__ = ["PuSimConfig", "PuEstimate", "pu_antithetic", "pu_plain", "pu_direct", "pu_sweep"]

DIRECT_BLOCK = 256


@dataclass(frozen=True)
class PuSimConfig:
    model: RedGreenModel
    S: int
    R: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.R < 2:
            raise DomainError("R must be at least 2")
        split_counts(self.model.eta, self.S)

    @property
    def counts(self) -> tuple[int, int]:
        return split_counts(self.model.eta, self.S)


@dataclass(frozen=True)
class PuEstimate:
    """Estimated ``p_u`` with its odds ratio.

    When ``p_u`` is 0 or 1 the odds ratio is infinite or zero; ``upsilon``
    then holds the bound implied by ``p_u`` lying within ``1/R`` of the
    boundary and ``upsilon_bound`` says which side ("lower" or "upper").
    """

    p_u: float
    upsilon: float
    std_error: float
    method: str
    S: int
    m: int
    n: int
    R: int
    upsilon_bound: str | None = None

    def as_record(self) -> dict:
        return {
            "S": self.S,
            "m": self.m,
            "n": self.n,
            "R": self.R,
            "method": self.method,
            "p_u": self.p_u,
            "upsilon": self.upsilon,
            "std_error": self.std_error,
            "upsilon_bound": self.upsilon_bound or "",
        }


def _odds(p: float, eta: float, R: int) -> tuple[float, str | None]:
    if p >= 1.0:
        return odds_ratio(1.0 - 1.0 / R, eta), "lower"
    if p <= 0.0:
        return odds_ratio(1.0 / R, eta), "upper"
    return odds_ratio(p, eta), None


def _red_beats_green(model: RedGreenModel, m: int, n: int, log_u: np.ndarray) -> np.ndarray:
    """``F(delta + (1 + gamma) M)^n`` with ``M = F^{-1}(U^{1/m})`` given ``log U``."""
    base = model.base
    q = -np.expm1(log_u / m)  # 1 - U^{1/m}, kept exact for tiny values
    M = base.isf(q)
    log_f = base.logcdf(model.delta + (1.0 + model.gamma) * M)
    with np.errstate(under="ignore"):
        return np.exp(n * log_f)


def _antithetic_block(cfg: PuSimConfig, block: int, antithetic: bool = True) -> np.ndarray:
    m, n = cfg.counts
    start = block * streams.BLOCK
    count = min(streams.BLOCK, cfg.R - start)
    u = streams.uniform_block(cfg.seed, "pu_antithetic", block)[:count]
    first = _red_beats_green(cfg.model, m, n, np.log(u))
    if not antithetic:
        return first
    second = _red_beats_green(cfg.model, m, n, np.log1p(-u))
    return 0.5 * (first + second)


def _estimate(cfg: PuSimConfig, antithetic: bool, jobs: int) -> PuEstimate:
    m, n = cfg.counts
    nblocks = -(-cfg.R // streams.BLOCK)
    parts = ordered_map(partial(_antithetic_block, cfg, antithetic=antithetic), range(nblocks), jobs)
    y = np.concatenate(parts)
    if not np.all(np.isfinite(y)):
        raise NumericError(
            f"non-finite F^n for {cfg.model.base.label} at S={cfg.S}; log F could not be evaluated"
        )
    p = math.fsum(y) / y.size
    se = float(np.std(y, ddof=1) / math.sqrt(y.size))
    ups, bound = _odds(p, cfg.model.eta, cfg.R)
    return PuEstimate(p, ups, se, "antithetic" if antithetic else "plain", cfg.S, m, n, cfg.R, bound)


def pu_antithetic(cfg: PuSimConfig, jobs: int = 1) -> PuEstimate:
    """Antithetic inversion estimate of ``Pr(M_R > M_G)``.

    Each of the ``R`` uniforms contributes the average of its two antithetic
    evaluations; ``std_error`` is the standard error of those ``R`` pair
    means.  The result depends only on ``cfg`` (not on ``jobs``).
    """
    return _estimate(cfg, True, jobs)


def pu_plain(cfg: PuSimConfig, jobs: int = 1) -> PuEstimate:
    """The same estimator without the antithetic half; used to measure variance reduction."""
    return _estimate(cfg, False, jobs)


def _native_draws(base, rng: np.random.Generator, shape) -> np.ndarray:
    if isinstance(base, Gaussian):
        return rng.standard_normal(shape)
    if isinstance(base, Lognormal):
        return rng.lognormal(size=shape)
    if isinstance(base, Exponential):
        return rng.standard_exponential(shape)
    if isinstance(base, Pareto):
        return rng.pareto(base.nu, shape) + 1.0
    if isinstance(base, StudentT):
        return rng.standard_t(base.nu, shape)
    raise DomainError(f"no native sampler for {base!r}")


def _direct_block(cfg: PuSimConfig, replicates: int, block: int) -> int:
    m, n = cfg.counts
    size = min(DIRECT_BLOCK, replicates - block * DIRECT_BLOCK)
    rng = streams.generator(cfg.seed, "pu_direct", block)
    model = cfg.model
    wins = 0
    # chunk rows so a block never materializes more than ~4M draws
    rows = max(1, min(size, 4_000_000 // cfg.S))
    done = 0
    while done < size:
        k = min(rows, size - done)
        red = model.delta + (1.0 + model.gamma) * _native_draws(model.base, rng, (k, m)).max(axis=1)
        green = _native_draws(model.base, rng, (k, n)).max(axis=1)
        wins += int(np.count_nonzero(red > green))
        done += k
    return wins


def pu_direct(cfg: PuSimConfig, replicates: int, jobs: int = 1) -> PuEstimate:
    """Brute force: simulate all S returns per replicate and record whether the maximum is red."""
    if replicates < 1:
        raise DomainError("replicates must be positive")
    m, n = cfg.counts
    nblocks = -(-replicates // DIRECT_BLOCK)
    wins = sum(ordered_map(partial(_direct_block, cfg, replicates), range(nblocks), jobs))
    p = wins / replicates
    se = math.sqrt(max(p * (1.0 - p), 1.0 / replicates) / replicates)
    ups, bound = _odds(p, cfg.model.eta, replicates)
    return PuEstimate(p, ups, se, "direct", cfg.S, m, n, replicates, bound)


def _sweep_point(model: RedGreenModel, R: int, seed: int, S: int) -> PuEstimate:
    return pu_antithetic(PuSimConfig(model, S, R, seed))


def pu_sweep(
    model: RedGreenModel, S_grid, R: int = 100_000, seed: int = 0, jobs: int = 1
) -> list[tuple[int, PuEstimate]]:
    """One antithetic estimate per S; every point reuses the same uniforms (common random numbers)."""
    S_grid = [int(s) for s in S_grid]
    if any(b < a for a, b in zip(S_grid, S_grid[1:])):
        raise DomainError("S_grid must be ascending")
    estimates = ordered_map(partial(_sweep_point, model, R, seed), S_grid, jobs)
    return list(zip(S_grid, estimates))
