"""Batch reproductions: the audit simulation study and the two odds-ratio figures.

Each repeat of the audit study draws its own substream ``(seed, config, r)``,
so results do not depend on how repeats are grouped across workers.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import streams
from ._parallel import ordered_map
from .asymptotics import RedGreenModel, limiting_pu_pareto, split_counts, upsilon_star
from .distributions import Gaussian, ReturnDistribution, StudentT
from .errors import DataError, FitError
from .gpd_inference import BoundaryWarning, TopKSample, estimate_pu_gpd, fit_gpd_shared_shape
from .monte_carlo import PuSimConfig, pu_antithetic
from .records import write_csv

log = logging.getLogger(__name__)

__all__ = [
    "Table1Row",
    "TABLE1_CONFIGS",
    "TABLE1_COLUMNS",
    "simulate_top_k",
    "run_table1",
    "figure1_data",
    "figure2_data",
    "DEFAULT_S_GRID",
    "FIGURE2_CONFIGS",
]

TABLE1_CONFIGS: list[tuple[ReturnDistribution, float, float]] = [
    (base, d, g)
    for base in (Gaussian(), StudentT(12))
    for d, g in ((0.0, 0.0), (0.5, 0.0), (0.0, 0.2), (0.5, 0.2))
]
FIGURE2_CONFIGS = [(0.0, 0.2), (0.5, 0.2), (0.5, 0.0)]
DEFAULT_S_GRID = [int(round(10 ** (e / 2))) for e in range(2, 17)]
LR_CRITICAL_5PCT = 3.841458820694124  # chi-squared(1) 95% point

TABLE1_COLUMNS = [
    "base",
    "delta",
    "gamma",
    "p_u_true",
    "p_u_prime_mean",
    "p_u_hat_mean",
    "power",
    "repeats",
    "n_failed",
]


@dataclass(frozen=True)
class Table1Row:
    base: str
    delta: float
    gamma: float
    p_u_true: float
    p_u_prime_mean: float
    p_u_hat_mean: float
    power: float
    repeats: int
    n_failed: int

    def as_record(self) -> dict:
        return asdict(self)


def simulate_top_k(
    model: RedGreenModel, S: int, k: int, rng: np.random.Generator
) -> tuple[TopKSample, bool]:
    """One audited sample: S returns (first ``m`` red), cut at the top ``k``.

    Returns the top-k sample and whether the overall best return is red.
    Only the ``k + 1`` largest uniforms of each group can reach the top
    ``k + 1`` overall, so just those are pushed through the quantile
    function; the result equals inverting all S draws.
    """
    m, n = split_counts(model.eta, S)
    u = rng.random(S)
    u[u == 0.0] = 2.0**-54
    keep = k + 1

    def top(x: np.ndarray) -> np.ndarray:
        if x.size <= keep:
            return x
        return x[np.argpartition(x, x.size - keep)[x.size - keep :]]

    red_u, green_u = top(u[:m]), top(u[m:])
    red = model.delta + (1.0 + model.gamma) * model.base.quantile(red_u)
    green = model.base.quantile(green_u)
    values = np.concatenate([red, green])
    labels = np.concatenate([np.ones(red.size, bool), np.zeros(green.size, bool)])
    sample = TopKSample.from_returns(values, labels, k)
    return sample, bool(red.max() > green.max())


def _table1_repeat(model, S, k, R, seed, tag, r):
    rng = streams.generator(seed, tag, r)
    sample, red_best = simulate_top_k(model, S, k, rng)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            fit = fit_gpd_shared_shape(sample)
        p_hat = estimate_pu_gpd(fit, sample, R=R, seed=seed, stream=tag + "/gpd", index=r).p_u
    except (DataError, FitError) as exc:
        log.debug("repeat %d of %s failed: %s", r, tag, exc)
        return None
    return red_best, sample.k_r / sample.k, p_hat, fit.lr_stat > LR_CRITICAL_5PCT


def _table1_chunk(model, S, k, R, seed, tag, rs):
    return [_table1_repeat(model, S, k, R, seed, tag, r) for r in rs]


def run_table1(
    repeats: int = 10_000,
    S: int = 10_000,
    eta: float = 0.1,
    k: int = 200,
    seed: int = 0,
    R: int = 100_000,
    jobs: int = 1,
    configs=None,
    chunk: int = 25,
) -> list[Table1Row]:
    """Simulate the audit study for each (base, delta, gamma) configuration.

    For every repeat: draw S returns, take the top ``k``, fit the shared-shape
    GPD with and without equal scales, and record whether the best return is
    red, the red share of the top ``k``, the GPD Monte Carlo estimate of
    ``p_u`` and whether the likelihood-ratio test rejects at 5%.  Repeats
    whose fit fails are dropped and counted in ``n_failed``.
    """
    if repeats < 1:
        raise DataError("repeats must be positive")
    rows = []
    for base, delta, gamma in configs or TABLE1_CONFIGS:
        model = RedGreenModel(base, eta, delta, gamma)
        tag = f"table1/{base.label}/{delta!r}/{gamma!r}"
        chunks = [range(i, min(i + chunk, repeats)) for i in range(0, repeats, chunk)]
        fn = partial(_table1_chunk, model, S, k, R, seed, tag)
        results = [res for part in ordered_map(fn, chunks, jobs) for res in part]
        ok = [res for res in results if res is not None]
        failed = len(results) - len(ok)
        if failed:
            log.warning("%s: %d of %d repeats failed to fit and were excluded", tag, failed, repeats)
        if not ok:
            raise FitError(f"every repeat failed for {tag}")
        cnt = len(ok)
        rows.append(
            Table1Row(
                base=base.label,
                delta=delta,
                gamma=gamma,
                p_u_true=sum(r[0] for r in ok) / cnt,
                p_u_prime_mean=math.fsum(r[1] for r in ok) / cnt,
                p_u_hat_mean=math.fsum(r[2] for r in ok) / cnt,
                power=sum(r[3] for r in ok) / cnt,
                repeats=repeats,
                n_failed=failed,
            )
        )
    return rows


def figure1_data(nu_grid, gamma_grid) -> list[dict]:
    """Limiting odds ratio ``(1 + gamma)**nu`` on a grid."""
    nu_grid, gamma_grid = list(nu_grid), list(gamma_grid)
    if not nu_grid or not gamma_grid:
        raise DataError("nu and gamma grids must be non-empty")
    return [
        {"nu": float(nu), "gamma": float(g), "upsilon_star": upsilon_star(g, nu)}
        for g in gamma_grid
        for nu in nu_grid
    ]


def _figure2_point(eta, R, seed, job):
    base, delta, gamma, S = job
    est = pu_antithetic(PuSimConfig(RedGreenModel(base, eta, delta, gamma), S, R, seed))
    limit = limiting_pu_pareto(eta, gamma, base.nu) if base.nu is not None else None
    return {
        "base": base.label,
        "delta": delta,
        "gamma": gamma,
        **est.as_record(),
        "pu_limit": limit,
    }


FIGURE2_COLUMNS = [
    "base",
    "delta",
    "gamma",
    "S",
    "m",
    "n",
    "R",
    "p_u",
    "upsilon",
    "std_error",
    "upsilon_bound",
    "pu_limit",
]


def figure2_data(
    bases=None,
    configs=None,
    S_grid=None,
    eta: float = 0.1,
    R: int = 100_000,
    seed: int = 0,
    jobs: int = 1,
) -> list[dict]:
    """``p_u`` and the odds ratio against S for each base law and (delta, gamma).

    ``pu_limit`` carries the Pareto-tail asymptote for laws with a tail
    parameter and is empty otherwise.
    """
    bases = bases or [Gaussian(), StudentT(12)]
    configs = configs or FIGURE2_CONFIGS
    S_grid = sorted(int(s) for s in (S_grid or DEFAULT_S_GRID))
    jobs_list = [(b, float(d), float(g), S) for b in bases for d, g in configs for S in S_grid]
    return ordered_map(partial(_figure2_point, eta, R, seed), jobs_list, jobs)


def write_table1(path: Path, rows: list[Table1Row]) -> Path:
    return write_csv(path, [r.as_record() for r in rows], TABLE1_COLUMNS)


def write_figure1(path: Path, rows: list[dict]) -> Path:
    return write_csv(path, rows, ["nu", "gamma", "upsilon_star"])


def write_figure2(path: Path, rows: list[dict]) -> Path:
    return write_csv(path, rows, FIGURE2_COLUMNS)
