"""Command-line entry point: ``unethical-odds <subcommand> [options]``.

Every run writes its result file(s) and a ``manifest.json`` into
``--out-dir``.  Failures print a one-line JSON error record to stderr and
exit with 2 (usage), 3 (data) or 4 (numeric).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    RedGreenModel,
    advantage_limit,
    classify_limit,
)
from .distributions import make_distribution
from .errors import DataError, DomainError, NoDecorrelationError, NumericError, UnethicalOddsError
from .experiments import (
    DEFAULT_S_GRID,
    FIGURE2_COLUMNS,
    FIGURE2_CONFIGS,
    TABLE1_COLUMNS,
    figure1_data,
    figure2_data,
    run_table1,
)
from .extremal_dependence import (
    InterpolatedProcess,
    SparseLagWarning,
    effective_independent_count,
    extremogram,
    extremogram_series,
)
from .gpd_inference import BoundaryWarning, TopKSample, audit, estimate_eta
from .monte_carlo import PuSimConfig, pu_antithetic, pu_direct, pu_plain, pu_sweep
from .records import read_returns_csv, read_series_csv, write_csv, write_json, write_manifest

__all__ = ["main", "build_parser", "parse_returns_csv", "EXIT_USAGE", "EXIT_DATA", "EXIT_NUMERIC"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# flags that change how a run executes but never what it produces
_EXECUTION_ONLY = {"out_dir", "jobs", "func", "format"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_returns_csv(path, k: int) -> TopKSample:
    """Read a ``return,label`` CSV and keep the top ``k`` returns.

    Ties are ranked by input order, earlier rows first.
    """
    returns, is_red = read_returns_csv(path)
    return TopKSample.from_returns(returns, is_red, k)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser, jobs: bool = False) -> None:
    p.add_argument("--seed", type=int, default=0, help="root seed for every random substream")
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="directory for results and manifest")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="result file format")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")


def _add_model(p: argparse.ArgumentParser, S: bool = True) -> None:
    p.add_argument("--dist", default="normal", help="normal, lognormal, exponential, pareto or t")
    p.add_argument("--nu", type=float, default=None, help="tail parameter for pareto and t")
    p.add_argument("--eta", type=float, default=0.1, help="red fraction of the strategy space")
    p.add_argument("--delta", type=float, default=0.0, help="red mean advantage")
    p.add_argument("--gamma", type=float, default=0.0, help="red volatility inflation")
    if S:
        p.add_argument("--S", type=int, default=10_000, help="number of strategies")


def _model(args) -> RedGreenModel:
    return RedGreenModel(make_distribution(args.dist, args.nu), args.eta, args.delta, args.gamma)


def _emit(args, name: str, rows: list[dict], columns: list[str] | None = None) -> Path:
    out = Path(args.out_dir)
    if args.format == "json":
        return write_json(out / f"{name}.json", rows)
    return write_csv(out / f"{name}.csv", rows, columns)


def _parameters(args) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _EXECUTION_ONLY}
    return {k: str(v) if isinstance(v, Path) else v for k, v in params.items()}


def _finish(args, files: list[Path]) -> None:
    write_manifest(args.out_dir, args.command, {**_parameters(args), "format": args.format}, files)


def _print(obj: dict) -> None:
    print(" ".join(f"{k}={v}" for k, v in obj.items()))


# --- subcommands -----------------------------------------------------------


def cmd_asymptotic(args) -> None:
    model = _model(args)
    cls = classify_limit(model)
    adv = advantage_limit(model, args.S)
    row = {
        "dist": model.base.label,
        "eta": model.eta,
        "delta": model.delta,
        "gamma": model.gamma,
        "regime": cls.regime.value,
        "upsilon_star": cls.upsilon_star,
        "pu_limit": cls.pu_limit,
        "S": args.S,
        "advantage": adv.value,
        "advantage_limit": adv.limit,
        "advantage_diverges": adv.diverges,
        "reason": cls.reason,
    }
    _finish(args, [_emit(args, "asymptotic", [row], list(row))])
    _print({k: row[k] for k in ("regime", "upsilon_star", "pu_limit")})


def cmd_pu_sim(args) -> None:
    cfg = PuSimConfig(_model(args), args.S, args.R, args.seed)
    if args.method == "direct":
        est = pu_direct(cfg, args.replicates or args.R, jobs=args.jobs)
    elif args.method == "plain":
        est = pu_plain(cfg, jobs=args.jobs)
    else:
        est = pu_antithetic(cfg, jobs=args.jobs)
    rec = est.as_record()
    _finish(args, [_emit(args, "pu_sim", [rec], list(rec))])
    _print({"p_u": rec["p_u"], "upsilon": rec["upsilon"], "std_error": rec["std_error"]})


def cmd_sweep(args) -> None:
    model = _model(args)
    grid = args.S_grid or DEFAULT_S_GRID
    rows = [est.as_record() for _, est in pu_sweep(model, grid, args.R, args.seed, args.jobs)]
    _finish(args, [_emit(args, "sweep", rows, list(rows[0]))])
    for r in rows:
        _print({"S": r["S"], "p_u": r["p_u"], "upsilon": r["upsilon"]})


def cmd_table1(args) -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryWarning)
        rows = run_table1(
            repeats=args.repeats, S=args.S, eta=args.eta, k=args.k, seed=args.seed, R=args.R, jobs=args.jobs
        )
    recs = [r.as_record() for r in rows]
    _finish(args, [_emit(args, "table1", recs, TABLE1_COLUMNS)])
    for r in recs:
        pct = {c: round(100 * r[c], 1) for c in ("p_u_true", "p_u_prime_mean", "p_u_hat_mean", "power")}
        _print({"base": r["base"], "delta": r["delta"], "gamma": r["gamma"], **pct})


def cmd_figure1(args) -> None:
    rows = figure1_data(args.nu_grid, args.gamma_grid)
    _finish(args, [_emit(args, "figure1", rows, ["nu", "gamma", "upsilon_star"])])
    print(f"wrote {len(rows)} grid points")


def cmd_figure2(args) -> None:
    bases = [make_distribution(d, args.nu if d.lower() in ("t", "student_t", "student-t", "pareto") else None)
             for d in args.dists]
    if len(args.deltas) != len(args.gammas):
        raise UsageError("figure2: --deltas and --gammas must have the same length")
    configs = list(zip(args.deltas, args.gammas))
    rows = figure2_data(bases, configs, args.S_grid or DEFAULT_S_GRID, args.eta, args.R, args.seed, args.jobs)
    _finish(args, [_emit(args, "figure2", rows, FIGURE2_COLUMNS)])
    print(f"wrote {len(rows)} points")


def cmd_fit_gpd(args) -> None:
    sample = parse_returns_csv(args.returns, args.k)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundaryWarning)
        fit, est, mc = audit(sample, upsilon=args.upsilon, R=args.R, seed=args.seed)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    row = {
        "k": sample.k,
        "k_r": sample.k_r,
        "k_g": sample.k_g,
        "u": sample.u,
        **fit.as_record(),
        **est.as_record(),
        "n_redrawn": mc.n_redrawn,
    }
    _finish(args, [_emit(args, "fit_gpd", [row], list(row))])
    _print({k: row[k] for k in ("xi_hat", "tau_r_hat", "tau_g_hat", "lr_stat", "p_value", "p_u_hat", "eta_hat")})


def cmd_estimate_eta(args) -> None:
    if (args.pu is None) == (args.returns is None):
        raise UsageError("estimate-eta: give exactly one of --pu or --returns")
    if args.pu is not None:
        p = args.pu
    else:
        sample = parse_returns_csv(args.returns, args.k)
        p = sample.k_r / sample.k
    row = {"p_u": p, "upsilon": args.upsilon, "eta_hat": estimate_eta(p, args.upsilon)}
    _finish(args, [_emit(args, "estimate_eta", [row], list(row))])
    _print(row)


def cmd_extremogram(args) -> None:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SparseLagWarning)
        if args.series is not None:
            s, values = read_series_csv(args.series)
            if s.size < 2:
                raise DataError(f"{args.series}: need at least two rows")
            steps = np.diff(s)
            if not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
                raise DataError(f"{args.series}: s must be an increasing regular grid")
            est = extremogram_series(
                values, float(steps[0]), args.u, args.max_lag, args.seed, args.n_boot, args.block_length,
                domain_length=float(s[-1] - s[0]),
            )
        else:
            proc = InterpolatedProcess.gaussian(args.knots, args.seed, args.grid_delta)
            est = extremogram(proc, args.u, args.max_lag, args.seed, args.n_boot, args.block_length)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rows = est.as_records()
    _finish(args, [_emit(args, "extremogram", rows, ["lag", "chi", "ci_low", "ci_high", "n_pairs"])])
    try:
        eff = effective_independent_count(est)
        _print({"decorrelation_lag": eff.distance, "effective_count": eff.count})
    except NoDecorrelationError as exc:
        print(f"no decorrelation: {exc}")


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="unethical-odds", description="Unethical odds ratio toolkit.", formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("asymptotic", help="limiting regime, odds ratio and p_u", formatter_class=fmt)
    _add_model(p)
    _add_common(p)
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("pu-sim", help="finite-S Monte Carlo p_u", formatter_class=fmt)
    _add_model(p)
    p.add_argument("--R", type=int, default=100_000, help="Monte Carlo replicates")
    p.add_argument("--method", choices=("antithetic", "plain", "direct"), default="antithetic")
    p.add_argument("--replicates", type=int, default=None, help="replicates for --method direct (default R)")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_pu_sim)

    p = sub.add_parser("sweep", help="p_u against S with common random numbers", formatter_class=fmt)
    _add_model(p, S=False)
    p.add_argument("--S-grid", dest="S_grid", type=_int_list, default=None,
                   help="comma-separated ascending S values (default: half-decades 10..1e8)")
    p.add_argument("--R", type=int, default=100_000, help="Monte Carlo replicates")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table1", help="audit simulation study", formatter_class=fmt)
    p.add_argument("--repeats", type=int, default=10_000, help="simulated audits per configuration")
    p.add_argument("--S", type=int, default=10_000, help="number of strategies")
    p.add_argument("--eta", type=float, default=0.1, help="red fraction of the strategy space")
    p.add_argument("--k", type=int, default=200, help="top-k returns used for fitting")
    p.add_argument("--R", type=int, default=100_000, help="Monte Carlo replicates for the GPD p_u")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("figure1", help="limiting odds ratio over (nu, gamma)", formatter_class=fmt)
    p.add_argument("--nu-grid", type=_float_list, default=[float(v) for v in range(1, 21)])
    p.add_argument("--gamma-grid", type=_float_list, default=[0.0, 0.05, 0.1, 0.2, 0.5])
    _add_common(p)
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("figure2", help="p_u and odds ratio against S", formatter_class=fmt)
    p.add_argument("--dists", type=lambda t: [x for x in t.split(",") if x], default=["normal", "t"])
    p.add_argument("--nu", type=float, default=12.0, help="tail parameter for t or pareto entries")
    p.add_argument("--deltas", type=_float_list, default=[d for d, _ in FIGURE2_CONFIGS])
    p.add_argument("--gammas", type=_float_list, default=[g for _, g in FIGURE2_CONFIGS])
    p.add_argument("--S-grid", dest="S_grid", type=_int_list, default=None,
                   help="comma-separated S values (default: half-decades 10..1e8)")
    p.add_argument("--eta", type=float, default=0.1, help="red fraction of the strategy space")
    p.add_argument("--R", type=int, default=100_000, help="Monte Carlo replicates")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_figure2)

    p = sub.add_parser("fit-gpd", help="fit the shared-shape GPD to audited returns", formatter_class=fmt)
    p.add_argument("--returns", type=Path, required=True, help="CSV with columns return,label")
    p.add_argument("--k", type=int, default=200, help="top-k returns used for fitting")
    p.add_argument("--R", type=int, default=100_000, help="Monte Carlo replicates for the GPD p_u")
    p.add_argument("--upsilon", type=float, default=1.0, help="odds ratio used to back out eta")
    _add_common(p)
    p.set_defaults(func=cmd_fit_gpd)

    p = sub.add_parser("estimate-eta", help="red share implied by p_u and an odds ratio", formatter_class=fmt)
    p.add_argument("--pu", type=float, default=None, help="probability the best strategy is red")
    p.add_argument("--returns", type=Path, default=None, help="CSV of returns; uses the top-k red fraction")
    p.add_argument("--k", type=int, default=200, help="top-k returns when --returns is given")
    p.add_argument("--upsilon", type=float, required=True, help="unethical odds ratio")
    _add_common(p)
    p.set_defaults(func=cmd_estimate_eta)

    p = sub.add_parser("extremogram", help="lag-k extremal dependence", formatter_class=fmt)
    p.add_argument("--series", type=Path, default=None, help="CSV with columns s,value (default: simulate)")
    p.add_argument("--knots", type=int, default=1001, help="Gaussian knots of the simulated process")
    p.add_argument("--grid-delta", type=float, default=0.1, help="grid spacing of the simulated process")
    p.add_argument("--u", type=float, default=0.95, help="quantile level")
    p.add_argument("--max-lag", type=int, default=50, help="largest lag in grid steps")
    p.add_argument("--n-boot", type=int, default=500, help="bootstrap resamples")
    p.add_argument("--block-length", type=float, default=10.0, help="mean bootstrap block length in grid steps")
    _add_common(p)
    p.set_defaults(func=cmd_extremogram)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    kind = {EXIT_USAGE: "usage", EXIT_DATA: "data", EXIT_NUMERIC: "numeric"}[code]
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except DomainError as exc:
        return _fail(EXIT_USAGE, exc)
    except DataError as exc:
        return _fail(EXIT_DATA, exc)
    except (NumericError, NoDecorrelationError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _fail(EXIT_DATA, exc)
    except UnethicalOddsError as exc:
        return _fail(EXIT_NUMERIC, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
