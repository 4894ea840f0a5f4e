"""Command line front end.

Exit status: 0 when the command completed, 2 when ``test`` rejects the
null of no change point, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .detector import detect_change_points
from .errors import ConfigError, StateCPError
from .estimators import RegressionPairs, TimeSeries, cv_profile_mu, cv_profile_sigma
from .fileio import dump_artifact, ingest
from .kernels import default_kernel
from .simlab import (
    DESK,
    FULL,
    MODEL_IDS,
    ModelSpec,
    TestConfig,
    estimation_experiment,
    power_experiment,
    provenance,
    simulate,
    size_experiment,
    tar_comparison,
    write_table,
)
from .statetest import BandwidthPair, bootstrap_critical, gumbel_critical, make_grid, sup_statistic

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2
AUTO_QUANTILES = (0.025, 0.975)
DATA_REPLICATES = 2000


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input (exactly one of --input / --model)")
    src.add_argument("--input", help="CSV file, one column or time,value")
    src.add_argument("--column", help="column name or 0-based index")
    src.add_argument("--transform", action="append", choices=["log", "difference", "none"], default=[],
                     help="apply in the order given; repeatable")
    src.add_argument("--strict", action="store_true", help="fail instead of dropping unusable rows")
    src.add_argument("--model", choices=MODEL_IDS, help="simulate the input from a model")
    src.add_argument("--n", type=int, default=500, help="simulated length")
    src.add_argument("--kappa", type=float, help="Model A / TAR coefficient")
    src.add_argument("--delta", type=float, help="F1 / F2 jump size")
    src.add_argument("--pairing", choices=["lag", "diff"], default="lag",
                     help="lag: (X[k-1], X[k]); diff: (X[k], X[k+1] - X[k])")
    opt = common.add_argument_group("test settings")
    opt.add_argument("--interval", nargs="+", default=["auto"], metavar="L U",
                     help="inspection interval, or 'auto' for the 2.5%%-97.5%% predictor quantiles")
    opt.add_argument("--alpha", type=float, default=0.05)
    opt.add_argument("--bandwidth", nargs="+", default=["auto"], metavar="B H",
                     help="test and estimation bandwidths, or 'auto' for cross-validation")
    opt.add_argument("--allow-h-above-b", action="store_true")
    opt.add_argument("--critical", choices=["bootstrap", "gumbel"], default="bootstrap")
    opt.add_argument("--replicates", type=int, help="bootstrap replicates")
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--grid-step", type=float)
    opt.add_argument("--boot-raw", action="store_true", help="bootstrap on the raw interval, no CDF mapping")
    opt.add_argument("--paper-kernel-constants", action="store_true", help="use the published mixing parameter 0.34")
    opt.add_argument("--full-scale", action="store_true", help="1000 replications / 2000 bootstrap draws")
    opt.add_argument("--threads", type=int, default=1)
    opt.add_argument("--out", help="output path (JSON, or CSV for simulated series); stdout if omitted")

    ap = argparse.ArgumentParser(prog="statecp", description="State-domain change-point tests for autoregressions.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("test", parents=[common], help="sup-statistic against a critical value")
    det = sub.add_parser("detect", parents=[common], help="locate change points")
    det.add_argument("--csv", help="flat CSV summary of the detections")
    det.add_argument("--max-points", type=int, default=20)
    sub.add_parser("cv", parents=[common], help="cross-validated bandwidths with profiles")
    sub.add_parser("curve", parents=[common], help="statistic curve on the grid")
    sim = sub.add_parser("simulate", parents=[common], help="simulate a path or run an experiment")
    sim.add_argument("--experiment", choices=["size", "power", "estimation", "tar"])
    sim.add_argument("--replications", type=int)
    sim.add_argument("--deltas", type=float, nargs="+", default=[0.0, 0.4, 0.8, 1.2, 1.6])
    sim.add_argument("--burn-in", type=int, default=1000)
    sim.add_argument("--table", help="CSV table of experiment results")
    sub.add_parser("bootstrap", parents=[common], help="bootstrap critical value")
    return ap


def _kernel(args):
    return default_kernel("published" if args.paper_kernel_constants else "auto")


def _spec(args, seed=None) -> ModelSpec:
    return ModelSpec(args.model, args.n, getattr(args, "burn_in", 1000), args.seed if seed is None else seed,
                     args.kappa, args.delta)


def _load(args) -> tuple[TimeSeries, dict]:
    if bool(args.input) == bool(args.model):
        raise ConfigError("give exactly one of --input or --model")
    if args.input:
        series, rep = ingest(args.input, args.column, [t for t in args.transform if t != "none"], args.strict)
        return series, {"ingest": rep.to_dict()}
    return simulate(_spec(args)), {"model": asdict(_spec(args))}


def _interval(args, pairs: RegressionPairs) -> tuple[tuple[float, float], dict]:
    iv = args.interval
    if len(iv) == 1 and iv[0] == "auto":
        lo, hi = (float(v) for v in np.quantile(pairs.x, AUTO_QUANTILES))
        source = "auto"
    elif len(iv) == 2:
        lo, hi = float(iv[0]), float(iv[1])
        source = "user"
    else:
        raise ConfigError("--interval takes 'auto' or two numbers")
    if not hi > lo:
        raise ConfigError(f"interval [{lo}, {hi}] is empty")
    coverage = float(np.mean((pairs.x >= lo) & (pairs.x <= hi)))
    if source == "auto":
        print(f"interval [{lo:.6g}, {hi:.6g}] covers {coverage:.2%} of the predictors", file=sys.stderr)
    return (lo, hi), {"interval": [lo, hi], "interval_source": source, "interval_coverage": coverage}


def _bandwidths(args, pairs) -> tuple[BandwidthPair, dict]:
    bw = args.bandwidth
    if len(bw) == 1 and bw[0] == "auto":
        prof_b = cv_profile_mu(pairs)
        prof_h = cv_profile_sigma(pairs, b_mu=prof_b.selected)
        b, h = prof_b.selected, prof_h.selected
        capped = h > b and not args.allow_h_above_b
        if capped:
            h = b
        pair = BandwidthPair(b, h, args.allow_h_above_b)
        return pair, {"bandwidth": [b, h], "bandwidth_source": "cv", "h_capped_at_b": capped,
                      "cv_b": prof_b.to_dict(), "cv_h": prof_h.to_dict()}
    if len(bw) != 2:
        raise ConfigError("--bandwidth takes 'auto' or two numbers")
    pair = BandwidthPair(float(bw[0]), float(bw[1]), args.allow_h_above_b)
    return pair, {"bandwidth": [pair.b, pair.h], "bandwidth_source": "user"}


def _critical(args, pairs, bw, interval, kernel, grid_points):
    if not 0 < args.alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    if args.critical == "gumbel":
        return gumbel_critical(pairs.n, bw.b, interval, kernel, args.alpha), None
    reps = args.replicates or DATA_REPLICATES
    return bootstrap_critical(
        pairs.n, bw.b, interval, kernel, args.alpha, reps, args.seed,
        sample=None if args.boot_raw else pairs.x, grid_points=grid_points, workers=args.threads,
    )


# execution settings that must not change an artifact
_RUNTIME_ONLY = ("threads", "out", "csv", "table")


def _config(args, extra: dict) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in _RUNTIME_ONLY}
    cfg.update(extra)
    return cfg


def _emit(payload: dict, args) -> None:
    text = dump_artifact(payload, args.out)
    if not args.out:
        print(text)


def _prepare(args):
    series, source = _load(args)
    pairs = series.pairs(args.pairing)
    kernel = _kernel(args)
    return series, pairs, kernel, source


def cmd_cv(args) -> int:
    _, pairs, kernel, source = _prepare(args)
    bw, resolved = _bandwidths(args, pairs)
    _emit({"command": "cv", "config": _config(args, {**resolved, **source}), "b": bw.b, "h": bw.h}, args)
    return EXIT_OK


def _curve_run(args):
    _, pairs, kernel, source = _prepare(args)
    bw, r_bw = _bandwidths(args, pairs)
    interval, r_iv = _interval(args, pairs)
    curve, sup = sup_statistic(pairs, interval, bw, kernel, grid_step=args.grid_step)
    return pairs, kernel, bw, interval, curve, sup, {**source, **r_bw, **r_iv, "n_pairs": pairs.n}


def cmd_curve(args) -> int:
    _, kernel, _, _, curve, sup, resolved = _curve_run(args)
    _emit({"command": "curve", "config": _config(args, resolved), "kernel": kernel.summary(),
           "curve": curve.to_dict(), "sup": sup}, args)
    return EXIT_OK


def cmd_test(args) -> int:
    pairs, kernel, bw, interval, curve, sup, resolved = _curve_run(args)
    crit, _ = _critical(args, pairs, bw, interval, kernel, len(curve.grid))
    reject = sup > crit.value
    _emit({"command": "test", "config": _config(args, resolved), "kernel": kernel.summary(),
           "sup": sup, "argmax": float(curve.grid[curve.argmax()]), "critical": crit.to_dict(),
           "reject": reject}, args)
    return EXIT_REJECT if reject else EXIT_OK


def cmd_detect(args) -> int:
    pairs, kernel, bw, interval, curve, _, resolved = _curve_run(args)
    crit, _ = _critical(args, pairs, bw, interval, kernel, len(curve.grid))
    report = detect_change_points(pairs, interval, bw, kernel, critical=crit, curve=curve,
                                  max_points=args.max_points)
    payload = {"command": "detect", "config": _config(args, resolved), "kernel": kernel.summary(),
               **report.to_dict(), "curve": curve.to_dict()}
    _emit(payload, args)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["location", "statistic", "boundary"])
            w.writeheader()
            w.writerows(report.csv_rows())
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    _, pairs, kernel, source = _prepare(args)
    bw, r_bw = _bandwidths(args, pairs)
    interval, r_iv = _interval(args, pairs)
    grid_points = len(make_grid(interval, bw.b, args.grid_step))
    args.critical = "bootstrap"
    crit, draws = _critical(args, pairs, bw, interval, kernel, grid_points)
    _emit({"command": "bootstrap", "config": _config(args, {**source, **r_bw, **r_iv}),
           "kernel": kernel.summary(), "critical": crit.to_dict(), "draws": draws.to_dict()}, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if not args.model:
        raise ConfigError("simulate needs --model")
    if args.input:
        raise ConfigError("simulate takes --model, not --input")
    if args.experiment is None:
        series = simulate(_spec(args))
        if args.out and args.out.endswith(".csv"):
            np.savetxt(args.out, series.values, delimiter=",", header="value", comments="", fmt="%.17g")
        else:
            _emit({"command": "simulate", "config": _config(args, {}), "values": series.values}, args)
        return EXIT_OK

    scale = FULL if args.full_scale else DESK
    reps = args.replications or scale["replications"]
    bandwidth = "cv" if args.bandwidth == ["auto"] else tuple(float(v) for v in args.bandwidth)
    interval = "calibrated" if args.interval == ["auto"] else tuple(float(v) for v in args.interval)
    config = TestConfig(args.alpha, args.replicates or scale["boot_replicates"], bandwidth, interval,
                        args.grid_step, args.boot_raw, "published" if args.paper_kernel_constants else "auto",
                        args.threads)
    spec = _spec(args)
    if args.experiment == "size":
        reports = [size_experiment(spec, config, reps, args.seed)]
    elif args.experiment == "power":
        reports = power_experiment(spec, args.deltas, config, reps, args.seed)
    elif args.experiment == "estimation":
        reports = [estimation_experiment(spec, config, reps, args.seed)]
    else:
        reports = [tar_comparison(spec, config, reps, args.seed)]
    if args.table:
        write_table(reports, args.table)
    _emit({"command": "simulate", "config": _config(args, {"replications": reps}), **provenance(reports)}, args)
    return EXIT_OK


COMMANDS = {
    "test": cmd_test, "detect": cmd_detect, "cv": cmd_cv, "curve": cmd_curve,
    "simulate": cmd_simulate, "bootstrap": cmd_bootstrap,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except StateCPError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error [E_IO]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
