"""Command-line front end for reproducible scenario runs.

Every command that writes a CSV also writes `<out>.manifest`, a flat
key=value file recording the command, full parameter set, seed, package
version, output path, and wall-clock duration.  Re-running a command
with the manifest's parameters reproduces the CSV byte for byte.

Exit codes: 0 success, 2 bad flags, 3 domain errors (saturation,
oversaturated signal, values out of range), 4 file I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from . import benchmarks
from .analysis import (
    OverflowRow,
    SweepRow,
    VP_INTERVAL_LABEL,
    count_pmf_for,
    format_overflow_csv,
    format_sweep_csv,
    overflow_comparison,
    rho_sweep,
    sweep_lambda,
    sweep_p,
)
from .headways import DEFAULT_TAIL_EPS, DEFAULT_WINDOWS, calibrate_bunched
from .pmf import Pmf, format_csv
from .probe import conditional_pmf, error_variance
from .simulate import (
    BunchedArrivals,
    PoissonArrivals,
    SignalTiming,
    SimConfig,
    simulate_fixed_cycle,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

SEED_ENV_VAR = "QPROBE_SEED"


class UsageError(Exception):
    """Flag combinations argparse cannot express (exit code 2)."""


def _resolve_seed(seed_flag: int | None) -> int:
    if seed_flag is not None:
        return seed_flag
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_manifest(out_path: str, command: str, params: dict,
                    started: float, results: dict | None = None) -> None:
    lines = [f"command={command}", f"version={__version__}"]
    for key in sorted(params):
        lines.append(f"param.{key}={_format_value(params[key])}")
    for key in sorted(results or {}):
        lines.append(f"result.{key}={_format_value(results[key])}")
    lines.append(f"outputs={out_path}")
    lines.append(f"duration_s={time.perf_counter() - started:.3f}")
    _atomic_write(out_path + ".manifest", "\n".join(lines) + "\n")


def _parse_grid(text: str, name: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"{name} must be a comma-separated list of numbers")


def _timing_from(args) -> SignalTiming:
    return SignalTiming(cycle_s=args.cycle_s, red_s=args.red_s,
                        green_s=args.green_s,
                        service_headway_s=args.service_s)


def _signal_model(args, lam_per_cycle: float, cycle_s: float):
    if args.model == "poisson":
        return PoissonArrivals(lam_per_cycle)
    params = calibrate_bunched(lam_per_cycle / cycle_s, args.delta, args.b)
    return BunchedArrivals(params)


def _echo(pairs) -> None:
    for key, value in pairs:
        print(f"{key}={_format_value(value)}")


# --- subcommands -----------------------------------------------------------

def cmd_pmf(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.lambda_vph is not None:
        flow = args.lambda_vph / 3600.0
    else:
        flow = args.lambda_per_red / args.red_s
    rng = np.random.default_rng(seed)
    started = time.perf_counter()
    pmf = count_pmf_for(args.model, flow, args.red_s,
                        min_headway=args.delta, bunching_factor=args.b,
                        n_windows=args.windows, tail_eps=args.tail_eps,
                        rng=rng)
    _atomic_write(args.out, format_csv(pmf))
    params = {"model": args.model, "lambda_vps": flow, "red_s": args.red_s,
              "delta": args.delta, "b": args.b, "windows": args.windows,
              "tail_eps": args.tail_eps, "seed": seed}
    _write_manifest(args.out, "pmf", params, started)
    echo = [("model", args.model), ("lambda_vps", flow),
            ("mean_count", pmf.mean()), ("var_count", pmf.variance()),
            ("seed", seed)]
    if args.model == "bunched":
        bp = calibrate_bunched(flow, args.delta, args.b)
        echo[2:2] = [("delta_s", bp.min_headway), ("b", bp.bunching_factor),
                     ("phi", bp.free_fraction), ("theta_per_s", bp.decay_rate)]
    _echo(echo)
    return EXIT_OK


def cmd_estimate(args) -> int:
    queue_pmf = Pmf.from_csv(args.pmf)
    cond = conditional_pmf(queue_pmf, args.p, args.lp)
    summary = error_variance(queue_pmf, args.p)
    expected = cond.mean()
    low = max(expected - summary.three_sigma, float(args.lp))
    high = expected + summary.three_sigma
    _echo([
        ("p", args.p),
        ("lp", args.lp),
        ("expected_queue", expected),
        ("conditional_variance", cond.variance()),
        ("error_sigma", summary.sigma),
        ("interval_label", VP_INTERVAL_LABEL),
        ("interval_low", low),
        ("interval_high", high),
    ])
    if args.show_pmf:
        sys.stdout.write(format_csv(cond))
    if args.out:
        started = time.perf_counter()
        _atomic_write(args.out, format_csv(cond))
        _write_manifest(args.out, "estimate",
                        {"pmf": args.pmf, "p": args.p, "lp": args.lp},
                        started)
    return EXIT_OK


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args.seed)
    p_grid = _parse_grid(args.p_grid, "--p-grid")
    started = time.perf_counter()
    params = {"p_grid": args.p_grid, "reference": args.reference,
              "seed": seed}
    if args.pmf is not None:
        if args.lambda_grid is not None:
            raise UsageError("--pmf and --lambda-grid are mutually exclusive")
        queue_pmf = Pmf.from_csv(args.pmf)
        lam = args.reference_mean if args.reference_mean is not None \
            else queue_pmf.mean()
        rows = sweep_p(queue_pmf, p_grid, model="pmf", lam=lam)
        params.update({"pmf": args.pmf, "reference_mean": lam})
    else:
        if args.lambda_grid is None:
            raise UsageError("either --pmf or --lambda-grid is required")
        grid = _parse_grid(args.lambda_grid, "--lambda-grid")
        if args.lambda_unit == "vph":
            flows = [g / 3600.0 for g in grid]
        elif args.lambda_unit == "per-window":
            flows = [g / args.duration_s for g in grid]
        else:
            flows = grid
        rows = sweep_lambda(args.model, flows, p_grid, args.duration_s,
                            min_headway=args.delta, bunching_factor=args.b,
                            n_windows=args.windows, tail_eps=args.tail_eps,
                            seed=seed)
        params.update({"model": args.model, "lambda_grid": args.lambda_grid,
                       "lambda_unit": args.lambda_unit,
                       "duration_s": args.duration_s, "delta": args.delta,
                       "b": args.b, "windows": args.windows,
                       "tail_eps": args.tail_eps})
    _atomic_write(args.out, format_sweep_csv(rows))
    _write_manifest(args.out, "sweep", params, started)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _sim_params(args, seed: int, lam_per_cycle: float) -> dict:
    return {"model": args.model, "cycle_s": args.cycle_s,
            "red_s": args.red_s, "green_s": args.green_s,
            "service_s": args.service_s, "lambda_per_cycle": lam_per_cycle,
            "cycles": args.cycles, "warmup": args.warmup,
            "replications": args.replications, "delta": args.delta,
            "b": args.b, "seed": seed}


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.lambda_vph is not None:
        lam_per_cycle = args.lambda_vph / 3600.0 * args.cycle_s
    else:
        lam_per_cycle = args.lambda_per_cycle
    timing = _timing_from(args)
    model = _signal_model(args, lam_per_cycle, timing.cycle_s)
    config = SimConfig(arrival_model=model, n_cycles=args.cycles,
                       warmup_cycles=args.warmup, seed=seed,
                       replications=args.replications)
    started = time.perf_counter()
    result = simulate_fixed_cycle(timing, config)
    _atomic_write(args.out, format_csv(result.pmf))
    params = _sim_params(args, seed, lam_per_cycle)
    _write_manifest(args.out, "simulate", params, started,
                    results=result.metadata)
    echo_keys = ("model", "lambda_per_cycle", "rho", "mean_queue",
                 "var_queue", "mean_overflow", "seed")
    _echo([(k, result.metadata[k]) for k in echo_keys
           if k in result.metadata])
    return EXIT_OK


def cmd_table1(args) -> int:
    seed = _resolve_seed(args.seed)
    timing = SignalTiming(cycle_s=benchmarks.CYCLE_S, red_s=benchmarks.RED_S,
                          green_s=benchmarks.GREEN_S,
                          service_headway_s=benchmarks.SERVICE_HEADWAY_S)
    lam = benchmarks.LAMBDA_PER_CYCLE
    started = time.perf_counter()
    rows: list[SweepRow] = []
    extras: list[tuple] = []
    for name in ("bunched", "poisson"):
        if name == "poisson":
            model = PoissonArrivals(lam)
        else:
            model = BunchedArrivals(calibrate_bunched(
                lam / timing.cycle_s, benchmarks.MIN_HEADWAY_S,
                benchmarks.BUNCHING_FACTOR))
        config = SimConfig(arrival_model=model, n_cycles=args.cycles,
                           warmup_cycles=args.warmup, seed=seed,
                           replications=args.replications)
        result = simulate_fixed_cycle(timing, config)
        rho = float(result.metadata["rho"])
        model_rows = sweep_p(result.pmf, benchmarks.TABLE1_P_GRID,
                             model=name, lam=lam, rho=rho)
        refs = benchmarks.table1_reference(name)
        for row, ref in zip(model_rows, refs):
            extras.append((ref, 100.0 * (row.three_sigma - ref) / ref))
        rows.extend(model_rows)
    text = format_sweep_csv(rows, extra_header="ref_three_sigma,deviation_pct",
                            extra_values=extras)
    _atomic_write(args.out, text)
    _write_manifest(args.out, "table1",
                    {"cycles": args.cycles, "warmup": args.warmup,
                     "replications": args.replications, "seed": seed},
                    started)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_table2(args) -> int:
    seed = _resolve_seed(args.seed)
    timing = SignalTiming(cycle_s=benchmarks.CYCLE_S, red_s=benchmarks.RED_S,
                          green_s=benchmarks.GREEN_S,
                          service_headway_s=benchmarks.SERVICE_HEADWAY_S)
    if args.rhos is not None:
        rho_grid = _parse_grid(args.rhos, "--rhos")
        benchmark_grid = tuple(rho_grid) == benchmarks.TABLE2_RHO
    else:
        rho_grid = list(benchmarks.TABLE2_RHO)
        benchmark_grid = True
    if benchmark_grid and not args.derive_lambda:
        lambdas = list(benchmarks.TABLE2_LAMBDA)
    elif args.derive_lambda:
        lambdas = None
    else:
        raise UsageError("custom --rhos requires --derive-lambda (published "
                         "per-cycle rates exist only for the default grid)")
    started = time.perf_counter()
    rows = rho_sweep(timing, rho_grid, args.p,
                     lambdas_per_cycle=lambdas, n_cycles=args.cycles,
                     warmup_cycles=args.warmup, seed=seed,
                     replications=args.replications,
                     min_headway=benchmarks.MIN_HEADWAY_S,
                     bunching_factor=benchmarks.BUNCHING_FACTOR)
    extra_header = ""
    extras = None
    if benchmark_grid and args.p == benchmarks.TABLE2_P_FIXED:
        extra_header = "ref_var_d,deviation_pct"
        extras = []
        for row in rows:
            idx = benchmarks.TABLE2_RHO.index(round(row.rho, 2))
            ref = benchmarks.table2_reference(row.model)[idx]
            extras.append((ref, 100.0 * (row.var_d - ref) / ref))
    text = format_sweep_csv(rows, extra_header=extra_header,
                            extra_values=extras)
    _atomic_write(args.out, text)
    _write_manifest(args.out, "table2",
                    {"rhos": ",".join(f"{r:g}" for r in rho_grid),
                     "p": args.p, "derive_lambda": args.derive_lambda,
                     "cycles": args.cycles, "warmup": args.warmup,
                     "replications": args.replications, "seed": seed},
                    started)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_overflow(args) -> int:
    seed = _resolve_seed(args.seed)
    p_grid = _parse_grid(args.p_grid, "--p-grid")
    timing = _timing_from(args)
    model = _signal_model(args, args.lambda_per_cycle, timing.cycle_s)
    started = time.perf_counter()
    rows = overflow_comparison(timing, model, p_grid,
                               n_cycles=args.cycles,
                               warmup_cycles=args.warmup, seed=seed,
                               replications=args.replications,
                               n_windows=args.windows,
                               tail_eps=args.tail_eps)
    _atomic_write(args.out, format_overflow_csv(rows))
    params = _sim_params(args, seed, args.lambda_per_cycle)
    params.update({"p_grid": args.p_grid, "windows": args.windows,
                   "tail_eps": args.tail_eps})
    _write_manifest(args.out, "overflow", params, started)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def _add_headway_flags(sp, include_windows: bool = True) -> None:
    sp.add_argument("--delta", type=float, default=1.5,
                    help="bunched minimum headway, seconds (default 1.5)")
    sp.add_argument("--b", type=float, default=0.6,
                    help="bunching factor (default 0.6)")
    if include_windows:
        sp.add_argument("--windows", type=int, default=DEFAULT_WINDOWS,
                        help="Monte Carlo counting windows for bunched pmfs")
        sp.add_argument("--tail-eps", type=float, default=DEFAULT_TAIL_EPS,
                        help="truncation mass for analytic pmfs")


def _add_signal_flags(sp) -> None:
    sp.add_argument("--cycle-s", type=float, default=90.0)
    sp.add_argument("--red-s", type=float, default=45.0)
    sp.add_argument("--green-s", type=float, default=45.0)
    sp.add_argument("--service-s", type=float, default=2.0,
                    help="departure headway during green, seconds")
    sp.add_argument("--cycles", type=int, default=65_000)
    sp.add_argument("--warmup", type=int, default=200)
    sp.add_argument("--replications", type=int, default=1)


def _seed_flag(sp) -> None:
    sp.add_argument("--seed", type=int, default=None,
                    help=f"RNG seed (falls back to ${SEED_ENV_VAR}, then 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qprobe",
        description="Queue-length prediction from probe vehicles at a "
                    "signalized intersection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pmf", help="arrival-count pmf over a red interval")
    sp.add_argument("--model", choices=("poisson", "bunched"), required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda-vph", type=float,
                       help="arrival rate, vehicles per hour")
    group.add_argument("--lambda-per-red", type=float,
                       help="expected arrivals per red interval")
    sp.add_argument("--red-s", type=float, default=45.0)
    _add_headway_flags(sp)
    _seed_flag(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_pmf)

    sp = sub.add_parser("estimate",
                        help="conditional queue estimate from one probe "
                             "position")
    sp.add_argument("--pmf", required=True, help="queue pmf CSV file")
    sp.add_argument("--p", type=float, required=True,
                    help="probe fraction in [0, 1]")
    sp.add_argument("--lp", type=int, required=True,
                    help="deepest probe position, vehicles from stop bar")
    sp.add_argument("--show-pmf", action="store_true",
                    help="print the conditional pmf CSV to stdout")
    sp.add_argument("--out", help="write the conditional pmf CSV here")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("sweep", help="error-variance sweep to CSV")
    sp.add_argument("--pmf", help="queue pmf CSV (mutually exclusive with "
                                  "--model/--lambda-grid)")
    sp.add_argument("--model", choices=("poisson", "bunched"),
                    default="poisson")
    sp.add_argument("--lambda-grid",
                    help="comma-separated arrival rates")
    sp.add_argument("--lambda-unit", choices=("vph", "per-window", "vps"),
                    default="vph")
    sp.add_argument("--duration-s", type=float, default=45.0,
                    help="counting window, seconds (default 45)")
    sp.add_argument("--p-grid", required=True,
                    help="comma-separated probe fractions, ascending")
    sp.add_argument("--reference", choices=("lambda", "mean-queue"),
                    default="lambda",
                    help="normalization preset recorded in the manifest; "
                         "both percent columns are always emitted")
    sp.add_argument("--reference-mean", type=float,
                    help="explicit reference for pct_of_lambda in --pmf mode")
    _add_headway_flags(sp)
    _seed_flag(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate",
                        help="fixed-cycle signal simulation to a pmf CSV")
    sp.add_argument("--model", choices=("poisson", "bunched"), required=True)
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--lambda-per-cycle", type=float, default=20.0)
    group.add_argument("--lambda-vph", type=float)
    _add_signal_flags(sp)
    _add_headway_flags(sp, include_windows=False)
    _seed_flag(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("table1",
                        help="benchmark: error vs probe fraction, both "
                             "models, with reference comparison")
    sp.add_argument("--cycles", type=int, default=benchmarks.N_CYCLES)
    sp.add_argument("--warmup", type=int, default=benchmarks.WARMUP_CYCLES)
    sp.add_argument("--replications", type=int, default=1)
    _seed_flag(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("table2",
                        help="benchmark: error vs congestion at fixed probe "
                             "fraction")
    sp.add_argument("--rhos", help="comma-separated v/c ratios in (0, 1)")
    sp.add_argument("--p", type=float, default=benchmarks.TABLE2_P_FIXED)
    sp.add_argument("--derive-lambda", action="store_true",
                    help="derive per-cycle rates as rho times service rate "
                         "instead of the published column")
    sp.add_argument("--cycles", type=int, default=benchmarks.N_CYCLES)
    sp.add_argument("--warmup", type=int, default=benchmarks.WARMUP_CYCLES)
    sp.add_argument("--replications", type=int, default=1)
    _seed_flag(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_table2)

    sp = sub.add_parser("overflow",
                        help="error variance with vs without the overflow "
                             "queue")
    sp.add_argument("--model", choices=("poisson", "bunched"), required=True)
    sp.add_argument("--lambda-per-cycle", type=float, default=20.0)
    sp.add_argument("--p-grid", default="0.0001,0.1,0.2,0.3,0.4,0.5")
    _add_signal_flags(sp)
    _add_headway_flags(sp)
    _seed_flag(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_overflow)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
