"""Confidence bounds and scenario sweeps built on the queue-error estimator.

The sweep helpers produce flat row lists ready for CSV export: error
variance against probe fraction, against arrival rate, with and without
the overflow queue, and against the volume-to-capacity ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .headways import (
    DEFAULT_TAIL_EPS,
    DEFAULT_WINDOWS,
    calibrate_bunched,
    bunched_count_pmf,
    poisson_count_pmf,
)
from .pmf import Pmf
from .probe import error_variance
from .simulate import (
    ArrivalModel,
    BunchedArrivals,
    PoissonArrivals,
    SignalTiming,
    SimConfig,
    model_name,
    red_only_count_pmf,
    simulate_fixed_cycle,
)

# Below epsilon = sigma * sqrt(8/3) the tail bound switches branches.
VP_BREAKPOINT_RATIO = math.sqrt(8.0 / 3.0)

SWEEP_CSV_HEADER = ("model,lambda,rho,p,var_d,sigma,three_sigma,"
                    "pct_of_lambda,pct_of_mean_queue")
OVERFLOW_CSV_HEADER = ("model,lambda,rho,p,var_d_with_overflow,"
                       "var_d_without_overflow,pct_difference")

# Interval labels carry the unimodality caveat; the coverage statement
# below is a bound, not an exact level.
VP_INTERVAL_LABEL = "VP/3sigma (unimodality assumed)"


def vp_bound(epsilon: float, sigma: float) -> float:
    """Upper bound on P(|X - mean| > epsilon) for unimodal X with the
    given standard deviation (Vysochanskii-Petunin inequality).

    For epsilon >= sigma * sqrt(8/3) the bound is 4 sigma^2 / (9 epsilon^2);
    below the breakpoint it is 4 sigma^2 / (3 epsilon^2) - 1/3.  The two
    branches meet at 1/6.  The result is clamped to [0, 1].
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return 0.0
    if epsilon >= sigma * VP_BREAKPOINT_RATIO:
        bound = 4.0 * sigma * sigma / (9.0 * epsilon * epsilon)
    else:
        bound = 4.0 * sigma * sigma / (3.0 * epsilon * epsilon) - 1.0 / 3.0
    return min(1.0, max(0.0, bound))


@dataclass(frozen=True)
class SweepRow:
    """One scenario row of an error sweep.

    lam is the expected arrival count for the scenario's counting
    interval (cycle for signal runs, the window otherwise); rho is the
    volume-to-capacity ratio where a signal is involved, NaN otherwise.
    The two percent columns normalize the 3-sigma half width by lam and
    by the mean of the queue pmf respectively.
    """

    model: str
    lam: float
    rho: float
    p: float
    var_d: float
    sigma: float
    three_sigma: float
    pct_of_lambda: float
    pct_of_mean_queue: float


@dataclass(frozen=True)
class OverflowRow:
    """Paired error variances with and without the carried-over queue."""

    model: str
    lam: float
    rho: float
    p: float
    var_d_with_overflow: float
    var_d_without_overflow: float
    pct_difference: float


def _check_p_grid(p_grid) -> np.ndarray:
    grid = np.asarray(p_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("p_grid must be a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(grid)):
        raise ValueError("p_grid entries must be finite")
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise ValueError("p_grid entries must lie in [0, 1]")
    if np.any(np.diff(grid) < 0):
        raise ValueError("p_grid must be sorted ascending")
    return grid


def _row_for(pmf: Pmf, p: float, model: str, lam: float, rho: float,
             reference: float) -> SweepRow:
    summary = error_variance(pmf, p)
    mean_queue = pmf.mean()
    pct_lam = 100.0 * summary.three_sigma / reference if reference > 0 else float("nan")
    pct_mean = (100.0 * summary.three_sigma / mean_queue
                if mean_queue > 0 else float("nan"))
    return SweepRow(model=model, lam=lam, rho=rho, p=p,
                    var_d=summary.var_d, sigma=summary.sigma,
                    three_sigma=summary.three_sigma,
                    pct_of_lambda=pct_lam, pct_of_mean_queue=pct_mean)


def sweep_p(queue_pmf: Pmf, p_grid, reference_mean: float | None = None,
            *, model: str = "pmf", lam: float = float("nan"),
            rho: float = float("nan")) -> list[SweepRow]:
    """Error summary for each probe fraction in an ascending grid.

    reference_mean feeds the pct_of_lambda column; it defaults to lam.
    The var_d column is non-increasing along the grid.
    """
    grid = _check_p_grid(p_grid)
    reference = float(lam if reference_mean is None else reference_mean)
    if not reference > 0:
        reference = float("nan")
    return [_row_for(queue_pmf, float(p), model, lam, rho, reference)
            for p in grid]


def count_pmf_for(model: str, flow_vps: float, duration_s: float,
                  *, min_headway: float = 1.5, bunching_factor: float = 0.6,
                  n_windows: int = DEFAULT_WINDOWS,
                  tail_eps: float = DEFAULT_TAIL_EPS,
                  rng: np.random.Generator | None = None) -> Pmf:
    """Arrival-count pmf over a fixed window: analytic for poisson,
    Monte Carlo for bunched."""
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if model == "poisson":
        return poisson_count_pmf(flow_vps * duration_s, tail_eps=tail_eps)
    if model == "bunched":
        params = calibrate_bunched(flow_vps, min_headway, bunching_factor)
        return bunched_count_pmf(params, duration_s, n_windows=n_windows,
                                 rng=rng)
    raise ValueError(f"unknown model {model!r}; expected poisson or bunched")


def sweep_lambda(model: str, lambda_grid_vps, p_grid, duration_s: float,
                 *, min_headway: float = 1.5, bunching_factor: float = 0.6,
                 n_windows: int = DEFAULT_WINDOWS,
                 tail_eps: float = DEFAULT_TAIL_EPS,
                 seed: int = 0) -> list[SweepRow]:
    """Error sweep across arrival rates (veh/s) crossed with probe fractions.

    Each rate gets an independent child seed so rows could be computed
    in parallel; output order follows the grid either way.  Within a
    fixed p column the normalized error shrinks as the rate grows.
    """
    rates = np.asarray(lambda_grid_vps, dtype=np.float64)
    if rates.ndim != 1 or rates.size == 0:
        raise ValueError("lambda_grid_vps must be a non-empty sequence")
    if not np.all(np.isfinite(rates)) or rates.min() <= 0:
        raise ValueError("arrival rates must be positive and finite")
    grid = _check_p_grid(p_grid)
    children = np.random.SeedSequence(seed).spawn(rates.size)
    rows: list[SweepRow] = []
    for rate, child in zip(rates, children):
        rng = np.random.Generator(np.random.PCG64(child))
        pmf = count_pmf_for(model, float(rate), duration_s,
                            min_headway=min_headway,
                            bunching_factor=bunching_factor,
                            n_windows=n_windows, tail_eps=tail_eps, rng=rng)
        per_window = float(rate) * duration_s
        for p in grid:
            rows.append(_row_for(pmf, float(p), model, per_window,
                                 float("nan"), per_window))
    return rows


def overflow_comparison(timing: SignalTiming, model: ArrivalModel, p_grid,
                        *, n_cycles: int = 65_000, warmup_cycles: int = 200,
                        seed: int = 0, replications: int = 1,
                        n_windows: int = DEFAULT_WINDOWS,
                        tail_eps: float = DEFAULT_TAIL_EPS) -> list[OverflowRow]:
    """Paired error variances with and without the overflow queue.

    The with-overflow pmf comes from the full signal simulation; the
    without-overflow pmf is the bare red-interval arrival count.  Both
    sides share the seed (common random numbers), so the difference
    column isolates the overflow effect rather than sampling noise.
    Percent difference is 100 * (with - without) / with, defined as 0
    when both variances vanish (e.g. at p = 1).
    """
    grid = _check_p_grid(p_grid)
    config = SimConfig(arrival_model=model, n_cycles=n_cycles,
                       warmup_cycles=warmup_cycles, seed=seed,
                       replications=replications)
    result = simulate_fixed_cycle(timing, config)
    without = red_only_count_pmf(timing, config, n_windows=n_windows,
                                 tail_eps=tail_eps)
    lam = float(result.metadata["lambda_per_cycle"])
    rho = float(result.metadata["rho"])
    name = model_name(model)
    rows: list[OverflowRow] = []
    for p in grid:
        vw = error_variance(result.pmf, float(p)).var_d
        vo = error_variance(without, float(p)).var_d
        pct = 0.0 if vw == 0.0 else 100.0 * (vw - vo) / vw
        rows.append(OverflowRow(model=name, lam=lam, rho=rho, p=float(p),
                                var_d_with_overflow=vw,
                                var_d_without_overflow=vo,
                                pct_difference=pct))
    return rows


def rho_sweep(timing: SignalTiming, rho_grid, p_fixed: float = 0.5,
              *, lambdas_per_cycle=None, n_cycles: int = 65_000,
              warmup_cycles: int = 200, seed: int = 0, replications: int = 1,
              min_headway: float = 1.5,
              bunching_factor: float = 0.6) -> list[SweepRow]:
    """Error variance at a fixed probe fraction across congestion levels.

    Runs both arrival models per rho (bunched row first).  By default
    the per-cycle arrival rate is derived as rho times the service rate;
    pass lambdas_per_cycle to pin explicit rates instead (some published
    scenario tables round them independently of rho).
    """
    rhos = np.asarray(rho_grid, dtype=np.float64)
    if rhos.ndim != 1 or rhos.size == 0:
        raise ValueError("rho_grid must be a non-empty sequence")
    if not np.all(np.isfinite(rhos)) or rhos.min() <= 0 or rhos.max() >= 1:
        raise ValueError("rho_grid entries must lie in (0, 1)")
    if not 0.0 <= p_fixed <= 1.0:
        raise ValueError("p_fixed must lie in [0, 1]")
    if lambdas_per_cycle is None:
        lams = rhos * timing.service_rate
    else:
        lams = np.asarray(lambdas_per_cycle, dtype=np.float64)
        if lams.shape != rhos.shape:
            raise ValueError("lambdas_per_cycle must match rho_grid in length")
        if not np.all(np.isfinite(lams)) or lams.min() <= 0:
            raise ValueError("lambdas_per_cycle entries must be positive")
    children = np.random.SeedSequence(seed).spawn(2 * rhos.size)
    rows: list[SweepRow] = []
    for i, (rho, lam) in enumerate(zip(rhos, lams)):
        flow = float(lam) / timing.cycle_s
        models: list[ArrivalModel] = [
            BunchedArrivals(calibrate_bunched(flow, min_headway,
                                              bunching_factor)),
            PoissonArrivals(float(lam)),
        ]
        for j, model in enumerate(models):
            child_seed = int(children[2 * i + j].generate_state(1)[0])
            config = SimConfig(arrival_model=model, n_cycles=n_cycles,
                               warmup_cycles=warmup_cycles, seed=child_seed,
                               replications=replications)
            result = simulate_fixed_cycle(timing, config)
            rows.append(_row_for(result.pmf, p_fixed, model_name(model),
                                 float(lam), float(rho), float(lam)))
    return rows


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def format_sweep_csv(rows, extra_header: str = "",
                     extra_values=None) -> str:
    """Render sweep rows to CSV text (6 significant digits).

    extra_header/extra_values append comparison columns, one value tuple
    per row, used by the benchmark table commands.
    """
    header = SWEEP_CSV_HEADER + ("," + extra_header if extra_header else "")
    lines = [header]
    extras = extra_values if extra_values is not None else [()] * len(rows)
    if len(extras) != len(rows):
        raise ValueError("extra_values length must match rows")
    for row, extra in zip(rows, extras):
        cells = [row.model, _fmt(row.lam), _fmt(row.rho), _fmt(row.p),
                 _fmt(row.var_d), _fmt(row.sigma), _fmt(row.three_sigma),
                 _fmt(row.pct_of_lambda), _fmt(row.pct_of_mean_queue)]
        cells.extend(_fmt(v) for v in extra)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def format_overflow_csv(rows) -> str:
    lines = [OVERFLOW_CSV_HEADER]
    for row in rows:
        lines.append(",".join([
            row.model, _fmt(row.lam), _fmt(row.rho), _fmt(row.p),
            _fmt(row.var_d_with_overflow), _fmt(row.var_d_without_overflow),
            _fmt(row.pct_difference),
        ]))
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_sweep_csv(rows))


def write_overflow_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_overflow_csv(rows))
