"""Monte-Carlo fixed-cycle traffic signal simulator.

Produces the equilibrium distribution of the total queue at the end of each
red interval, overflow (vehicles left unserved at the end of green) included.

Event rules, fixed for reproducibility:
  - One continuous stationary arrival stream spans the whole run; cycle
    boundaries never restart it, so bunches survive across cycles.
  - A cycle is red first, then green. Queued vehicles stack vertically:
    every arrival during red joins the queue instantly.
  - Departure slots sit at green onset and every service headway after it,
    strictly inside the green; a slot serves one vehicle if the queue is
    non-empty at that instant. Arrivals tie-break before departures.
  - Arrivals during green join the queue only while it is non-empty; once
    the queue empties, later green arrivals pass without stopping.
  - The recorded total is the queue at the end-of-red instant; whatever
    remains at the end of green carries into the next cycle as overflow.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .headways import (
    DEFAULT_TAIL_EPS,
    DEFAULT_WINDOWS,
    BunchedParams,
    bunched_count_pmf,
    poisson_count_pmf,
    sample_headways,
)
from .pmf import Pmf

RNG_NAME = "pcg64"

_CHUNK = 1 << 17


@dataclass(frozen=True)
class SignalTiming:
    """Fixed-cycle geometry; red and green must tile the cycle exactly."""

    cycle_s: float = 90.0
    red_s: float = 45.0
    green_s: float = 45.0
    service_headway_s: float = 2.0

    def __post_init__(self):
        for name in ("cycle_s", "red_s", "green_s", "service_headway_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.red_s + self.green_s - self.cycle_s) > 1e-9:
            raise ValueError("red_s + green_s must equal cycle_s")

    @property
    def service_rate(self) -> float:
        """Vehicles serviceable per cycle (green duration over service headway)."""
        return self.green_s / self.service_headway_s

    @property
    def departure_slots(self) -> int:
        """Count of departure instants k * service_headway < green_s."""
        ratio = self.green_s / self.service_headway_s
        if abs(ratio - round(ratio)) < 1e-9:
            return int(round(ratio))
        return int(math.ceil(ratio))


@dataclass(frozen=True)
class PoissonArrivals:
    """Negative-exponential headways at a mean of per_cycle arrivals/cycle."""

    per_cycle: float

    def __post_init__(self):
        if self.per_cycle <= 0:
            raise ValueError("per_cycle must be positive")


@dataclass(frozen=True)
class BunchedArrivals:
    """Bunched-exponential headways; flow is carried by the calibrated params."""

    params: BunchedParams


ArrivalModel = PoissonArrivals | BunchedArrivals


def model_name(model: ArrivalModel) -> str:
    return "poisson" if isinstance(model, PoissonArrivals) else "bunched"


def model_flow_vps(model: ArrivalModel, timing: SignalTiming) -> float:
    if isinstance(model, PoissonArrivals):
        return model.per_cycle / timing.cycle_s
    return model.params.flow


@dataclass(frozen=True)
class SimConfig:
    """Run controls for the simulator."""

    arrival_model: ArrivalModel
    n_cycles: int = 65_000
    warmup_cycles: int = 200
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if self.warmup_cycles < 0:
            raise ValueError("warmup_cycles must be non-negative")
        if self.n_cycles <= self.warmup_cycles:
            raise ValueError("n_cycles must exceed warmup_cycles")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")


@dataclass
class SimResult:
    pmf: Pmf
    metadata: dict = field(default_factory=dict)


def check_undersaturated(timing: SignalTiming, model: ArrivalModel) -> float:
    """Return the volume-to-capacity ratio, rejecting saturated demand."""
    per_cycle = model_flow_vps(model, timing) * timing.cycle_s
    rho = per_cycle / timing.service_rate
    if rho >= 1.0:
        raise ValueError(
            f"oversaturated: demand/capacity ratio {rho:.3f} >= 1 is outside model scope"
        )
    return rho


def generate_arrival_epochs(model: ArrivalModel, timing: SignalTiming,
                            total_time: float,
                            rng: np.random.Generator) -> np.ndarray:
    """All arrival instants in [0, total_time) from one continuous stream."""
    if isinstance(model, PoissonArrivals):
        mean_gap = timing.cycle_s / model.per_cycle

        def draw(n):
            return rng.exponential(mean_gap, n)
    else:
        params = model.params

        def draw(n):
            return sample_headways(params, n, rng)

    chunks = []
    t = 0.0
    while t < total_time:
        epochs = t + np.cumsum(draw(_CHUNK))
        t = float(epochs[-1])
        chunks.append(epochs)
    epochs = np.concatenate(chunks)
    return epochs[epochs < total_time]


def _run_once(timing: SignalTiming, model: ArrivalModel, n_cycles: int,
              warmup: int, rng: np.random.Generator):
    """One replication; returns recorded queue totals, overflow trace and
    the run's conservation counters."""
    cycle = timing.cycle_s
    epochs = generate_arrival_epochs(model, timing, n_cycles * cycle, rng)

    starts = np.arange(n_cycles) * cycle
    i_start = np.searchsorted(epochs, starts, side="left")
    i_red_end = np.searchsorted(epochs, starts + timing.red_s, side="left")
    i_end = np.searchsorted(epochs, starts + cycle, side="left")
    red_counts = i_red_end - i_start

    n_slots = timing.departure_slots
    slot_offsets = np.arange(n_slots) * timing.service_headway_s
    slot_index = np.arange(n_slots)

    recorded = np.empty(n_cycles - warmup, dtype=np.int64)
    overflow_trace = np.empty(n_cycles - warmup, dtype=np.int64)
    overflow = 0
    joined = 0
    departed = 0
    for c in range(n_cycles):
        queue_at_red_end = overflow + int(red_counts[c])
        joined += int(red_counts[c])
        g0, g1 = i_red_end[c], i_end[c]
        if queue_at_red_end == 0:
            overflow = 0
        else:
            offsets = epochs[g0:g1] - (starts[c] + timing.red_s)
            before_slot = np.searchsorted(offsets, slot_offsets, side="right")
            pending = queue_at_red_end + before_slot - slot_index
            empty_hits = np.nonzero(pending == 1)[0]
            if empty_hits.size:
                first = int(empty_hits[0])
                departed += first + 1
                joined += int(before_slot[first])
                overflow = 0
            else:
                green_arrivals = int(g1 - g0)
                departed += n_slots
                joined += green_arrivals
                overflow = queue_at_red_end + green_arrivals - n_slots
        if c >= warmup:
            recorded[c - warmup] = queue_at_red_end
            overflow_trace[c - warmup] = overflow
    return recorded, overflow_trace, joined, departed, overflow


def simulate_fixed_cycle(timing: SignalTiming, config: SimConfig) -> SimResult:
    """Equilibrium end-of-red queue pmf, pooled over replications."""
    rho = check_undersaturated(timing, config.arrival_model)
    model = config.arrival_model
    seeds = np.random.SeedSequence(config.seed).spawn(config.replications)

    samples = []
    overflow_samples = []
    joined = departed = final_queue = 0
    for seq in seeds:
        rng = np.random.Generator(np.random.PCG64(seq))
        rec, over, j, d, fq = _run_once(timing, model, config.n_cycles,
                                        config.warmup_cycles, rng)
        samples.append(rec)
        overflow_samples.append(over)
        joined += j
        departed += d
        final_queue += fq
    pooled = np.concatenate(samples)
    overflow_pooled = np.concatenate(overflow_samples)

    metadata = {
        "model": model_name(model),
        "lambda_per_cycle": model_flow_vps(model, timing) * timing.cycle_s,
        "lambda_vps": model_flow_vps(model, timing),
        "rho": rho,
        "cycle_s": timing.cycle_s,
        "red_s": timing.red_s,
        "green_s": timing.green_s,
        "service_headway_s": timing.service_headway_s,
        "seed": config.seed,
        "generator": RNG_NAME,
        "n_cycles": config.n_cycles,
        "warmup_cycles": config.warmup_cycles,
        "replications": config.replications,
        "n_samples": int(pooled.size),
        "mean_queue": float(pooled.mean()),
        "var_queue": float(pooled.var()),
        "mean_overflow": float(overflow_pooled.mean()),
        "arrivals_joined": int(joined),
        "departures": int(departed),
        "final_queue": int(final_queue),
    }
    if isinstance(model, BunchedArrivals):
        p = model.params
        metadata.update(delta_s=p.min_headway, b=p.bunching_factor,
                        phi=p.free_fraction, theta_per_s=p.decay_rate)
    per_rep = config.n_cycles - config.warmup_cycles
    if per_rep < 1000:
        metadata["warning"] = (
            f"only {per_rep} post-warmup cycles per replication; "
            "equilibrium estimate may be unreliable"
        )
    return SimResult(pmf=Pmf.from_samples(pooled), metadata=metadata)


def red_only_count_pmf(timing: SignalTiming, config: SimConfig,
                       n_windows: int = DEFAULT_WINDOWS,
                       tail_eps: float = DEFAULT_TAIL_EPS) -> Pmf:
    """Arrival-count pmf over a bare red interval, no queue carryover.

    Analytic for Poisson arrivals; Monte-Carlo window counting (sharing the
    config seed, so comparisons against the full simulation use common
    random numbers) for the bunched model.
    """
    check_undersaturated(timing, config.arrival_model)
    model = config.arrival_model
    if isinstance(model, PoissonArrivals):
        return poisson_count_pmf(model.per_cycle * timing.red_s / timing.cycle_s,
                                 tail_eps)
    rng = np.random.default_rng(config.seed)
    return bunched_count_pmf(model.params, timing.red_s, n_windows, rng)
