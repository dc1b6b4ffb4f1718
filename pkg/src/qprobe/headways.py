"""Arrival headway models: Poisson counts and bunched-exponential headways.

Two arrival processes are supported. Negative-exponential headways give the
analytic Poisson count pmf. The bunched-exponential model splits traffic into
followers that track at exactly the minimum headway and free vehicles whose
extra gap is exponential; its count distribution has no convenient closed
form, so it is estimated by counting a long simulated stream over fixed
windows.
"""

import math
from dataclasses import dataclass

import numpy as np

from .pmf import MAX_SUPPORT, Pmf

DEFAULT_TAIL_EPS = 1e-12
DEFAULT_WINDOWS = 1_000_000

# Arrivals drawn per vectorized batch while streaming headways.
_CHUNK = 1 << 17


@dataclass(frozen=True)
class BunchedParams:
    """Calibrated bunched-exponential headway parameters.

    flow          arrival rate, vehicles/second
    min_headway   spacing of bunched followers, seconds
    bunching_factor  dimensionless calibration constant (0 disables bunching)
    free_fraction    derived share of free (unbunched) vehicles
    decay_rate       derived exponential rate of the free extra gap, 1/second

    The derived pair keeps the mean headway at exactly 1/flow:
    min_headway + free_fraction / decay_rate = 1 / flow.
    """

    flow: float
    min_headway: float
    bunching_factor: float
    free_fraction: float
    decay_rate: float

    def __post_init__(self):
        if self.flow <= 0:
            raise ValueError("flow must be positive")
        if self.min_headway <= 0:
            raise ValueError("min_headway must be positive")
        if self.bunching_factor < 0:
            raise ValueError("bunching_factor must be non-negative")
        if self.min_headway * self.flow >= 1.0:
            raise ValueError(
                "saturated stream: min_headway * flow must stay below 1 "
                f"(got {self.min_headway * self.flow:.4g})"
            )
        if not 0.0 < self.free_fraction <= 1.0:
            raise ValueError("free_fraction must be in (0, 1]")
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be positive")

    @property
    def mean_headway(self) -> float:
        return 1.0 / self.flow


def calibrate_bunched(flow: float, min_headway: float = 1.5,
                      bunching_factor: float = 0.6) -> BunchedParams:
    """Derive the free-vehicle share and gap decay rate from the flow.

    free_fraction = exp(-bunching_factor * min_headway * flow)
    decay_rate = free_fraction * flow / (1 - min_headway * flow)
    """
    if flow <= 0:
        raise ValueError("flow must be positive")
    if min_headway <= 0:
        raise ValueError("min_headway must be positive")
    if bunching_factor < 0:
        raise ValueError("bunching_factor must be non-negative")
    occupancy = min_headway * flow
    if occupancy >= 1.0:
        raise ValueError(
            f"saturated stream: min_headway * flow = {occupancy:.4g} >= 1"
        )
    free_fraction = math.exp(-bunching_factor * occupancy)
    decay_rate = free_fraction * flow / (1.0 - occupancy)
    return BunchedParams(flow=flow, min_headway=min_headway,
                         bunching_factor=bunching_factor,
                         free_fraction=free_fraction, decay_rate=decay_rate)


def headway_cdf(params: BunchedParams, t: np.ndarray | float) -> np.ndarray:
    """P(headway <= t): zero below the minimum headway, then a shifted
    exponential scaled by the free share (an atom of size 1 - free_fraction
    sits at the minimum headway itself)."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(
        t < params.min_headway,
        0.0,
        1.0 - params.free_fraction
        * np.exp(-params.decay_rate * (t - params.min_headway)),
    )
    return out


def poisson_count_pmf(lambda_per_interval: float,
                      tail_eps: float = DEFAULT_TAIL_EPS) -> Pmf:
    """Poisson pmf truncated once cumulative mass reaches 1 - tail_eps.

    Uses the stable recurrence p(n) = p(n-1) * rate / n from p(0) = exp(-rate).
    """
    rate = lambda_per_interval
    if rate <= 0:
        raise ValueError("lambda_per_interval must be positive")
    if not 0.0 < tail_eps < 1.0:
        raise ValueError("tail_eps must be in (0, 1)")
    p = math.exp(-rate)
    if p == 0.0:
        raise ValueError("rate too large for double precision (exp(-rate) underflows)")
    target = 1.0 - tail_eps
    probs = [p]
    cum = p
    n = 0
    while cum < target and n < MAX_SUPPORT:
        n += 1
        p *= rate / n
        probs.append(p)
        cum += p
    return Pmf.from_weights(probs)


def sample_bunch_size(params: BunchedParams, rng: np.random.Generator) -> int:
    """Geometric bunch size on {1, 2, ...} with success prob free_fraction."""
    return int(rng.geometric(params.free_fraction))


def sample_headway(params: BunchedParams, rng: np.random.Generator) -> float:
    """One headway draw: the bare minimum headway for a follower, or the
    minimum plus an exponential gap for a free vehicle.

    Followers return the minimum headway bit-exactly; tests may compare
    with ==.
    """
    if rng.random() < params.free_fraction:
        return params.min_headway + rng.exponential(1.0 / params.decay_rate)
    return params.min_headway


def sample_headways(params: BunchedParams, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Vectorized headway draws; follower entries equal min_headway exactly."""
    free = rng.random(n) < params.free_fraction
    gaps = rng.exponential(1.0 / params.decay_rate, n)
    return params.min_headway + np.where(free, gaps, 0.0)


def bunched_count_pmf(params: BunchedParams, duration: float,
                      n_windows: int = DEFAULT_WINDOWS,
                      rng: np.random.Generator | None = None,
                      burn_in_arrivals: int = 1000) -> Pmf:
    """Empirical pmf of arrivals per window of the given duration.

    One long stationary stream is generated and split into consecutive
    non-overlapping windows; the first window opens at the last burn-in
    arrival, so window counts are free of start-up bias.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if n_windows < 10_000:
        raise ValueError("need at least 10,000 windows for a usable estimate")
    if rng is None:
        rng = np.random.default_rng()

    counts = np.zeros(n_windows, dtype=np.int64)
    t = 0.0
    seen = 0
    origin = None  # window 0 opens here, exclusive
    horizon = math.inf
    while t < horizon:
        headways = sample_headways(params, _CHUNK, rng)
        epochs = t + np.cumsum(headways)
        t = float(epochs[-1])
        if origin is None:
            if seen + epochs.size < burn_in_arrivals:
                seen += epochs.size
                continue
            origin = float(epochs[burn_in_arrivals - 1 - seen])
            horizon = origin + n_windows * duration
        rel = epochs - origin
        sel = (rel > 0.0) & (rel < n_windows * duration)
        idx = np.floor_divide(rel[sel], duration).astype(np.int64)
        np.add.at(counts, idx, 1)
    return Pmf.from_samples(counts)
