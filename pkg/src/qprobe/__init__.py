"""Queue-length prediction at signalized intersections from probe vehicles.

The package estimates how many vehicles are queued at a red light given
the position of the deepest reporting (probe) vehicle, quantifies the
prediction error as a function of the probe fraction, and compares
memoryless against bunched arrival headways with a fixed-cycle
Monte-Carlo signal simulator.
"""

__version__ = "0.1.0"

from .analysis import (
    OverflowRow,
    SweepRow,
    overflow_comparison,
    rho_sweep,
    sweep_lambda,
    sweep_p,
    vp_bound,
)
from .estimator import QueueLengthPredictor
from .headways import (
    BunchedParams,
    bunched_count_pmf,
    calibrate_bunched,
    headway_cdf,
    poisson_count_pmf,
    sample_headways,
)
from .pmf import Pmf
from .probe import (
    ErrorSummary,
    brute_force_error_variance,
    conditional_pmf,
    conditional_variance,
    error_variance,
    expected_queue,
    last_probe_marginal,
)
from .simulate import (
    BunchedArrivals,
    PoissonArrivals,
    SignalTiming,
    SimConfig,
    SimResult,
    red_only_count_pmf,
    simulate_fixed_cycle,
)

__all__ = [
    "BunchedArrivals",
    "BunchedParams",
    "ErrorSummary",
    "OverflowRow",
    "Pmf",
    "PoissonArrivals",
    "QueueLengthPredictor",
    "SignalTiming",
    "SimConfig",
    "SimResult",
    "SweepRow",
    "brute_force_error_variance",
    "bunched_count_pmf",
    "calibrate_bunched",
    "conditional_pmf",
    "conditional_variance",
    "error_variance",
    "expected_queue",
    "headway_cdf",
    "last_probe_marginal",
    "overflow_comparison",
    "poisson_count_pmf",
    "red_only_count_pmf",
    "rho_sweep",
    "sample_headways",
    "simulate_fixed_cycle",
    "sweep_lambda",
    "sweep_p",
    "vp_bound",
]
