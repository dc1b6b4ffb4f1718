"""Queue-length inference from the position of the deepest probe vehicle.

Each queued vehicle is independently a probe with a known fraction. Seeing
the deepest probe at position `last_probe` (counted from the stop bar, the
probe itself included) updates the queue-length distribution: every
candidate total n >= last_probe is reweighted by (1 - probe_fraction)^n,
the chance that all vehicles beyond the last probe are unreported. All
results hold for an arbitrary input pmf.

The prediction error (actual total minus conditional expectation) has mean
zero; its variance, the probe-level accuracy figure for a scenario, is the
marginal-weighted average of the conditional variances over all possible
last-probe positions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .pmf import Pmf

BRUTE_FORCE_MAX_SUPPORT = 20


@dataclass(frozen=True)
class ErrorSummary:
    """Prediction-error variance and derived confidence half-widths."""

    var_d: float
    sigma: float
    three_sigma: float
    normalized_pct: float | None = None


def _validate_fraction(probe_fraction: float) -> float:
    p = float(probe_fraction)
    if not 0.0 <= p <= 1.0:
        raise ValueError("probe_fraction must be in [0, 1]")
    return p


def _validate_position(queue_pmf: Pmf, last_probe: int) -> int:
    lp = int(last_probe)
    if lp < 0:
        raise ValueError("last_probe must be non-negative")
    if lp > queue_pmf.n_max:
        raise ValueError(
            f"last_probe {lp} is beyond the pmf support (n_max={queue_pmf.n_max})"
        )
    return lp


def conditional_pmf(queue_pmf: Pmf, probe_fraction: float, last_probe: int) -> Pmf:
    """Distribution of the total queue given the deepest probe position.

    Support starts at last_probe (the probe itself is part of the queue);
    mass at n is proportional to (1 - probe_fraction)^n * P(N = n). At
    probe_fraction = 1 the formula degenerates and the analytic limit, a
    point mass at last_probe, is returned.
    """
    p = _validate_fraction(probe_fraction)
    lp = _validate_position(queue_pmf, last_probe)
    if p == 1.0:
        return Pmf.point_mass(lp)
    tail = queue_pmf.probs[lp:]
    # Common factor (1-p)^lp is dropped; it cancels in the normalization.
    weights = tail * np.power(1.0 - p, np.arange(tail.size))
    total = weights.sum()
    if total <= 0.0:
        raise ValueError(f"no queue mass at or beyond position {lp}")
    out = np.zeros(queue_pmf.n_max + 1)
    out[lp:] = weights / total
    return Pmf(out)


def expected_queue(queue_pmf: Pmf, probe_fraction: float, last_probe: int) -> float:
    """Conditional expected total queue; never below last_probe."""
    return conditional_pmf(queue_pmf, probe_fraction, last_probe).mean()


def conditional_variance(queue_pmf: Pmf, probe_fraction: float, last_probe: int) -> float:
    return conditional_pmf(queue_pmf, probe_fraction, last_probe).variance()


def last_probe_marginal(queue_pmf: Pmf, probe_fraction: float) -> Pmf:
    """Marginal pmf of the deepest probe position.

    P(L = 0) = sum_n (1-p)^n P(N=n); for l >= 1,
    P(L = l) = p * sum_{n>=l} (1-p)^(n-l) P(N=n). Computed with a backward
    recurrence on the discounted suffix sums, so no power underflows.
    """
    p = _validate_fraction(probe_fraction)
    suffix = _discounted_suffix_sums(queue_pmf.probs, 1.0 - p)
    marginal = p * suffix
    marginal[0] = suffix[0]
    return Pmf(marginal)


def error_variance(queue_pmf: Pmf, probe_fraction: float,
                   reference_mean: float | None = None) -> ErrorSummary:
    """Variance of the queue-prediction error over all probe outcomes.

    Averages the conditional variance over the last-probe marginal. The
    optional reference mean (an arrival rate or an expected queue) turns
    the 3-sigma half-width into a percent figure.
    """
    p = _validate_fraction(probe_fraction)

    def summarize(var_d: float) -> ErrorSummary:
        sigma = math.sqrt(var_d)
        pct = (None if reference_mean is None
               else 100.0 * 3.0 * sigma / reference_mean)
        return ErrorSummary(var_d=var_d, sigma=sigma,
                            three_sigma=3.0 * sigma, normalized_pct=pct)

    # Analytic limits: no information at p = 0, full observation at p = 1.
    if p == 0.0:
        return summarize(queue_pmf.variance())
    if p == 1.0:
        return summarize(0.0)

    probs = queue_pmf.probs
    q = 1.0 - p
    s0 = _discounted_suffix_sums(probs, q)
    s1 = _discounted_suffix_sums(probs * queue_pmf.support, q)
    s2 = _discounted_suffix_sums(probs * queue_pmf.support.astype(np.float64) ** 2, q)

    var_d = 0.0
    if s0[0] > 0.0:
        var_d += s2[0] - s1[0] ** 2 / s0[0]
    pos = s0[1:] > 0.0
    var_d += p * float(np.sum(s2[1:][pos] - s1[1:][pos] ** 2 / s0[1:][pos]))
    return summarize(max(0.0, var_d))


def brute_force_error_variance(queue_pmf: Pmf, probe_fraction: float) -> float:
    """Exact error variance by enumerating every probe marking.

    Walks all 2^n probe/non-probe assignments for every support point n,
    groups outcomes by the realized deepest-probe position, and takes the
    weighted variance of (actual - group mean). Deliberately independent of
    the marginal/suffix-sum route; limited to small supports.
    """
    p = _validate_fraction(probe_fraction)
    n_max = queue_pmf.n_max
    if n_max > BRUTE_FORCE_MAX_SUPPORT:
        raise ValueError(
            f"support too large for enumeration (n_max={n_max} > {BRUTE_FORCE_MAX_SUPPORT})"
        )

    outcomes = []  # (last-probe position, joint weight, queue total)
    for n, prob_n in enumerate(queue_pmf.probs):
        if prob_n == 0.0:
            continue
        if n == 0:
            outcomes.append((np.zeros(1, dtype=np.int64), np.array([prob_n]), 0))
            continue
        for marks in _all_markings(n):
            n_probes = marks.sum(axis=1)
            positions = (marks * np.arange(1, n + 1)).max(axis=1)
            weights = prob_n * p ** n_probes * (1.0 - p) ** (n - n_probes)
            outcomes.append((positions, weights, n))

    sum_w = np.zeros(n_max + 1)
    sum_wn = np.zeros(n_max + 1)
    for positions, weights, n in outcomes:
        np.add.at(sum_w, positions, weights)
        np.add.at(sum_wn, positions, weights * n)
    group_mean = np.divide(sum_wn, sum_w, out=np.zeros_like(sum_w), where=sum_w > 0)

    mean_d = 0.0
    mean_d2 = 0.0
    for positions, weights, n in outcomes:
        d = n - group_mean[positions]
        mean_d += float(np.dot(weights, d))
        mean_d2 += float(np.dot(weights, d * d))
    return mean_d2 - mean_d ** 2


def _all_markings(n: int, chunk: int = 1 << 16):
    """Yield every probe/non-probe assignment of n vehicles as 0/1 rows.

    Row m of the full enumeration is the binary expansion of m; chunking
    keeps peak memory flat for the larger supports.
    """
    shifts = np.arange(n, dtype=np.uint32)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint32)
        yield ((masks[:, None] >> shifts) & 1).astype(np.int64)


def _discounted_suffix_sums(values: np.ndarray, q: float) -> np.ndarray:
    """s[l] = sum_{n >= l} q^(n-l) * values[n], by backward recurrence."""
    out = np.empty_like(values, dtype=np.float64)
    acc = 0.0
    for i in range(values.size - 1, -1, -1):
        acc = values[i] + q * acc
        out[i] = acc
    return out
