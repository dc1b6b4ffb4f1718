"""Scikit-learn style wrapper around the probe-position queue predictor.

The estimator learns an empirical end-of-red queue distribution from
observed counts (or accepts a known one), then predicts total queue
length from the position of the deepest probe vehicle.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .pmf import Pmf
from .probe import (
    conditional_pmf,
    error_variance,
    expected_queue,
)


def _as_positions(X) -> np.ndarray:
    arr = check_array(X, ensure_2d=False, dtype=None)
    arr = np.asarray(arr)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError("expected a 1-d array or single-column matrix "
                         f"of probe positions, got shape {arr.shape}")
    values = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("probe positions must be finite")
    rounded = np.rint(values)
    if np.any(np.abs(values - rounded) > 0) or np.any(rounded < 0):
        raise ValueError("probe positions must be non-negative integers")
    return rounded.astype(np.int64)


class QueueLengthPredictor(RegressorMixin, BaseEstimator):
    """Predict total queue length from the deepest probe position.

    Parameters
    ----------
    probe_fraction : float, default 0.5
        Probability that any queued vehicle reports its position.
    queue_pmf : Pmf or None, default None
        Known queue-length distribution.  When None, fit() builds an
        empirical pmf from observed end-of-red queue counts.

    After fitting, queue_pmf_ holds the working distribution and
    error_ its prediction-error summary at the configured fraction.
    """

    def __init__(self, probe_fraction: float = 0.5,
                 queue_pmf: Pmf | None = None):
        self.probe_fraction = probe_fraction
        self.queue_pmf = queue_pmf

    def fit(self, X=None, y=None):
        """Learn the queue distribution from counts in X.

        X is ignored (and may be None) when a queue_pmf parameter was
        supplied.  y is always ignored; it exists for API compatibility.
        """
        if not 0.0 <= float(self.probe_fraction) <= 1.0:
            raise ValueError("probe_fraction must be in [0, 1]")
        if self.queue_pmf is not None:
            if not isinstance(self.queue_pmf, Pmf):
                raise TypeError("queue_pmf must be a Pmf")
            self.queue_pmf_ = self.queue_pmf
        else:
            if X is None:
                raise ValueError("fit requires queue-count samples when "
                                 "no queue_pmf parameter is set")
            counts = _as_positions(X)
            self.queue_pmf_ = Pmf.from_samples(counts)
        self.error_ = error_variance(self.queue_pmf_, self.probe_fraction,
                                     reference_mean=self.queue_pmf_.mean())
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        """Conditional expected queue for each probe position in X."""
        check_is_fitted(self, "queue_pmf_")
        positions = _as_positions(X)
        return np.array([
            expected_queue(self.queue_pmf_, self.probe_fraction, int(lp))
            for lp in positions
        ])

    def predict_interval(self, X) -> np.ndarray:
        """Prediction plus/minus three error sigmas, as an (n, 2) array.

        Coverage is at least 1 - 4/81 when the prediction error is
        unimodal; the lower edge is clamped at the observed position
        (the queue cannot be shorter than the deepest probe).
        """
        check_is_fitted(self, "queue_pmf_")
        positions = _as_positions(X)
        center = self.predict(positions)
        half = 3.0 * self.error_.sigma
        lower = np.maximum(center - half, positions.astype(np.float64))
        upper = center + half
        return np.column_stack([lower, upper])

    def conditional_distribution(self, last_probe: int) -> Pmf:
        """Full conditional queue pmf for one probe position."""
        check_is_fitted(self, "queue_pmf_")
        return conditional_pmf(self.queue_pmf_, self.probe_fraction,
                               int(last_probe))
