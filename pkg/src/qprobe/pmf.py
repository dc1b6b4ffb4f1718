"""Finite-support probability mass functions over non-negative integers.

The Pmf type is the common currency of this package: arrival-count models
produce one, the signal simulator estimates one empirically, and the probe
estimator consumes one. Support is always a dense prefix 0..n_max of the
non-negative integers; values are plain float64 probabilities.
"""

from collections.abc import Iterable, Sequence

import numpy as np

# Largest support index any constructor will accept. Queue lengths in the
# scenarios this package targets stay well below 100; the cap only guards
# against runaway truncation loops.
MAX_SUPPORT = 10_000

# An externally supplied probability vector is accepted if its total mass is
# within this tolerance of 1 (then renormalized exactly). Loose enough to
# survive a CSV round-trip at 12+ significant digits.
SUM_TOLERANCE = 1e-9

CSV_HEADER = "n,prob"


class Pmf:
    """Immutable pmf over {0, 1, ..., n_max} with trailing zeros trimmed."""

    __slots__ = ("_probs",)

    def __init__(self, probs: Iterable[float]):
        arr = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs,
                         dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("pmf needs a non-empty 1-D probability sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("pmf entries must be finite")
        neg = np.nonzero(arr < 0)[0]
        if neg.size:
            raise ValueError(f"negative probability at index {neg[0]}")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within {SUM_TOLERANCE}")
        arr = arr / total
        arr = _trim_trailing_zeros(arr)
        if arr.size - 1 > MAX_SUPPORT:
            raise ValueError(f"support exceeds the cap of {MAX_SUPPORT}")
        arr.flags.writeable = False
        self._probs = arr

    @classmethod
    def from_weights(cls, weights: Iterable[float]) -> "Pmf":
        """Normalize non-negative weights into a pmf.

        Rejects negative entries and all-zero input, naming the offending
        index in the error message.
        """
        arr = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights,
                         dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("need a non-empty 1-D weight sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite")
        neg = np.nonzero(arr < 0)[0]
        if neg.size:
            raise ValueError(f"negative weight at index {neg[0]}")
        total = arr.sum()
        if total <= 0.0:
            raise ValueError("all weights are zero; nothing to normalize")
        return cls(arr / total)

    @classmethod
    def from_samples(cls, counts: Sequence[int] | np.ndarray) -> "Pmf":
        """Empirical relative-frequency pmf of observed non-negative counts."""
        arr = np.asarray(counts)
        if arr.size == 0:
            raise ValueError("need at least one sample")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(arr)
            if not np.allclose(arr, rounded):
                raise ValueError("samples must be integers")
            arr = rounded.astype(np.int64)
        if arr.min() < 0:
            raise ValueError("samples must be non-negative")
        freq = np.bincount(arr.ravel()) / arr.size
        return cls(freq)

    @classmethod
    def point_mass(cls, n: int) -> "Pmf":
        if n < 0:
            raise ValueError("support index must be non-negative")
        probs = np.zeros(n + 1)
        probs[n] = 1.0
        return cls(probs)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def n_max(self) -> int:
        return self._probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self._probs.size)

    def __len__(self) -> int:
        return self._probs.size

    def __getitem__(self, n: int) -> float:
        if 0 <= n < self._probs.size:
            return float(self._probs[n])
        return 0.0

    def __repr__(self) -> str:
        return f"Pmf(n_max={self.n_max}, mean={self.mean():.4g})"

    def mean(self) -> float:
        return float(np.dot(self.support, self._probs))

    def variance(self) -> float:
        m = self.mean()
        second = float(np.dot(self.support.astype(np.float64) ** 2, self._probs))
        return max(0.0, second - m * m)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self._probs)

    def truncate(self, tail_eps: float) -> "Pmf":
        """Shortest prefix holding at least 1 - tail_eps mass, renormalized."""
        if not 0.0 < tail_eps < 1.0:
            raise ValueError("tail_eps must be in (0, 1)")
        cum = np.cumsum(self._probs)
        cut = int(np.searchsorted(cum, 1.0 - tail_eps, side="left"))
        cut = min(cut, self._probs.size - 1)
        return Pmf.from_weights(self._probs[: cut + 1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(format_csv(self))

    @classmethod
    def from_csv(cls, path) -> "Pmf":
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != CSV_HEADER:
            raise ValueError(f"expected header {CSV_HEADER!r}")
        probs = []
        for ln in lines[1:]:
            n_str, p_str = ln.split(",")
            n = int(n_str)
            if n != len(probs):
                raise ValueError(f"support must be contiguous from 0, got index {n}")
            probs.append(float(p_str))
        return cls(probs)


def format_csv(pmf: Pmf) -> str:
    """Render the pmf CSV wire format (header `n,prob`, 15 significant digits)."""
    rows = [CSV_HEADER]
    rows.extend(f"{n},{p:.15g}" for n, p in enumerate(pmf.probs))
    return "\n".join(rows) + "\n"


def _trim_trailing_zeros(arr: np.ndarray) -> np.ndarray:
    nz = np.nonzero(arr)[0]
    last = int(nz[-1]) if nz.size else 0
    return np.array(arr[: last + 1])
