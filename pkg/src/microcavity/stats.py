"""Dead-time and detection-efficiency corrections for photon-count statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from microcavity.errors import SaturationError, StatisticError
from microcavity.traces import CountTrace


@dataclass(frozen=True)
class DetectorSpec:
    dead_time: float = 44e-9  # s
    quantum_efficiency: float = 0.6
    path_transmission: float = 0.9

    def __post_init__(self):
        if self.dead_time < 0:
            raise ValueError("dead_time must be >= 0")
        for name in ("quantum_efficiency", "path_transmission"):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {val}")

    @property
    def efficiency(self) -> float:
        return self.quantum_efficiency * self.path_transmission


def dead_time_correct(m, bin_width, dead_time):
    """Non-paralyzable correction ``n = m / (1 - m*tau_d/tau)``."""
    m = np.asarray(m, dtype=float)
    busy = m * dead_time / bin_width
    if np.any(busy >= 1):
        raise SaturationError(
            f"dead-time fraction reaches {np.max(busy):.3g}; counts are saturated"
        )
    return m / (1 - busy)


def dead_time_saturate(n, bin_width, dead_time):
    """Forward map ``m = n / (1 + n*tau_d/tau)``; inverse of :func:`dead_time_correct`."""
    n = np.asarray(n, dtype=float)
    return n / (1 + n * dead_time / bin_width)


def normalized_variance(counts) -> float:
    """Var(n)/<n> with the unbiased sample variance."""
    counts = np.asarray(counts, dtype=float)
    if counts.size < 2:
        raise StatisticError("need at least two samples")
    mean = counts.mean()
    if not mean > 0:
        raise StatisticError("normalized variance is undefined for zero mean")
    return float(counts.var(ddof=1) / mean)


def efficiency_correct(f, detector_or_efficiency):
    """Undo binomial thinning: ``f_corr - 1 = (f - 1)/eta``."""
    if isinstance(detector_or_efficiency, DetectorSpec):
        eta = detector_or_efficiency.efficiency
    else:
        eta = float(detector_or_efficiency)
    if not 0 < eta <= 1:
        raise ValueError(f"overall efficiency must lie in (0, 1], got {eta}")
    return 1 + (np.asarray(f, dtype=float) - 1) / eta


def _sliding_fano(n, window):
    windows = np.lib.stride_tricks.sliding_window_view(n, window)
    mean = windows.mean(axis=1)
    var = windows.var(axis=1, ddof=1)
    if np.any(mean <= 0):
        raise StatisticError("a window has zero mean count")
    return var / mean


def fano_trace(trace: CountTrace, window: int = 100, detector: DetectorSpec | None = None, step: int = 1):
    """Sliding-window corrected normalized variance.

    Returns ``(times, f_corr)``; each time is the centre of its window. Raw
    counts are dead-time corrected per bin before the variance is taken.
    """
    if window < 8:
        raise ValueError("window must span at least 8 bins")
    if trace.counts.size < window:
        raise ValueError("trace shorter than one window")
    detector = detector or DetectorSpec()
    n = dead_time_correct(trace.counts, trace.bin_width, detector.dead_time)
    f = _sliding_fano(n, window)[::step]
    starts = np.arange(0, trace.counts.size - window + 1)[::step]
    times = trace.start_time + (starts + window / 2) * trace.bin_width
    return times, efficiency_correct(f, detector)


def across_drop_fano(traces, detector: DetectorSpec | None = None):
    """Normalized variance at each bin taken across drops instead of along time."""
    traces = list(traces)
    if len(traces) < 2:
        raise StatisticError("need at least two drops")
    detector = detector or DetectorSpec()
    stack = np.stack([
        dead_time_correct(tr.counts, tr.bin_width, detector.dead_time) for tr in traces
    ])
    mean = stack.mean(axis=0)
    var = stack.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(mean > 0, var / mean, np.nan)
    return traces[0].times, efficiency_correct(f, detector)
