"""Exhaustive (boundary, threshold) search for the smallest Fisher p-value.

For a window ``[start, end)`` of a return series, every boundary ``tau`` splits
it into ``[start, tau)`` and ``[tau, end)``; every threshold ``x_th`` splits
values into ``> x_th`` and ``<= x_th``. The pair with the smallest two-sided p
is the change point estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from fisherseg import _kernels
from fisherseg.exact_test import (
    ContingencyTable,
    LogFactorialTable,
    PValueVariant,
    build_log_factorials,
)

__all__ = [
    "AllUniqueValues",
    "QuantileGrid",
    "ReturnSeries",
    "ScanConfig",
    "ScanResult",
    "candidate_thresholds",
    "count_quadrants",
    "min_p_scan",
]

AUTO_GRID_ABOVE = 500
AUTO_GRID_POINTS = 201


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Ordered observations with optional per-observation labels (e.g. dates)."""

    values: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("series must be a nonempty one-dimensional array")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValueError(f"non-finite value at index {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != values.size:
                raise ValueError(f"{len(labels)} labels for {values.size} values")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, ReturnSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values) and self.labels == other.labels

    def label(self, i: int):
        return i if self.labels is None else self.labels[i]


@dataclass(frozen=True)
class AllUniqueValues:
    pass


@dataclass(frozen=True)
class QuantileGrid:
    q_points: int = AUTO_GRID_POINTS

    def __post_init__(self):
        if self.q_points < 3:
            raise ValueError("QuantileGrid needs at least 3 points")


ThresholdMode = Union[AllUniqueValues, QuantileGrid]


@dataclass(frozen=True)
class ScanConfig:
    """Scan settings.

    ``threshold_mode=None`` means: all distinct values for windows of at most
    500 points, a 201-point quantile grid above that. Decided per window.
    """

    min_side: int = 2
    threshold_mode: Optional[ThresholdMode] = None
    variant: PValueVariant = PValueVariant.STANDARD
    parallel: bool = False

    def __post_init__(self):
        if self.min_side < 2:
            raise ValueError("min_side must be at least 2")

    def mode_for(self, length: int) -> ThresholdMode:
        if self.threshold_mode is not None:
            return self.threshold_mode
        return AllUniqueValues() if length <= AUTO_GRID_ABOVE else QuantileGrid(AUTO_GRID_POINTS)


@dataclass
class ScanResult:
    """Outcome of one window scan.

    ``taus`` and ``p_curve`` are parallel arrays: for every scanned boundary,
    the smallest p over all thresholds. Boundaries are absolute series indices.
    ``tau_hat``/``xth_hat`` are None when the window is unsplittable or has no
    separating threshold (constant values); ``p_min`` is then 1.
    """

    window: tuple[int, int]
    tau_hat: Optional[int]
    xth_hat: Optional[float]
    p_min: float
    log_p_min: float
    taus: np.ndarray = field(repr=False)
    p_curve: np.ndarray = field(repr=False)
    unsplittable: bool = False
    n_thresholds: int = 0

    def __eq__(self, other):
        if not isinstance(other, ScanResult):
            return NotImplemented
        return (tuple(self.window) == tuple(other.window)
                and self.tau_hat == other.tau_hat
                and self.xth_hat == other.xth_hat
                and self.p_min == other.p_min
                and self.log_p_min == other.log_p_min
                and np.array_equal(self.taus, other.taus)
                and np.array_equal(self.p_curve, other.p_curve)
                and self.unsplittable == other.unsplittable
                and self.n_thresholds == other.n_thresholds)

    def to_dict(self) -> dict:
        return {
            "window": [int(self.window[0]), int(self.window[1])],
            "tau_hat": self.tau_hat,
            "xth_hat": self.xth_hat,
            "p_min": self.p_min,
            "log_p_min": self.log_p_min,
            "unsplittable": self.unsplittable,
            "n_thresholds": self.n_thresholds,
            "taus": [int(t) for t in self.taus],
            "p_curve": [float(p) for p in self.p_curve],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScanResult:
        return cls(
            window=tuple(d["window"]),
            tau_hat=d["tau_hat"],
            xth_hat=d["xth_hat"],
            p_min=d["p_min"],
            log_p_min=d["log_p_min"],
            taus=np.asarray(d["taus"], dtype=np.int64),
            p_curve=np.asarray(d["p_curve"], dtype=np.float64),
            unsplittable=d["unsplittable"],
            n_thresholds=d["n_thresholds"],
        )


def _as_series(series) -> ReturnSeries:
    return series if isinstance(series, ReturnSeries) else ReturnSeries(series)


def _window(series: ReturnSeries, window) -> tuple[int, int]:
    if window is None:
        return 0, len(series)
    start, end = int(window[0]), int(window[1])
    if not 0 <= start < end <= len(series):
        raise ValueError(f"window [{start}, {end}) not inside [0, {len(series)})")
    return start, end


def count_quadrants(series, window, tau: int, x_th: float) -> ContingencyTable:
    """Quadrant counts for boundary ``tau`` and threshold ``x_th`` inside ``window``.

    Left is ``[start, tau)``, right is ``[tau, end)``; ``a``/``c`` count values
    strictly above ``x_th``.
    """
    series = _as_series(series)
    start, end = _window(series, window)
    if not start < tau < end:
        raise ValueError(f"tau={tau} must lie strictly inside window [{start}, {end})")
    left = series.values[start:tau]
    right = series.values[tau:end]
    a = int(np.count_nonzero(left > x_th))
    c = int(np.count_nonzero(right > x_th))
    return ContingencyTable(a, left.size - a, c, right.size - c)


def candidate_thresholds(series, window, mode: ThresholdMode) -> np.ndarray:
    """Sorted thresholds worth testing; the window maximum is never included."""
    series = _as_series(series)
    start, end = _window(series, window)
    vals = series.values[start:end]
    if isinstance(mode, QuantileGrid):
        qs = np.quantile(vals, np.linspace(0.0, 1.0, mode.q_points), method="lower")
        cand = np.unique(qs)
    else:
        cand = np.unique(vals)
    return cand[cand < vals.max()]


def min_p_scan(series, window=None, cfg: ScanConfig = ScanConfig(),
               lf: Optional[LogFactorialTable] = None) -> ScanResult:
    """Find the (tau, x_th) pair minimizing the two-sided Fisher p-value.

    Ties go to the smallest tau, then the smallest threshold. A window shorter
    than ``2 * cfg.min_side`` comes back with ``unsplittable=True``.
    """
    series = _as_series(series)
    start, end = _window(series, window)
    m = end - start
    if m < 2 * cfg.min_side:
        return ScanResult((start, end), None, None, 1.0, 0.0,
                          np.empty(0, dtype=np.int64), np.empty(0), unsplittable=True)
    if lf is None:
        lf = build_log_factorials(m)
    elif not lf.covers(m):
        raise ValueError(f"log-factorial table covers n <= {lf.n_max}, window has {m} points")

    taus = np.arange(start + cfg.min_side, end - cfg.min_side + 1, dtype=np.int64)
    thresholds = candidate_thresholds(series, (start, end), cfg.mode_for(m))
    if thresholds.size == 0:
        return ScanResult((start, end), None, None, 1.0, 0.0, taus, np.ones(taus.size))

    vals = np.ascontiguousarray(series.values[start:end])
    kernel = _kernels.scan_matrix_parallel if cfg.parallel else _kernels.scan_matrix_serial
    log_p = kernel(vals, thresholds, cfg.min_side, lf.values, cfg.variant.code)

    best_thr = np.argmin(log_p, axis=0)  # first (smallest) threshold on ties
    log_curve = log_p[best_thr, np.arange(taus.size)]
    k = int(np.argmin(log_curve))  # first (smallest) tau on ties
    log_p_min = float(log_curve[k])
    return ScanResult(
        window=(start, end),
        tau_hat=int(taus[k]),
        xth_hat=float(thresholds[best_thr[k]]),
        p_min=math.exp(log_p_min),
        log_p_min=log_p_min,
        taus=taus,
        p_curve=np.exp(log_curve),
        n_thresholds=int(thresholds.size),
    )


def scan_values(values: Sequence[float], **kwargs) -> ScanResult:
    """Convenience wrapper: scan a plain sequence with ``ScanConfig(**kwargs)``."""
    return min_p_scan(ReturnSeries(values), None, ScanConfig(**kwargs))
