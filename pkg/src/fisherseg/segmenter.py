"""Recursive binary segmentation, per-segment statistics and trend fitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from fisherseg.exact_test import LogFactorialTable, build_log_factorials
from fisherseg.scan import ReturnSeries, ScanConfig, ScanResult, min_p_scan

__all__ = [
    "Segment",
    "SegmentationConfig",
    "SegmentationResult",
    "Split",
    "TrendFit",
    "fit_trend",
    "log_returns",
    "recursive_segment",
    "segment_stats",
]


class PriceError(ValueError):
    """A price that cannot be log-transformed."""

    def __init__(self, index: int, value):
        super().__init__(f"price at index {index} must be positive, got {value!r}")
        self.index = index
        self.value = value


@dataclass(frozen=True)
class SegmentationConfig:
    p_th: float = 1e-5
    scan: ScanConfig = ScanConfig()
    max_depth: int = 32
    ddof: int = 0

    def __post_init__(self):
        if not 0.0 < self.p_th < 1.0:
            raise ValueError("p_th must lie in (0, 1)")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.ddof not in (0, 1):
            raise ValueError("ddof must be 0 (population) or 1 (sample)")


@dataclass
class Segment:
    start: int
    end: int
    mean: float
    std: float
    accept_p: Optional[float] = None

    def __len__(self):
        return self.end - self.start


@dataclass
class Split:
    """An accepted split, in the order the recursion accepted it."""

    order: int
    depth: int
    window: tuple[int, int]
    tau: int
    x_th: float
    p: float
    log_p: float
    scan: Optional[ScanResult] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "depth": self.depth,
            "window": [int(w) for w in self.window],
            "tau": self.tau,
            "x_th": self.x_th,
            "p": self.p,
            "log_p": self.log_p,
        }


@dataclass
class SegmentationResult:
    segments: list[Segment]
    splits: list[Split]

    @property
    def boundaries(self) -> list[int]:
        return [s.start for s in self.segments[1:]]


@dataclass(frozen=True)
class TrendFit:
    """``log R(t) ~ mu * (t - origin) + rho`` over price indices ``segment``."""

    mu: float
    rho: float
    segment: tuple[int, int]
    origin: int

    def coords(self) -> np.ndarray:
        return np.arange(self.segment[0], self.segment[1]) - self.origin

    def curve(self) -> np.ndarray:
        return np.exp(self.mu * self.coords() + self.rho)

    def residuals(self, prices) -> np.ndarray:
        logs = np.log(np.asarray(prices, dtype=np.float64)[self.segment[0]:self.segment[1]])
        return logs - self.mu * self.coords() - self.rho


def _positive(prices) -> np.ndarray:
    prices = np.asarray(prices, dtype=np.float64)
    bad = np.flatnonzero(~(prices > 0))
    if bad.size:
        raise PriceError(int(bad[0]), prices[bad[0]])
    return prices


def log_returns(prices: Sequence[float], labels: Optional[Sequence] = None) -> ReturnSeries:
    """``r[i] = ln R[i+1] - ln R[i]``; ``r[i]`` keeps the label of ``R[i]``."""
    prices = _positive(prices)
    if prices.size < 2:
        raise ValueError("need at least two prices")
    if labels is not None:
        labels = list(labels)
        if len(labels) != prices.size:
            raise ValueError(f"{len(labels)} labels for {prices.size} prices")
        labels = labels[:-1]
    return ReturnSeries(np.diff(np.log(prices)), labels)


def _stats(vals: np.ndarray, ddof: int) -> tuple[float, float]:
    if vals.size - ddof <= 0:
        return float(vals.mean()), float("nan")
    return float(vals.mean()), float(vals.std(ddof=ddof))


def recursive_segment(series, cfg: SegmentationConfig = SegmentationConfig(),
                      lf: Optional[LogFactorialTable] = None) -> SegmentationResult:
    """Split depth-first, left half first, while the window's best p is below ``p_th``."""
    if not isinstance(series, ReturnSeries):
        series = ReturnSeries(series)
    n = len(series)
    if lf is None or not lf.covers(n):
        lf = build_log_factorials(n)

    splits: list[Split] = []
    cuts: list[tuple[int, float]] = []

    def visit(start: int, end: int, depth: int):
        if depth >= cfg.max_depth:
            return
        res = min_p_scan(series, (start, end), cfg.scan, lf)
        if res.unsplittable or res.tau_hat is None or not res.p_min < cfg.p_th:
            return
        splits.append(Split(len(splits), depth, (start, end), res.tau_hat,
                            res.xth_hat, res.p_min, res.log_p_min, res))
        visit(start, res.tau_hat, depth + 1)
        cuts.append((res.tau_hat, res.p_min))
        visit(res.tau_hat, end, depth + 1)

    visit(0, n, 0)

    edges = [0] + [c[0] for c in cuts] + [n]
    accept = [None] + [c[1] for c in cuts]
    segments = []
    for k in range(len(edges) - 1):
        mean, std = _stats(series.values[edges[k]:edges[k + 1]], cfg.ddof)
        segments.append(Segment(edges[k], edges[k + 1], mean, std, accept[k]))
    return SegmentationResult(segments, splits)


def segment_stats(series, segments: Sequence[Segment], ddof: int = 0) -> list[dict]:
    """Table rows ``no, start, end, mean, std`` with ``start``/``end`` as labels.

    ``end`` is the label of the segment's last observation. ``ddof=0`` divides
    by the segment length, ``ddof=1`` by length - 1.
    """
    if not isinstance(series, ReturnSeries):
        series = ReturnSeries(series)
    rows = []
    pos = 0
    for k, seg in enumerate(segments, start=1):
        if seg.start != pos or seg.end <= seg.start:
            raise ValueError("segments must partition the series left to right")
        mean, std = _stats(series.values[seg.start:seg.end], ddof)
        rows.append({
            "no": k,
            "start": series.label(seg.start),
            "end": series.label(seg.end - 1),
            "mean": mean,
            "std": std,
        })
        pos = seg.end
    if pos != len(series):
        raise ValueError("segments must cover the whole series")
    return rows


def fit_trend(prices: Sequence[float], segment: tuple[int, int], mu: float,
              origin: Optional[int] = None) -> TrendFit:
    """Least-squares intercept of ``log R(t) = mu * (t - origin) + rho`` over ``segment``.

    ``segment`` is a half-open range of price indices. ``origin`` defaults to
    ``segment[0] - 1`` so the first price in the segment sits at coordinate 1.
    With ``mu`` fixed the optimum is the mean of ``log R(t) - mu * (t - origin)``.
    """
    prices = _positive(prices)
    start, end = int(segment[0]), int(segment[1])
    if not 0 <= start < end <= prices.size:
        raise ValueError(f"segment [{start}, {end}) not inside [0, {prices.size})")
    if origin is None:
        origin = start - 1
    coords = np.arange(start, end) - origin
    rho = float(np.mean(np.log(prices[start:end]) - mu * coords))
    return TrendFit(float(mu), rho, (start, end), int(origin))


def segment_trends(prices: Sequence[float], segments: Sequence[Segment]) -> list[TrendFit]:
    """Fit each return segment ``[s, e)`` on prices ``s..e`` with local time ``t - s``."""
    return [fit_trend(prices, (seg.start, seg.end + 1), seg.mean, origin=seg.start)
            for seg in segments]
