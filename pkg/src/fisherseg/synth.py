"""Synthetic nonstationary series, sigma sweeps and the shuffle null.

Noise comes from numpy's ``Generator(PCG64(seed)).standard_normal`` (ziggurat).
Bit-for-bit reproducibility holds within one numpy release line; other
implementations can match the moments but not the stream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from fisherseg.exact_test import build_log_factorials
from fisherseg.scan import ReturnSeries, ScanConfig, min_p_scan

__all__ = [
    "ModelKind",
    "SweepResult",
    "SweepRow",
    "SynthModel",
    "generate",
    "noise",
    "shuffle",
    "shuffle_seeds",
    "sigma_sweep",
]

RNG_NAME = "numpy.random.PCG64/standard_normal"


class ModelKind(enum.Enum):
    STEP = "step"
    TREND = "trend"


@dataclass(frozen=True)
class SynthModel:
    """Piecewise model: pure noise before ``change_at``, shifted after.

    Indices are 0-based; ``change_at=50`` means index 50 is the first point of
    the new regime. The trend ramp is ``slope * (i + 1 - change_at)``, so the
    first shifted point already carries one slope step.
    """

    kind: ModelKind = ModelKind.STEP
    sigma: float = 0.01
    length: int = 150
    change_at: int = 50
    step: float = 0.1
    slope: float = 0.001

    def __post_init__(self):
        if not 0 < self.change_at < self.length:
            raise ValueError("change_at must satisfy 0 < change_at < length")
        # sigma == 0 is allowed for noise-free checks
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    def signal(self) -> np.ndarray:
        i = np.arange(self.length)
        after = i >= self.change_at
        if self.kind is ModelKind.STEP:
            return np.where(after, self.step, 0.0)
        return np.where(after, self.slope * (i + 1 - self.change_at), 0.0)


def noise(length: int, seed: int) -> np.ndarray:
    return np.random.Generator(np.random.PCG64(seed)).standard_normal(length)


def generate(model: SynthModel, seed: int) -> ReturnSeries:
    """``sigma * xi + signal``; the same seed gives the same ``xi`` for every sigma."""
    return ReturnSeries(model.sigma * noise(model.length, seed) + model.signal())


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    seed: int
    p_min: float
    tau_hat: Optional[int]
    log_p_min: float


@dataclass
class SweepResult:
    model: SynthModel
    rows: list[SweepRow]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def median_log_p(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-sigma median of ``ln p_min``, sigmas in first-seen order."""
        sigmas = list(dict.fromkeys(r.sigma for r in self.rows))
        med = [np.median([r.log_p_min for r in self.rows if r.sigma == s]) for s in sigmas]
        return np.array(sigmas), np.array(med)


def sigma_sweep(model: SynthModel, sigmas: Iterable[float], seeds: Iterable[int],
                scan: ScanConfig = ScanConfig()) -> SweepResult:
    """Scan every (sigma, seed) cell; rows in sigma-major grid order."""
    sigmas = [float(s) for s in sigmas]
    seeds = [int(s) for s in seeds]
    if not sigmas or not seeds:
        raise ValueError("sigma and seed grids must be nonempty")
    lf = build_log_factorials(model.length)
    xi = {seed: noise(model.length, seed) for seed in seeds}
    rows = []
    for sigma in sigmas:
        m = replace(model, sigma=sigma)
        signal = m.signal()
        for seed in seeds:
            res = min_p_scan(ReturnSeries(sigma * xi[seed] + signal), None, scan, lf)
            rows.append(SweepRow(sigma, seed, res.p_min, res.tau_hat, res.log_p_min))
    return SweepResult(model, rows)


def shuffle(series: ReturnSeries, seed: int) -> ReturnSeries:
    """Uniform random permutation of the values; labels stay where they were."""
    rng = np.random.Generator(np.random.PCG64(seed))
    vals = np.array(series.values)
    # Fisher-Yates, drawing j uniformly from [0, i]
    for i in range(vals.size - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        vals[i], vals[j] = vals[j], vals[i]
    return ReturnSeries(vals, series.labels)


def shuffle_seeds(seed: int, n: int) -> list[int]:
    """Independent per-shuffle seeds derived from one master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)] if n else []
