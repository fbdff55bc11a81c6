"""Change-point segmentation of univariate series by Fisher's exact test."""

__version__ = "0.1.0"

from fisherseg.exact_test import (  # noqa: E402
    ContingencyTable,
    PValueVariant,
    brute_force_p,
    build_log_factorials,
    fisher_p,
    point_probability,
)
from fisherseg.scan import (  # noqa: E402
    AllUniqueValues,
    QuantileGrid,
    ReturnSeries,
    ScanConfig,
    ScanResult,
    candidate_thresholds,
    count_quadrants,
    min_p_scan,
)
from fisherseg.segmenter import (  # noqa: E402
    Segment,
    SegmentationConfig,
    fit_trend,
    log_returns,
    recursive_segment,
    segment_stats,
)
from fisherseg.synth import ModelKind, SynthModel, generate, shuffle, sigma_sweep  # noqa: E402
