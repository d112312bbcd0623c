"""Capability-density toolkit.

Measures how much capability a language model packs per parameter: fit a
two-term scaling law for conditional loss, fit a sigmoid from loss to
benchmark score, invert both to get the effective parameter size a score
implies, and track the ratio of effective to actual size over release dates.
"""

from density_lab.density_core import (
    DEFAULT_D0_TOKENS,
    CompressionComparison,
    DensityEstimate,
    aggregate_density,
    compare_compression,
    density,
    effective_params,
)
from density_lab.errors import DensityLabError
from density_lab.loss_law import LossLawFit, fit_loss_law, invert_for_params, predict_loss
from density_lab.optimize import FitConfig, FitDiagnostics, linear_lsq, minimize, r_squared
from density_lab.perf_curve import PerfCurveFit, fit_perf_curve, invert_for_loss, predict_score
from density_lab.registry import (
    DEFAULT_EPOCH,
    Epoch,
    ModelRecord,
    PerfObservation,
    PriceRecord,
    ScalingObservation,
    days_since,
    load_models,
    load_observations,
    load_perf_points,
    load_prices,
)
from density_lab.synth import SyntheticSpec, gen_density_timeline, gen_perf_points, gen_scaling_grid
from density_lab.trends import (
    MooreConfig,
    TimedValue,
    TrendFit,
    combine_moore,
    doubling_days,
    extract_envelope,
    fit_price_trend,
    fit_trend,
    project,
    split_trend,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_D0_TOKENS",
    "DEFAULT_EPOCH",
    "CompressionComparison",
    "DensityEstimate",
    "DensityLabError",
    "Epoch",
    "FitConfig",
    "FitDiagnostics",
    "LossLawFit",
    "ModelRecord",
    "MooreConfig",
    "PerfCurveFit",
    "PerfObservation",
    "PriceRecord",
    "ScalingObservation",
    "SyntheticSpec",
    "TimedValue",
    "TrendFit",
    "aggregate_density",
    "combine_moore",
    "compare_compression",
    "days_since",
    "density",
    "doubling_days",
    "effective_params",
    "extract_envelope",
    "fit_loss_law",
    "fit_perf_curve",
    "fit_price_trend",
    "fit_trend",
    "gen_density_timeline",
    "gen_perf_points",
    "gen_scaling_grid",
    "invert_for_loss",
    "invert_for_params",
    "linear_lsq",
    "load_models",
    "load_observations",
    "load_perf_points",
    "load_prices",
    "minimize",
    "predict_loss",
    "predict_score",
    "project",
    "r_squared",
    "split_trend",
]
