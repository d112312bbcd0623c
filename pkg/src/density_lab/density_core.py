"""Capability density: effective parameter size relative to actual size.

Given a fitted loss law and a fitted loss-to-score curve, a benchmark score
pins down the conditional loss a reference model would need
(``invert_for_loss``), and that loss pins down the reference parameter count
that reaches it at the reference token budget (``invert_for_params``). The
ratio of that effective parameter count to the model's actual parameter
count is its capability density: density 2 means the model performs like a
reference model twice its size. By construction a model drawn from the
reference law itself has density exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean

from density_lab.errors import (
    EmptyInput,
    LinkMismatch,
    MissingScore,
    MixedModels,
    NoCommonBenchmarks,
    ValidationError,
)
from density_lab.loss_law import LossLawFit, invert_for_params
from density_lab.perf_curve import PerfCurveFit, invert_for_loss
from density_lab.registry import ModelRecord

#: Reference token budget used when none is given: one trillion tokens.
DEFAULT_D0_TOKENS = 1.0e12

_AGGREGATE_METHODS = ("geometric", "arithmetic")
AGGREGATE_BENCHMARK = "aggregate"


@dataclass(frozen=True)
class DensityEstimate:
    """Density of one model on one benchmark (or on the aggregate of several)."""

    model: str
    benchmark: str
    score: float
    effective_loss: float
    effective_params: float
    density: float
    d0_tokens: float

    def __post_init__(self) -> None:
        if not self.model:
            raise ValidationError("model: must be non-empty")
        if not self.benchmark:
            raise ValidationError("benchmark: must be non-empty")
        if not (math.isfinite(self.score) and 0 <= self.score <= 1):
            raise ValidationError(f"score: {self.score!r} outside [0, 1]")
        if not math.isfinite(self.effective_loss):
            raise ValidationError("effective_loss: must be finite")
        if not (math.isfinite(self.effective_params) and self.effective_params > 0):
            raise ValidationError("effective_params: must be finite and > 0")
        if not (math.isfinite(self.density) and self.density > 0):
            raise ValidationError("density: must be finite and > 0")
        if not (math.isfinite(self.d0_tokens) and self.d0_tokens > 0):
            raise ValidationError("d0_tokens: must be finite and > 0")


@dataclass(frozen=True)
class CompressionComparison:
    """Aggregate densities of a compressed model against its source."""

    original: DensityEstimate
    compressed: DensityEstimate
    density_ratio: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.density_ratio) and self.density_ratio > 0):
            raise ValidationError("density_ratio: must be finite and > 0")


def effective_params(
    loss_fit: LossLawFit,
    perf_fit: PerfCurveFit,
    score: float,
    d0_tokens: float = DEFAULT_D0_TOKENS,
) -> float:
    """Reference parameter count that attains ``score`` at the ``d0_tokens`` budget."""
    if not (math.isfinite(d0_tokens) and d0_tokens > 0):
        raise ValidationError("d0_tokens: must be finite and > 0")
    loss = invert_for_loss(perf_fit, score)
    return invert_for_params(loss_fit, loss, d0_tokens)


def density(
    model: ModelRecord,
    benchmark: str,
    loss_fit: LossLawFit,
    perf_fit: PerfCurveFit,
    d0_tokens: float = DEFAULT_D0_TOKENS,
) -> DensityEstimate:
    """Density of ``model`` on one benchmark.

    Raises MissingScore when the record has no score for the benchmark, and
    re-raises inversion failures (score outside the sigmoid's open range,
    loss below the data floor) annotated with model and benchmark.
    """
    if benchmark not in model.scores:
        raise MissingScore(f"{model.name}: no score for benchmark {benchmark!r}")
    if not (math.isfinite(d0_tokens) and d0_tokens > 0):
        raise ValidationError("d0_tokens: must be finite and > 0")
    score = float(model.scores[benchmark])
    try:
        loss = invert_for_loss(perf_fit, score)
        n_eff = invert_for_params(loss_fit, loss, d0_tokens)
    except Exception as exc:
        exc.args = (f"{model.name}/{benchmark}: {exc}",) + exc.args[1:]
        raise
    return DensityEstimate(
        model=model.name,
        benchmark=benchmark,
        score=score,
        effective_loss=loss,
        effective_params=n_eff,
        density=n_eff / model.param_count,
        d0_tokens=d0_tokens,
    )


def aggregate_density(estimates, method: str) -> float:
    """Combine per-benchmark densities of one model into a single number.

    The method is named explicitly by the caller; there is no silent
    default. The geometric mean is the natural choice (densities are ratios,
    so doubling on one benchmark and halving on another should cancel);
    ``arithmetic`` is accepted for comparison runs. All estimates must
    describe the same model at the same token budget.
    """
    items = list(estimates)
    if method not in _AGGREGATE_METHODS:
        raise ValidationError(f"method: expected one of {_AGGREGATE_METHODS}, got {method!r}")
    if not items:
        raise EmptyInput("aggregate_density: no estimates")
    models = {e.model for e in items}
    budgets = {e.d0_tokens for e in items}
    if len(models) > 1:
        raise MixedModels(f"aggregate mixes models {sorted(models)}")
    if len(budgets) > 1:
        raise MixedModels(f"aggregate mixes token budgets {sorted(budgets)}")
    values = [e.density for e in items]
    if method == "geometric":
        return math.exp(fmean([math.log(v) for v in values]))
    return fmean(values)


def aggregate_estimate(estimates, method: str) -> DensityEstimate:
    """Fold per-benchmark estimates into one synthetic 'aggregate' estimate.

    Score and effective loss are arithmetic means (descriptive only); density
    is ``aggregate_density``; effective_params is scaled so the
    density = effective_params / param_count identity still holds exactly.
    """
    items = list(estimates)
    rho = aggregate_density(items, method)
    param_count = items[0].effective_params / items[0].density
    return DensityEstimate(
        model=items[0].model,
        benchmark=AGGREGATE_BENCHMARK,
        score=fmean([e.score for e in items]),
        effective_loss=fmean([e.effective_loss for e in items]),
        effective_params=rho * param_count,
        density=rho,
        d0_tokens=items[0].d0_tokens,
    )


def compare_compression(
    original: ModelRecord,
    compressed: ModelRecord,
    loss_fit: LossLawFit,
    perf_fit: PerfCurveFit,
    d0_tokens: float = DEFAULT_D0_TOKENS,
    method: str = "geometric",
) -> CompressionComparison:
    """Density ratio of a compressed model over its source.

    The compressed record must link to the source via ``compressed_from``;
    densities are aggregated over the benchmarks both models share. A ratio
    above 1 means compression increased density.
    """
    if compressed.compressed_from != original.name:
        raise LinkMismatch(
            f"{compressed.name}: compressed_from={compressed.compressed_from!r} "
            f"does not name {original.name!r}"
        )
    common = sorted(set(original.scores) & set(compressed.scores))
    if not common:
        raise NoCommonBenchmarks(f"{original.name} and {compressed.name} share no benchmark")
    orig = aggregate_estimate(
        [density(original, b, loss_fit, perf_fit, d0_tokens) for b in common], method
    )
    comp = aggregate_estimate(
        [density(compressed, b, loss_fit, perf_fit, d0_tokens) for b in common], method
    )
    return CompressionComparison(
        original=orig,
        compressed=comp,
        density_ratio=comp.density / orig.density,
    )
