"""Synthetic data with known ground truth.

Every generator draws from a seeded PCG64 stream (``numpy.random.default_rng``)
and returns both the observations and the exact truth they were generated
from, so recovery tests can assert against known parameters rather than
against other fitted values. Noise models: conditional losses get
multiplicative log-normal noise (losses stay positive and relative error is
scale-free), scores get additive Gaussian noise clamped to [0, 1], and
timeline densities get log-normal noise around the exponential trend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from density_lab.errors import ValidationError
from density_lab.loss_law import conditional_loss
from density_lab.perf_curve import sigmoid_score
from density_lab.registry import DEFAULT_EPOCH, Epoch, ModelRecord, PerfObservation, ScalingObservation
from density_lab.trends import TimedValue

#: Parameter counts of the reference ladder (exact transformer sizes).
DEFAULT_SIZE_GRID = (
    5_247_232.0,
    31_470_080.0,
    106_196_736.0,
    245_416_960.0,
    476_852_480.0,
    828_225_024.0,
)

#: Token budgets expressed as multiples of the parameter count.
DEFAULT_TOKEN_MULTIPLES = (10.0, 15.0, 20.0, 30.0, 40.0, 60.0)

#: (a, alpha, b, beta) giving losses roughly in [0.8, 5] over the ladder.
DEFAULT_LOSS_TRUTH = (400.0, 0.34, 410.0, 0.28)

#: (c, gamma, l, d) whose active region covers those losses.
DEFAULT_PERF_TRUTH = (0.9, -2.5, 2.2, 0.05)

#: Density growth per day and log-density at the epoch.
DEFAULT_TREND_TRUTH = (0.0073, math.log(0.1))


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground truth and noise level for one synthetic dataset."""

    loss_truth: tuple[float, float, float, float] = DEFAULT_LOSS_TRUTH
    perf_truth: tuple[float, float, float, float] = DEFAULT_PERF_TRUTH
    trend_truth: tuple[float, float] = DEFAULT_TREND_TRUTH
    size_grid: tuple[float, ...] = DEFAULT_SIZE_GRID
    token_multiples: tuple[float, ...] = DEFAULT_TOKEN_MULTIPLES
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        a, alpha, b, beta = self.loss_truth
        if not (a > 0 and b > 0 and 0 < alpha < 2 and 0 < beta < 2):
            raise ValidationError("loss_truth: need a, b > 0 and exponents in (0, 2)")
        c, gamma, l, d = self.perf_truth
        if not (c > 0 and gamma < 0 and d >= 0 and c + d <= 1.0 + 1e-6 and math.isfinite(l)):
            raise ValidationError("perf_truth: need c > 0, gamma < 0, d >= 0, c + d <= 1")
        if not all(s > 0 for s in self.size_grid) or len(self.size_grid) < 2:
            raise ValidationError("size_grid: need >= 2 positive sizes")
        if not all(m > 0 for m in self.token_multiples) or len(self.token_multiples) < 2:
            raise ValidationError("token_multiples: need >= 2 positive multiples")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValidationError("noise_sigma: must be finite and >= 0")
        if not math.isfinite(self.trend_truth[0]) or not math.isfinite(self.trend_truth[1]):
            raise ValidationError("trend_truth: must be finite")


def _rng(spec_seed: int, stream: int) -> np.random.Generator:
    # Distinct child streams per generator so adding one call does not
    # perturb the draws of another.
    return np.random.default_rng(np.random.SeedSequence(entropy=spec_seed, spawn_key=(stream,)))


def gen_scaling_grid(spec: SyntheticSpec) -> list[ScalingObservation]:
    """Loss observations over the full (size x token-multiple) grid.

    Token budgets scale with model size (``tokens = multiple * params``).
    With ``noise_sigma`` > 0, losses are multiplied by
    ``exp(sigma * z)``, z standard normal.
    """
    a, alpha, b, beta = spec.loss_truth
    rng = _rng(spec.seed, 0)
    out: list[ScalingObservation] = []
    for params in spec.size_grid:
        for multiple in spec.token_multiples:
            tokens = multiple * params
            loss = conditional_loss(a, alpha, b, beta, params, tokens)
            if spec.noise_sigma > 0:
                loss *= math.exp(spec.noise_sigma * rng.standard_normal())
            out.append(ScalingObservation(params=params, tokens=tokens, loss=loss))
    return out


def gen_perf_points(spec: SyntheticSpec, losses) -> list[PerfObservation]:
    """Score observations at the given losses.

    With ``noise_sigma`` > 0, scores get additive Gaussian noise of that
    standard deviation, clamped to [0, 1].
    """
    c, gamma, l, d = spec.perf_truth
    rng = _rng(spec.seed, 1)
    out: list[PerfObservation] = []
    for loss in losses:
        score = sigmoid_score(c, gamma, l, d, float(loss))
        if spec.noise_sigma > 0:
            score = min(1.0, max(0.0, score + spec.noise_sigma * rng.standard_normal()))
        out.append(PerfObservation(loss=float(loss), score=score))
    return out


def gen_density_timeline(
    slope_per_day: float,
    intercept: float,
    dates,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> list[TimedValue]:
    """Densities ``exp(slope * t + intercept)`` at day offsets ``dates``.

    Noise is log-normal: ``value *= exp(sigma * z)``. Labels are stable
    (``synth-000``, ``synth-001``, ...) in input order.
    """
    if not (math.isfinite(slope_per_day) and math.isfinite(intercept)):
        raise ValidationError("trend parameters must be finite")
    if not (math.isfinite(noise_sigma) and noise_sigma >= 0):
        raise ValidationError("noise_sigma: must be finite and >= 0")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    out: list[TimedValue] = []
    for i, t in enumerate(dates):
        t = float(t)
        value = math.exp(slope_per_day * t + intercept)
        if noise_sigma > 0:
            value *= math.exp(noise_sigma * rng.standard_normal())
        out.append(TimedValue(t=t, value=value, label=f"synth-{i:03d}"))
    return out


def timeline_models(
    timeline,
    spec: SyntheticSpec,
    epoch: Epoch = DEFAULT_EPOCH,
    param_count: float = 1.0e8,
    d0_tokens: float = 1.0e12,
    benchmark: str = "synthetic",
) -> list[ModelRecord]:
    """Realize a density timeline as a model registry.

    Each timeline point becomes a model of fixed ``param_count`` released at
    ``epoch + t`` whose benchmark score is exactly what the truth curves
    assign to a reference model of ``density * param_count`` parameters at
    the ``d0_tokens`` budget. Feeding these records through fitted curves
    should recover the timeline densities.
    """
    if not param_count > 0:
        raise ValidationError("param_count: must be > 0")
    if not d0_tokens > 0:
        raise ValidationError("d0_tokens: must be > 0")
    a, alpha, b, beta = spec.loss_truth
    c, gamma, l, d = spec.perf_truth
    records: list[ModelRecord] = []
    for point in timeline:
        n_effective = point.value * param_count
        loss = conditional_loss(a, alpha, b, beta, n_effective, d0_tokens)
        score = sigmoid_score(c, gamma, l, d, loss)
        if not d < score < d + c:
            raise ValidationError(
                f"{point.label}: score saturates at density {point.value:.4g}; "
                "timeline is outside the invertible range of the truth curves"
            )
        records.append(
            ModelRecord(
                name=point.label or f"synth-{len(records):03d}",
                param_count=param_count,
                release_date=epoch.reference_date + timedelta(days=round(point.t)),
                scores={benchmark: score},
            )
        )
    return records


def truth_artifact(spec: SyntheticSpec, epoch: Epoch = DEFAULT_EPOCH, d0_tokens: float = 1.0e12, param_count: float = 1.0e8) -> dict:
    """JSON-ready record of the exact generating parameters."""
    a, alpha, b, beta = spec.loss_truth
    c, gamma, l, d = spec.perf_truth
    return {
        "loss_truth": {"a": a, "alpha": alpha, "b": b, "beta": beta},
        "perf_truth": {"c": c, "gamma": gamma, "l": l, "d": d},
        "trend_truth": {"slope_per_day": spec.trend_truth[0], "intercept": spec.trend_truth[1]},
        "size_grid": list(spec.size_grid),
        "token_multiples": list(spec.token_multiples),
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "epoch": epoch.reference_date.isoformat(),
        "d0_tokens": d0_tokens,
        "param_count": param_count,
    }
