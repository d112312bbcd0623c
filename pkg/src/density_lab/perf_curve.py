"""Sigmoid map between conditional loss and downstream benchmark score.

Downstream accuracy saturates at both ends of the loss range: near-random at
high loss, near its ceiling at low loss. The curve
``S(L) = c / (1 + exp(-gamma * (L - l))) + d`` captures that with a floor
``d``, a span ``c`` (so the ceiling is ``c + d <= 1``), a pivot loss ``l``,
and a slope ``gamma < 0`` so score falls as loss rises. The fit is a plain
least-squares search over all four parameters from a few slope starts; the
inverse map recovers the loss a score implies, which is the first half of
turning a benchmark score into an effective model size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from density_lab.errors import (
    FlatScores,
    InsufficientData,
    NonConvergenceWarning,
    ScoreAboveCeiling,
    ScoreBelowFloor,
    ValidationError,
)
from density_lab.optimize import FitConfig, FitDiagnostics, minimize
from density_lab.registry import PerfObservation

_N_FREE_PARAMS = 4
_MIN_OBSERVATIONS = 8
_MIN_DISTINCT_LOSSES = 4
_MIN_SCORE_SPREAD = 0.05
_CEILING_SLACK = 1e-6

_ARTIFACT_KEYS = ("c", "gamma", "l", "d", "rmse", "n_points", "converged")


@dataclass(frozen=True)
class PerfCurveFit:
    """Fitted loss-to-score sigmoid with its diagnostics."""

    c: float
    gamma: float
    l: float
    d: float
    diagnostics: FitDiagnostics

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValidationError("c: must be finite and > 0")
        if not (math.isfinite(self.gamma) and self.gamma < 0):
            raise ValidationError("gamma: must be finite and < 0")
        if not math.isfinite(self.l):
            raise ValidationError("l: must be finite")
        if not (math.isfinite(self.d) and self.d >= 0):
            raise ValidationError("d: must be finite and >= 0")
        if self.c + self.d > 1.0 + _CEILING_SLACK:
            raise ValidationError(f"c + d: ceiling {self.c + self.d!r} exceeds 1")


def _logistic(z):
    """Numerically safe 1 / (1 + e^-z), elementwise."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid_score(c: float, gamma: float, l: float, d: float, loss):
    """Evaluate the raw sigmoid (vectorized, may saturate to the asymptotes)."""
    out = c * _logistic(gamma * (np.asarray(loss, dtype=float) - l)) + d
    return float(out) if out.ndim == 0 else out


def default_fit_config(observations) -> FitConfig:
    """Data-driven starts: floor/span from observed scores, three slope guesses."""
    losses = np.array([o.loss for o in observations], dtype=float)
    scores = np.array([o.score for o in observations], dtype=float)
    floor = float(scores.min())
    span = float(scores.max() - scores.min())
    pivot = float(np.median(losses))
    loss_span = float(losses.max() - losses.min())
    pad = 10.0 * loss_span + 1.0
    bounds = (
        (1e-9, 1.0),
        (-1e4, -1e-9),
        (float(losses.min()) - pad, float(losses.max()) + pad),
        (0.0, 1.0),
    )
    grid = tuple((span, g, pivot, floor) for g in (-1.0, -5.0, -20.0))
    return FitConfig(
        max_iterations=4000,
        relative_tolerance=1e-11,
        multistart_grid=grid,
        parameter_bounds=bounds,
    )


def fit_perf_curve(observations, config: FitConfig | None = None) -> PerfCurveFit:
    """Fit the sigmoid to (loss, score) calibration points.

    Needs at least eight points over at least four distinct losses, with a
    score spread above 0.05 (flatter data cannot pin down a sigmoid and
    raises FlatScores). Emits NonConvergenceWarning when the search hits the
    iteration cap but still returns the best fit found.
    """
    obs = list(observations)
    if len(obs) < _MIN_OBSERVATIONS:
        raise InsufficientData(f"need >= {_MIN_OBSERVATIONS} calibration points, got {len(obs)}")
    for o in obs:
        if not isinstance(o, PerfObservation):
            raise ValidationError("observations: expected PerfObservation items")
    losses = np.array([o.loss for o in obs], dtype=float)
    scores = np.array([o.score for o in obs], dtype=float)
    if np.unique(losses).size < _MIN_DISTINCT_LOSSES:
        raise InsufficientData(f"need >= {_MIN_DISTINCT_LOSSES} distinct losses")
    if float(scores.max() - scores.min()) <= _MIN_SCORE_SPREAD:
        raise FlatScores(
            f"score spread {scores.max() - scores.min():.4f} <= {_MIN_SCORE_SPREAD}; sigmoid is unidentifiable"
        )

    def objective(x: np.ndarray) -> float:
        c, gamma, pivot, floor = (float(v) for v in x)
        if c + floor > 1.0 + _CEILING_SLACK:
            return math.inf
        residual = c * _logistic(gamma * (losses - pivot)) + floor - scores
        return float(residual @ residual)

    cfg = config if config is not None else default_fit_config(obs)
    x, diagnostics = minimize(objective, cfg, n_points=len(obs))
    diagnostics = replace(diagnostics, n_params=_N_FREE_PARAMS)
    if not diagnostics.converged:
        warnings.warn(
            f"score-curve fit stopped at the iteration cap (objective {diagnostics.objective_value:.3e})",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return PerfCurveFit(
        c=float(x[0]), gamma=float(x[1]), l=float(x[2]), d=float(x[3]), diagnostics=diagnostics
    )


def predict_score(fit: PerfCurveFit, loss: float) -> float:
    """Score at ``loss``, clamped into the open interval (d, d + c).

    The raw sigmoid saturates to its asymptotes in floating point at extreme
    losses; nudging the result one ulp inside the interval keeps every
    prediction invertible.
    """
    if not math.isfinite(loss):
        raise ValidationError("loss: must be finite")
    raw = sigmoid_score(fit.c, fit.gamma, fit.l, fit.d, loss)
    lo = math.nextafter(fit.d, math.inf)
    hi = math.nextafter(fit.d + fit.c, -math.inf)
    return min(max(raw, lo), hi)


def invert_for_loss(fit: PerfCurveFit, score: float) -> float:
    """Loss at which the fitted curve attains ``score``.

    Only scores strictly inside (d, d + c) are attainable; at or beyond the
    asymptotes the inverse raises ScoreBelowFloor / ScoreAboveCeiling.
    """
    if not math.isfinite(score):
        raise ValidationError("score: must be finite")
    if score <= fit.d:
        raise ScoreBelowFloor(f"score {score!r} is at or below the fitted floor {fit.d!r}")
    if score >= fit.d + fit.c:
        raise ScoreAboveCeiling(f"score {score!r} is at or above the fitted ceiling {fit.d + fit.c!r}")
    return fit.l - math.log(fit.c / (score - fit.d) - 1.0) / fit.gamma


def to_artifact(fit: PerfCurveFit) -> dict:
    """JSON-ready summary with the published key set."""
    return {
        "c": fit.c,
        "gamma": fit.gamma,
        "l": fit.l,
        "d": fit.d,
        "rmse": fit.diagnostics.rmse,
        "n_points": fit.diagnostics.n_points,
        "converged": fit.diagnostics.converged,
    }


def from_artifact(data: dict) -> PerfCurveFit:
    """Rebuild a fit from ``to_artifact`` output (iteration count not preserved)."""
    if set(data) != set(_ARTIFACT_KEYS):
        raise ValidationError(
            f"score-curve artifact must have exactly keys {sorted(_ARTIFACT_KEYS)}, got {sorted(data)}"
        )
    n_points = int(data["n_points"])
    rmse = float(data["rmse"])
    diagnostics = FitDiagnostics(
        rmse=rmse,
        n_points=n_points,
        n_params=_N_FREE_PARAMS,
        converged=bool(data["converged"]),
        iterations=0,
        objective_value=rmse * rmse * n_points,
    )
    return PerfCurveFit(
        c=float(data["c"]),
        gamma=float(data["gamma"]),
        l=float(data["l"]),
        d=float(data["d"]),
        diagnostics=diagnostics,
    )
