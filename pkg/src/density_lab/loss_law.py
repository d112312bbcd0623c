"""Two-term power-law fit of conditional loss against model and data size.

The law is ``L(N, D) = a * N**-alpha + b * D**-beta`` with positive
coefficients and exponents in (0, 2): loss falls monotonically as either the
parameter count N or the training token count D grows, and flattens toward a
data-limited floor ``b * D**-beta`` as N grows alone.

Fitting splits the parameters: for any candidate exponent pair
(alpha, beta), the coefficients (a, b) enter linearly and are recovered by
least squares on the basis (N**-alpha, D**-beta); candidate pairs whose best
linear coefficients are not strictly positive are infeasible. The outer
search over (alpha, beta) minimizes squared residuals of log-loss on a
multistart grid, which keeps the relative error balanced across the loss
range instead of letting the largest losses dominate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from density_lab.errors import (
    DegenerateGrid,
    InsufficientData,
    NonConvergenceWarning,
    RankDeficient,
    UnattainablePerformance,
    ValidationError,
)
from density_lab.optimize import FitConfig, FitDiagnostics, linear_lsq, minimize
from density_lab.registry import ScalingObservation

_EXPONENT_EPS = 1e-6
_N_FREE_PARAMS = 4
_MIN_OBSERVATIONS = 6

_ARTIFACT_KEYS = ("a", "alpha", "b", "beta", "rmse", "n_points", "converged")


@dataclass(frozen=True)
class LossLawFit:
    """Fitted two-term power law with its diagnostics."""

    a: float
    alpha: float
    b: float
    beta: float
    diagnostics: FitDiagnostics

    def __post_init__(self) -> None:
        for label, value in (("a", self.a), ("b", self.b)):
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{label}: must be finite and > 0")
        for label, value in (("alpha", self.alpha), ("beta", self.beta)):
            if not (math.isfinite(value) and 0 < value < 2):
                raise ValidationError(f"{label}: exponent must lie in (0, 2)")


def conditional_loss(a: float, alpha: float, b: float, beta: float, params, tokens):
    """Evaluate ``a * params**-alpha + b * tokens**-beta`` (vectorized)."""
    n = np.asarray(params, dtype=float)
    d = np.asarray(tokens, dtype=float)
    out = a * n ** -alpha + b * d ** -beta
    return float(out) if out.ndim == 0 else out


def default_fit_config() -> FitConfig:
    """Exponent multistart over {0.1, ..., 0.9}^2 with box bounds inside (0, 2)."""
    grid = tuple((i / 10.0, j / 10.0) for i in range(1, 10) for j in range(1, 10))
    bounds = ((_EXPONENT_EPS, 2.0 - _EXPONENT_EPS),) * 2
    return FitConfig(
        max_iterations=4000,
        relative_tolerance=1e-11,
        multistart_grid=grid,
        parameter_bounds=bounds,
    )


def _solve_coefficients(n: np.ndarray, d: np.ndarray, loss: np.ndarray, alpha: float, beta: float):
    """Best (a, b) for fixed exponents, or None when infeasible."""
    design = np.column_stack([n ** -alpha, d ** -beta])
    try:
        a, b = linear_lsq(design, loss)
    except (RankDeficient, ValidationError):
        return None
    if a <= 0 or b <= 0 or not (math.isfinite(a) and math.isfinite(b)):
        return None
    return float(a), float(b)


def fit_loss_law(observations, config: FitConfig | None = None) -> LossLawFit:
    """Fit the two-term power law to scaling observations.

    Needs at least six observations with at least two distinct parameter
    counts and two distinct token counts. Emits NonConvergenceWarning (and
    still returns the best fit found) when the search hits the iteration cap.
    """
    obs = list(observations)
    if len(obs) < _MIN_OBSERVATIONS:
        raise InsufficientData(f"need >= {_MIN_OBSERVATIONS} observations, got {len(obs)}")
    for o in obs:
        if not isinstance(o, ScalingObservation):
            raise ValidationError("observations: expected ScalingObservation items")
    n = np.array([o.params for o in obs], dtype=float)
    d = np.array([o.tokens for o in obs], dtype=float)
    loss = np.array([o.loss for o in obs], dtype=float)
    if np.unique(n).size < 2 or np.unique(d).size < 2:
        raise DegenerateGrid("observations must span >= 2 distinct params and >= 2 distinct tokens")
    log_loss = np.log(loss)

    def objective(x: np.ndarray) -> float:
        alpha, beta = float(x[0]), float(x[1])
        coeffs = _solve_coefficients(n, d, loss, alpha, beta)
        if coeffs is None:
            return math.inf
        predicted = coeffs[0] * n ** -alpha + coeffs[1] * d ** -beta
        if np.any(predicted <= 0):
            return math.inf
        residual = np.log(predicted) - log_loss
        return float(residual @ residual)

    cfg = config if config is not None else default_fit_config()
    x, diagnostics = minimize(objective, cfg, n_points=len(obs))
    alpha, beta = float(x[0]), float(x[1])
    coeffs = _solve_coefficients(n, d, loss, alpha, beta)
    if coeffs is None:
        raise DegenerateGrid("no positive-coefficient solution at the selected exponents")
    diagnostics = replace(diagnostics, n_params=_N_FREE_PARAMS)
    if not diagnostics.converged:
        warnings.warn(
            f"loss-law fit stopped at the iteration cap (objective {diagnostics.objective_value:.3e})",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return LossLawFit(a=coeffs[0], alpha=alpha, b=coeffs[1], beta=beta, diagnostics=diagnostics)


def predict_loss(fit: LossLawFit, params: float, tokens: float) -> float:
    """Loss the fitted law assigns to a (params, tokens) pair."""
    if not (math.isfinite(params) and params > 0):
        raise ValidationError("params: must be finite and > 0")
    if not (math.isfinite(tokens) and tokens > 0):
        raise ValidationError("tokens: must be finite and > 0")
    return conditional_loss(fit.a, fit.alpha, fit.b, fit.beta, params, tokens)


def invert_for_params(fit: LossLawFit, loss: float, tokens: float) -> float:
    """Parameter count at which the law reaches ``loss`` given ``tokens``.

    The data term ``b * tokens**-beta`` is a hard floor: at or below it no
    finite parameter count attains the requested loss, which raises
    UnattainablePerformance.
    """
    if not (math.isfinite(tokens) and tokens > 0):
        raise ValidationError("tokens: must be finite and > 0")
    if not math.isfinite(loss):
        raise ValidationError("loss: must be finite")
    floor = fit.b * tokens ** -fit.beta
    if loss <= floor:
        raise UnattainablePerformance(
            f"loss {loss!r} is at or below the data-limited floor {floor!r} at {tokens:.6g} tokens"
        )
    return ((loss - floor) / fit.a) ** (-1.0 / fit.alpha)


def to_artifact(fit: LossLawFit) -> dict:
    """JSON-ready summary with the published key set."""
    return {
        "a": fit.a,
        "alpha": fit.alpha,
        "b": fit.b,
        "beta": fit.beta,
        "rmse": fit.diagnostics.rmse,
        "n_points": fit.diagnostics.n_points,
        "converged": fit.diagnostics.converged,
    }


def from_artifact(data: dict) -> LossLawFit:
    """Rebuild a fit from ``to_artifact`` output (iteration count not preserved)."""
    if set(data) != set(_ARTIFACT_KEYS):
        raise ValidationError(
            f"loss-law artifact must have exactly keys {sorted(_ARTIFACT_KEYS)}, got {sorted(data)}"
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
    return LossLawFit(
        a=float(data["a"]),
        alpha=float(data["alpha"]),
        b=float(data["b"]),
        beta=float(data["beta"]),
        diagnostics=diagnostics,
    )
