"""Shared fitting machinery: linear least squares, simplex descent, multistart.

All curve fits in this package reduce to two primitives. ``linear_lsq``
solves the parts of a model that enter linearly. ``minimize`` handles the
nonlinear remainder with a derivative-free Nelder-Mead simplex run from every
start in a configured grid, so no fit depends on gradients or on a lucky
initial guess. Everything here is deterministic: candidate evaluation order
is fixed, and ties between starts are broken by start index, so repeated runs
with the same configuration are bit-identical. (Starts are independent, so an
implementation could evaluate them in parallel; the (value, start index)
selection rule would make that reordering invisible.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from density_lab.errors import (
    DegenerateData,
    NoFiniteStart,
    RankDeficient,
    ValidationError,
)

# Floor added to the convergence denominator so an objective whose minimum is
# exactly zero can still satisfy a relative test.
_TINY = 1e-12

# Simplex construction offsets, relative and absolute (for zero coordinates).
_NONZERO_STEP = 0.05
_ZERO_STEP = 0.00025

# Refinement passes restarted from the incumbent with a small fresh simplex.
_POLISH_ROUNDS = 2
_POLISH_SCALE = 1e-3


@dataclass(frozen=True)
class FitDiagnostics:
    """How a fit went: residual scale, data size, and convergence record.

    ``rmse`` is the root-mean-square residual implied by
    ``objective_value`` (meaningful when the objective is a sum of squared
    residuals). ``iterations`` counts simplex steps summed over every start
    and refinement pass.
    """

    rmse: float
    n_points: int
    n_params: int
    converged: bool
    iterations: int
    objective_value: float

    def __post_init__(self) -> None:
        if not isinstance(self.n_points, int) or self.n_points < 0:
            raise ValidationError("n_points: must be a non-negative integer")
        if not isinstance(self.n_params, int) or self.n_params < 1:
            raise ValidationError("n_params: must be a positive integer")
        if not math.isfinite(self.rmse) or self.rmse < 0:
            raise ValidationError("rmse: must be finite and >= 0")
        if self.iterations < 0:
            raise ValidationError("iterations: must be >= 0")
        if self.converged and self.n_points < self.n_params:
            raise ValidationError(
                "converged: cannot hold with fewer points than parameters "
                f"({self.n_points} < {self.n_params})"
            )


@dataclass(frozen=True)
class FitConfig:
    """Knobs shared by every nonlinear fit.

    ``multistart_grid`` lists the initial parameter vectors to descend from;
    ``parameter_bounds`` (optional, one closed interval per parameter) turns
    any step outside the box into an infinite objective value.
    """

    max_iterations: int = 5000
    relative_tolerance: float = 1e-10
    multistart_grid: tuple[tuple[float, ...], ...] = ()
    parameter_bounds: tuple[tuple[float, float], ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.max_iterations, int) or self.max_iterations < 1:
            raise ValidationError("max_iterations: must be a positive integer")
        if not (math.isfinite(self.relative_tolerance) and self.relative_tolerance > 0):
            raise ValidationError("relative_tolerance: must be finite and > 0")
        object.__setattr__(
            self, "multistart_grid", tuple(tuple(float(v) for v in start) for start in self.multistart_grid)
        )
        if self.parameter_bounds is not None:
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.parameter_bounds)
            for lo, hi in bounds:
                if math.isnan(lo) or math.isnan(hi) or lo > hi:
                    raise ValidationError(f"parameter_bounds: empty interval ({lo}, {hi})")
            object.__setattr__(self, "parameter_bounds", bounds)
        dims = {len(start) for start in self.multistart_grid}
        if len(dims) > 1:
            raise ValidationError("multistart_grid: starts have inconsistent dimensions")
        if dims and self.parameter_bounds is not None and len(self.parameter_bounds) not in dims:
            raise ValidationError("parameter_bounds: dimension does not match multistart_grid")


def linear_lsq(design: Sequence[Sequence[float]] | np.ndarray, targets: Sequence[float] | np.ndarray) -> np.ndarray:
    """Solve ``design @ coef ~ targets`` in the least-squares sense.

    Requires at least as many rows as columns and full column rank;
    otherwise raises RankDeficient.
    """
    a = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if a.ndim != 2:
        raise ValidationError("design: expected a 2-D matrix")
    if y.ndim != 1 or y.shape[0] != a.shape[0]:
        raise ValidationError("targets: length must match design rows")
    if not (np.isfinite(a).all() and np.isfinite(y).all()):
        raise ValidationError("linear_lsq: non-finite entries in system")
    rows, cols = a.shape
    if rows < cols:
        raise RankDeficient(f"underdetermined system: {rows} rows < {cols} columns")
    coef, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    if rank < cols:
        raise RankDeficient(f"design matrix rank {rank} < {cols} columns")
    return coef


def r_squared(observed: Sequence[float] | np.ndarray, predicted: Sequence[float] | np.ndarray) -> float:
    """Coefficient of determination; DegenerateData when observations are constant."""
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.shape != pred.shape or obs.ndim != 1 or obs.shape[0] < 2:
        raise ValidationError("r_squared: need two same-length 1-D series with >= 2 points")
    if not (np.isfinite(obs).all() and np.isfinite(pred).all()):
        raise ValidationError("r_squared: non-finite entries")
    ss_tot = float(np.sum((obs - obs.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateData("r_squared: observed values are all identical")
    ss_res = float(np.sum((obs - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def _wrap_objective(
    objective: Callable[[np.ndarray], float],
    bounds: tuple[tuple[float, float], ...] | None,
) -> Callable[[np.ndarray], float]:
    def wrapped(x: np.ndarray) -> float:
        if bounds is not None:
            for value, (lo, hi) in zip(x, bounds):
                if value < lo or value > hi:
                    return math.inf
        value = float(objective(x))
        return math.inf if math.isnan(value) else value

    return wrapped


def _initial_simplex(x0: np.ndarray, scale: float) -> np.ndarray:
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        if sim[i + 1, i] != 0.0:
            sim[i + 1, i] *= 1.0 + scale
        else:
            sim[i + 1, i] = _ZERO_STEP * (scale / _NONZERO_STEP)
    return sim


def _nelder_mead(
    func: Callable[[np.ndarray], float],
    x0: np.ndarray,
    max_iterations: int,
    relative_tolerance: float,
    scale: float = _NONZERO_STEP,
) -> tuple[np.ndarray, float, int, bool]:
    """One simplex descent. Returns (best point, best value, steps, converged).

    Convergence is a relative spread test across the sorted simplex:
    ``2 |f_worst - f_best| / (|f_worst| + |f_best| + tiny) < tol``.
    """
    sim = _initial_simplex(x0, scale)
    fsim = np.array([func(v) for v in sim])
    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]

    iterations = 0
    converged = False
    while iterations < max_iterations:
        f_best, f_worst = fsim[0], fsim[-1]
        if math.isfinite(f_worst):
            spread = 2.0 * abs(f_worst - f_best) / (abs(f_worst) + abs(f_best) + _TINY)
            if spread < relative_tolerance:
                converged = True
                break
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        reflected = centroid + (centroid - sim[-1])
        f_reflected = func(reflected)
        if f_reflected < fsim[0]:
            expanded = centroid + 2.0 * (centroid - sim[-1])
            f_expanded = func(expanded)
            if f_expanded < f_reflected:
                sim[-1], fsim[-1] = expanded, f_expanded
            else:
                sim[-1], fsim[-1] = reflected, f_reflected
        elif f_reflected < fsim[-2]:
            sim[-1], fsim[-1] = reflected, f_reflected
        else:
            if f_reflected < fsim[-1]:
                contracted = centroid + 0.5 * (centroid - sim[-1])
            else:
                contracted = centroid - 0.5 * (centroid - sim[-1])
            f_contracted = func(contracted)
            if f_contracted < min(f_reflected, fsim[-1]):
                sim[-1], fsim[-1] = contracted, f_contracted
            else:
                for i in range(1, sim.shape[0]):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fsim[i] = func(sim[i])
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]

    return sim[0].copy(), float(fsim[0]), iterations, converged


def minimize(
    objective: Callable[[np.ndarray], float],
    config: FitConfig,
    n_points: int | None = None,
) -> tuple[np.ndarray, FitDiagnostics]:
    """Minimize ``objective`` from every configured start; keep the best result.

    Starts whose objective is non-finite are skipped; if none survives,
    NoFiniteStart is raised. The winner (ties broken by start index) is then
    refined with fresh small simplexes. ``n_points`` feeds the diagnostics'
    rmse and the convergence gate; it defaults to the parameter count, which
    makes ``converged`` reachable for generic objectives.

    Never returns a point worse than the best start's own objective value.
    """
    if not config.multistart_grid:
        raise ValidationError("multistart_grid: need at least one start")
    func = _wrap_objective(objective, config.parameter_bounds)

    best: tuple[float, int, np.ndarray, bool] | None = None
    total_iterations = 0
    for index, start in enumerate(config.multistart_grid):
        x0 = np.asarray(start, dtype=float)
        if not math.isfinite(func(x0)):
            continue
        x, fx, steps, run_converged = _nelder_mead(
            func, x0, config.max_iterations, config.relative_tolerance
        )
        total_iterations += steps
        if best is None or (fx, index) < (best[0], best[1]):
            best = (fx, index, x, run_converged)
    if best is None:
        raise NoFiniteStart("no start in the multistart grid has a finite objective")

    best_value, _, best_x, converged = best
    for _ in range(_POLISH_ROUNDS):
        x, fx, steps, run_converged = _nelder_mead(
            func, best_x, config.max_iterations, config.relative_tolerance, scale=_POLISH_SCALE
        )
        total_iterations += steps
        if fx <= best_value:
            best_x, best_value = x, fx
        converged = run_converged

    n_params = int(best_x.size)
    points = n_params if n_points is None else int(n_points)
    rmse = math.sqrt(max(best_value, 0.0) / max(points, 1))
    diagnostics = FitDiagnostics(
        rmse=rmse,
        n_points=points,
        n_params=n_params,
        converged=converged and points >= n_params,
        iterations=total_iterations,
        objective_value=best_value,
    )
    return best_x, diagnostics
