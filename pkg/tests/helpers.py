"""Constructors shared across test modules.

Fitted-curve dataclasses validate their diagnostics, so tests that need a
curve with known parameters (rather than one produced by an actual fit)
build it through these helpers.
"""

from __future__ import annotations

from density_lab.loss_law import LossLawFit, conditional_loss
from density_lab.optimize import FitDiagnostics
from density_lab.perf_curve import PerfCurveFit


def make_diag(n_points: int = 16, n_params: int = 4) -> FitDiagnostics:
    return FitDiagnostics(
        rmse=0.0,
        n_points=n_points,
        n_params=n_params,
        converged=True,
        iterations=1,
        objective_value=0.0,
    )


def make_loss_fit(a: float = 1.0, alpha: float = 0.5, b: float = 1.0, beta: float = 0.5) -> LossLawFit:
    return LossLawFit(a=a, alpha=alpha, b=b, beta=beta, diagnostics=make_diag())


def make_perf_fit(c: float = 1.0, gamma: float = -10.0, l: float = 1.0, d: float = 0.0) -> PerfCurveFit:
    return PerfCurveFit(c=c, gamma=gamma, l=l, d=d, diagnostics=make_diag())


def random_fit_pair(rng, d0_tokens: float = 1.0e12):
    """A random but well-conditioned (loss law, score curve) pair.

    The ranges keep every parameter count in [1e5, 1e12] mapped to a score
    strictly inside the sigmoid's open range, so the score -> loss -> params
    inversion stays numerically clean.
    """
    alpha = rng.uniform(0.3, 0.5)
    loss_span = rng.uniform(1.0, 4.0)
    a = loss_span * 1e5 ** alpha
    beta = rng.uniform(0.2, 0.5)
    floor = rng.uniform(0.1, 0.5)
    b = floor * d0_tokens ** beta
    loss_fit = make_loss_fit(a, alpha, b, beta)

    hi = conditional_loss(a, alpha, b, beta, 1e5, d0_tokens)
    lo = conditional_loss(a, alpha, b, beta, 1e12, d0_tokens)
    pivot = conditional_loss(a, alpha, b, beta, 10 ** 8.5, d0_tokens)
    d = rng.uniform(0.0, 0.2)
    c = rng.uniform(0.5, 1.0 - d)
    z_max = rng.uniform(3.0, 5.0)
    gamma = -z_max / ((hi - lo) / 2.0)
    perf_fit = make_perf_fit(c, gamma, pivot, d)
    return loss_fit, perf_fit
