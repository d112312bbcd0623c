"""Effective parameter size, capability density, and compression comparisons."""

import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import make_loss_fit, make_perf_fit, random_fit_pair
from density_lab import density_core
from density_lab.density_core import (
    DEFAULT_D0_TOKENS,
    DensityEstimate,
    aggregate_density,
    aggregate_estimate,
    compare_compression,
    density,
    effective_params,
)
from density_lab.errors import (
    EmptyInput,
    LinkMismatch,
    MissingScore,
    MixedModels,
    NoCommonBenchmarks,
    ScoreAboveCeiling,
    ScoreBelowFloor,
    ValidationError,
)
from density_lab.loss_law import predict_loss
from density_lab.perf_curve import predict_score
from density_lab.registry import ModelRecord

LOSS_FIT = make_loss_fit(a=1.0, alpha=0.5, b=1.0, beta=0.5)
PERF_FIT = make_perf_fit(c=1.0, gamma=-10.0, l=0.001001, d=0.0)


def _score_for(n_params: float, loss_fit=LOSS_FIT, perf_fit=PERF_FIT) -> float:
    """Score the composed forward map assigns to a reference model of size n."""
    return predict_score(perf_fit, predict_loss(loss_fit, n_params, DEFAULT_D0_TOKENS))


def _model(name: str, param_count: float, score: float, benchmark: str = "bench", **kwargs) -> ModelRecord:
    return ModelRecord(
        name=name,
        param_count=param_count,
        release_date=date(2024, 1, 1),
        scores={benchmark: score},
        **kwargs,
    )


def _estimate(value: float, model: str = "m", benchmark: str = "bench", d0: float = DEFAULT_D0_TOKENS):
    return DensityEstimate(
        model=model,
        benchmark=benchmark,
        score=0.5,
        effective_loss=1.0,
        effective_params=value * 1e9,
        density=value,
        d0_tokens=d0,
    )


# -- effective parameter size ------------------------------------------------------


def test_midpoint_score_composes_to_known_size():
    # sigmoid midpoint -> loss 0.001001 -> the size whose law value that is
    assert effective_params(LOSS_FIT, PERF_FIT, 0.5, 1e12) == pytest.approx(1e6, rel=1e-9)


def test_inversion_guards_propagate():
    with pytest.raises(ScoreAboveCeiling):
        effective_params(LOSS_FIT, PERF_FIT, 1.0, 1e12)
    with pytest.raises(ScoreBelowFloor):
        effective_params(LOSS_FIT, PERF_FIT, 0.0, 1e12)


def test_effective_params_rejects_bad_budget():
    with pytest.raises(ValidationError):
        effective_params(LOSS_FIT, PERF_FIT, 0.5, 0.0)


def test_round_trip_through_both_curves():
    rng = np.random.default_rng(7)
    for _ in range(50):
        loss_fit, perf_fit = random_fit_pair(rng)
        n = 10.0 ** rng.uniform(5.0, 12.0)
        score = predict_score(perf_fit, predict_loss(loss_fit, n, DEFAULT_D0_TOKENS))
        recovered = effective_params(loss_fit, perf_fit, score)
        assert recovered == pytest.approx(n, rel=1e-9)


# -- density -------------------------------------------------------------------------


def test_density_is_effective_over_actual():
    model = _model("half-size", 2e6, 0.5)
    est = density(model, "bench", LOSS_FIT, PERF_FIT)
    assert est.density == pytest.approx(0.5, rel=1e-9)
    assert est.effective_params == pytest.approx(1e6, rel=1e-9)
    assert est.effective_loss == pytest.approx(0.001001, rel=1e-9)
    assert est.d0_tokens == DEFAULT_D0_TOKENS
    assert est.density == est.effective_params / model.param_count


@given(st.floats(min_value=5.0, max_value=12.0))
def test_reference_models_have_unit_density(log_n):
    n = 10.0 ** log_n
    model = _model("reference", n, _score_for(n))
    est = density(model, "bench", LOSS_FIT, PERF_FIT)
    assert est.density == pytest.approx(1.0, rel=1e-9)


def test_density_halves_when_param_count_doubles():
    score = _score_for(3e7)
    small = density(_model("m", 1e8, score), "bench", LOSS_FIT, PERF_FIT)
    large = density(_model("m", 2e8, score), "bench", LOSS_FIT, PERF_FIT)
    assert large.density == pytest.approx(small.density / 2.0, rel=1e-15)


def test_higher_score_means_higher_density():
    lo = density(_model("m", 1e8, 0.40), "bench", LOSS_FIT, PERF_FIT)
    hi = density(_model("m", 1e8, 0.45), "bench", LOSS_FIT, PERF_FIT)
    assert hi.density > lo.density


def test_missing_score_is_an_error():
    with pytest.raises(MissingScore, match="other"):
        density(_model("m", 1e8, 0.5), "other", LOSS_FIT, PERF_FIT)


def test_inversion_errors_name_model_and_benchmark():
    model = _model("edge-case", 1e8, 0.0)
    with pytest.raises(ScoreBelowFloor, match="edge-case/bench"):
        density(model, "bench", LOSS_FIT, PERF_FIT)


def test_estimate_type_validates_fields():
    with pytest.raises(ValidationError):
        _estimate(-1.0)
    with pytest.raises(ValidationError):
        DensityEstimate(
            model="m", benchmark="b", score=1.5, effective_loss=1.0,
            effective_params=1e9, density=1.0, d0_tokens=1e12,
        )


# -- aggregation -----------------------------------------------------------------------


def test_constant_densities_aggregate_to_the_constant():
    estimates = [_estimate(2.0, benchmark=f"b{i}") for i in range(3)]
    assert aggregate_density(estimates, "geometric") == pytest.approx(2.0, rel=1e-12)
    assert aggregate_density(estimates, "arithmetic") == pytest.approx(2.0, rel=1e-12)


def test_geometric_vs_arithmetic_on_spread_densities():
    estimates = [_estimate(1.0, benchmark="b1"), _estimate(4.0, benchmark="b2")]
    assert aggregate_density(estimates, "geometric") == pytest.approx(2.0, rel=1e-12)
    assert aggregate_density(estimates, "arithmetic") == pytest.approx(2.5, rel=1e-12)


def test_aggregate_guards():
    with pytest.raises(EmptyInput):
        aggregate_density([], "geometric")
    mixed_names = [_estimate(1.0, model="a"), _estimate(2.0, model="b")]
    with pytest.raises(MixedModels):
        aggregate_density(mixed_names, "geometric")
    mixed_budgets = [_estimate(1.0, d0=1e12), _estimate(2.0, d0=1e11)]
    with pytest.raises(MixedModels):
        aggregate_density(mixed_budgets, "geometric")
    with pytest.raises(ValidationError):
        aggregate_density([_estimate(1.0)], "median")


@given(st.floats(min_value=0.01, max_value=100.0), st.integers(min_value=1, max_value=6))
def test_geometric_mean_of_copies_is_identity(rho, k):
    estimates = [_estimate(rho, benchmark=f"b{i}") for i in range(k)]
    assert aggregate_density(estimates, "geometric") == pytest.approx(rho, rel=1e-12)


def test_aggregate_estimate_keeps_the_density_identity():
    model = ModelRecord(
        name="m",
        param_count=2e6,
        release_date=date(2024, 1, 1),
        scores={"b1": _score_for(8e5), "b2": _score_for(1.2e6)},
    )
    parts = [density(model, b, LOSS_FIT, PERF_FIT) for b in ("b1", "b2")]
    agg = aggregate_estimate(parts, "geometric")
    assert agg.benchmark == "aggregate"
    assert agg.model == "m"
    assert agg.density == pytest.approx(aggregate_density(parts, "geometric"), rel=1e-15)
    # effective_params is rescaled so the construction identity survives
    assert agg.effective_params / agg.density == pytest.approx(model.param_count, rel=1e-12)
    assert agg.d0_tokens == DEFAULT_D0_TOKENS


# -- compression comparisons ---------------------------------------------------------


def test_density_regression_reports_fractional_ratio():
    original = _model("base", 1e6, _score_for(1e6))
    compressed = _model("base-pruned", 5e5, _score_for(4e5), compressed_from="base")
    cmp_result = compare_compression(original, compressed, LOSS_FIT, PERF_FIT)
    assert cmp_result.original.density == pytest.approx(1.0, rel=1e-9)
    assert cmp_result.compressed.density == pytest.approx(0.8, rel=1e-9)
    assert cmp_result.density_ratio == pytest.approx(0.8, rel=1e-9)


def test_identical_records_have_unit_ratio():
    original = _model("base", 1e6, 0.5)
    compressed = _model("copy", 1e6, 0.5, compressed_from="base")
    cmp_result = compare_compression(original, compressed, LOSS_FIT, PERF_FIT)
    assert cmp_result.density_ratio == 1.0


def test_link_mismatch_rejected():
    original = _model("base", 1e6, 0.5)
    unlinked = _model("other", 1e6, 0.5)
    with pytest.raises(LinkMismatch):
        compare_compression(original, unlinked, LOSS_FIT, PERF_FIT)
    wrong = _model("w", 1e6, 0.5, compressed_from="someone-else")
    with pytest.raises(LinkMismatch):
        compare_compression(original, wrong, LOSS_FIT, PERF_FIT)


def test_no_common_benchmarks_rejected():
    original = _model("base", 1e6, 0.5, benchmark="b1")
    compressed = _model("small", 1e6, 0.5, benchmark="b2", compressed_from="base")
    with pytest.raises(NoCommonBenchmarks):
        compare_compression(original, compressed, LOSS_FIT, PERF_FIT)


def test_comparison_uses_only_the_shared_benchmarks():
    original = ModelRecord(
        name="base",
        param_count=1e6,
        release_date=date(2024, 1, 1),
        scores={"shared": _score_for(1e6), "only-base": 0.9},
    )
    compressed = ModelRecord(
        name="small",
        param_count=5e5,
        release_date=date(2024, 2, 1),
        scores={"shared": _score_for(4e5), "only-small": 0.2},
        compressed_from="base",
    )
    cmp_result = compare_compression(original, compressed, LOSS_FIT, PERF_FIT)
    assert cmp_result.density_ratio == pytest.approx(0.8, rel=1e-9)
