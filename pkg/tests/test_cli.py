"""End-to-end command-line tests.

Commands run in-process through ``cli.main`` so exit codes and artifacts
can be asserted without subprocess overhead; one smoke test covers the
``python -m`` entry point. A module-scoped synthetic workspace is shared
by the read-only stages to keep the suite fast.
"""

import json
import math
import subprocess
import sys
from datetime import date, timedelta
from pathlib import Path

import pytest

from density_lab import cli, registry, synth
from density_lab.optimize import FitConfig
from density_lab.registry import DEFAULT_EPOCH
from density_lab.synth import SyntheticSpec
from density_lab.trends import TimedValue

from helpers import make_loss_fit, make_perf_fit


SLOPE, INTERCEPT = 0.0073, math.log(0.1)


def _run(*argv) -> int:
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic dataset plus both fitted curves, chained through one dir."""
    out = tmp_path_factory.mktemp("pipeline")
    assert _run("synth", "--out-dir", str(out)) == 0
    assert _run("fit-loss", "--scaling", str(out / "scaling.csv"), "--out-dir", str(out)) == 0
    assert _run("fit-perf", "--perf", str(out / "perf.csv"), "--out-dir", str(out)) == 0
    return out


def test_synth_writes_the_full_dataset(tmp_path):
    assert _run("synth", "--out-dir", str(tmp_path), "--seed", "5") == 0
    for name in ("scaling.csv", "perf.csv", "models.csv", "truth.json"):
        assert (tmp_path / name).is_file()
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["seed"] == 5
    models = registry.load_models((tmp_path / "models.csv").read_text(), fmt="csv")
    assert len(models) == 40


def test_fit_loss_recovers_the_generating_law(workspace):
    fit = json.loads((workspace / "loss_fit.json").read_text())
    a, alpha, b, beta = synth.DEFAULT_LOSS_TRUTH
    assert fit["a"] == pytest.approx(a, rel=1e-4)
    assert fit["alpha"] == pytest.approx(alpha, rel=1e-4)
    assert fit["b"] == pytest.approx(b, rel=1e-4)
    assert fit["beta"] == pytest.approx(beta, rel=1e-4)
    assert fit["converged"] is True
    assert (workspace / "loss_fit.svg").is_file()


def test_fit_perf_recovers_the_generating_curve(workspace):
    fit = json.loads((workspace / "perf_fit.json").read_text())
    c, gamma, l, d = synth.DEFAULT_PERF_TRUTH
    assert fit["c"] == pytest.approx(c, rel=1e-4)
    assert fit["gamma"] == pytest.approx(gamma, rel=1e-4)
    assert fit["l"] == pytest.approx(l, rel=1e-4)
    assert fit["d"] == pytest.approx(d, abs=1e-4)
    assert (workspace / "perf_fit.svg").is_file()


def test_density_report_artifacts(workspace, capsys):
    assert (
        _run("density", "--models", str(workspace / "models.csv"), "--out-dir", str(workspace)) == 0
    )
    text = (workspace / "density_report.csv").read_text()
    assert text.splitlines()[0] == "model,benchmark,score,effective_loss,effective_params,density,d0_tokens"
    rows = json.loads((workspace / "density_report.json").read_text())
    assert len(rows) == 40
    # the synthetic models encode exp(slope * t + intercept) exactly
    for row in rows:
        assert row["benchmark"] == "synthetic"
        assert row["d0_tokens"] == 1.0e12
    by_name = {r["model"]: r["density"] for r in rows}
    assert by_name["synth-000"] == pytest.approx(0.1, rel=1e-4)
    summary = json.loads((workspace / "density_summary.json").read_text())
    assert set(summary) == {"aggregates", "skipped", "d0_tokens"}
    assert summary["skipped"] == []
    assert len(summary["aggregates"]) == 40
    out = capsys.readouterr().out
    assert "note: aggregate method 'geometric'" in out


def test_aggregate_note_is_suppressed_when_chosen_explicitly(workspace, capsys):
    assert (
        _run(
            "density",
            "--models", str(workspace / "models.csv"),
            "--out-dir", str(workspace),
            "--aggregate", "geometric",
        )
        == 0
    )
    assert "note: aggregate" not in capsys.readouterr().out


def test_trend_recovers_the_planted_slope(workspace):
    assert (
        _run("trend", "--models", str(workspace / "models.csv"), "--out-dir", str(workspace)) == 0
    )
    fit = json.loads((workspace / "trend.json").read_text())
    assert fit["slope_per_day"] == pytest.approx(SLOPE, rel=1e-3)
    assert fit["doubling_days"] == pytest.approx(math.log(2.0) / SLOPE, rel=1e-3)
    assert (workspace / "density_trend.svg").is_file()


def test_project_payload(workspace):
    target = DEFAULT_EPOCH.reference_date + timedelta(days=470)
    assert (
        _run(
            "project",
            "--out-dir", str(workspace),
            "--target-date", target.isoformat(),
        )
        == 0
    )
    payload = json.loads((workspace / "projection.json").read_text())
    assert payload["target_date"] == target.isoformat()
    assert payload["t_days"] == 470
    assert payload["projected_value"] == pytest.approx(0.1 * math.exp(SLOPE * 470), rel=1e-2)
    trend_doubling = payload["trend_doubling_days"]
    chip = payload["chip_doubling_days"]
    assert chip == 766.5
    combined = 1.0 / (1.0 / trend_doubling + 1.0 / chip)
    assert payload["combined_doubling_days"] == pytest.approx(combined, rel=1e-12)
    assert payload["combined_multiple_at_target"] == pytest.approx(2.0 ** (470 / combined), rel=1e-12)


def test_report_chains_every_stage(tmp_path):
    src = tmp_path / "data"
    assert _run("synth", "--out-dir", str(src)) == 0
    prices = registry.dump_prices(
        [
            registry.PriceRecord(model="first", date=date(2022, 12, 1), usd_per_million_tokens=20.0),
            registry.PriceRecord(model="second", date=date(2024, 8, 1), usd_per_million_tokens=0.075),
        ]
    )
    (src / "prices.csv").write_text(prices)
    code = _run(
        "report",
        "--scaling", str(src / "scaling.csv"),
        "--perf", str(src / "perf.csv"),
        "--models", str(src / "models.csv"),
        "--prices", str(src / "prices.csv"),
        "--out-dir", str(tmp_path / "out"),
    )
    assert code == 0
    for name in (
        "loss_fit.json", "perf_fit.json", "density_report.csv",
        "trend.json", "price_summary.json",
    ):
        assert (tmp_path / "out" / name).is_file()


def test_price_trend_summary(tmp_path):
    prices = registry.dump_prices(
        [
            registry.PriceRecord(model="first", date=date(2022, 12, 1), usd_per_million_tokens=20.0),
            registry.PriceRecord(model="second", date=date(2024, 8, 1), usd_per_million_tokens=0.075),
        ]
    )
    (tmp_path / "prices.csv").write_text(prices)
    assert _run("price-trend", "--prices", str(tmp_path / "prices.csv"), "--out-dir", str(tmp_path)) == 0
    summary = json.loads((tmp_path / "price_summary.json").read_text())
    assert round(summary["reduction_factor"], 1) == 266.7
    assert summary["halving_days"] == pytest.approx(609 / math.log2(20.0 / 0.075), rel=1e-9)
    assert 2.3 <= summary["halving_months"] <= 2.9
    assert summary["first"]["usd_per_million_tokens"] == 20.0
    assert summary["last"]["usd_per_million_tokens"] == 0.075


def _piecewise_models(out_dir: Path, slope_before: float, slope_after: float, t_split: int):
    spec = SyntheticSpec()
    points = []
    for i, t in enumerate(range(t_split - 240, t_split + 270, 30)):
        slope = slope_before if t < t_split else slope_after
        points.append(
            TimedValue(t=float(t), value=0.1 * math.exp(slope * (t - t_split)), label=f"model-{i:03d}")
        )
    models = synth.timeline_models(points, spec)
    (out_dir / "piecewise.csv").write_text(registry.dump_models(models, fmt="csv"))
    return out_dir / "piecewise.csv"


def test_split_trend_measures_the_growth_ratio(workspace, tmp_path):
    t_split = 300
    split_date = DEFAULT_EPOCH.reference_date + timedelta(days=t_split)
    models_path = _piecewise_models(tmp_path, 0.0048, 0.0073, t_split)
    assert (
        _run(
            "density",
            "--models", str(models_path),
            "--loss-fit", str(workspace / "loss_fit.json"),
            "--perf-fit", str(workspace / "perf_fit.json"),
            "--out-dir", str(tmp_path),
        )
        == 0
    )
    assert (
        _run(
            "split-trend",
            "--models", str(models_path),
            "--split-date", split_date.isoformat(),
            "--out-dir", str(tmp_path),
        )
        == 0
    )
    summary = json.loads((tmp_path / "split_summary.json").read_text())
    assert summary["split_date"] == split_date.isoformat()
    assert summary["slope_before"] == pytest.approx(0.0048, rel=1e-2)
    assert summary["slope_after"] == pytest.approx(0.0073, rel=1e-2)
    assert summary["slope_ratio"] == pytest.approx(0.0073 / 0.0048, rel=2e-2)
    assert (tmp_path / "trend_before.json").is_file()
    assert (tmp_path / "trend_after.json").is_file()
    assert (tmp_path / "split_trend.svg").is_file()


def test_split_with_no_models_after_the_date_fails(workspace, tmp_path, capsys):
    models_path = _piecewise_models(tmp_path, 0.0048, 0.0073, 300)
    assert (
        _run(
            "density",
            "--models", str(models_path),
            "--loss-fit", str(workspace / "loss_fit.json"),
            "--perf-fit", str(workspace / "perf_fit.json"),
            "--out-dir", str(tmp_path),
        )
        == 0
    )
    far_future = DEFAULT_EPOCH.reference_date + timedelta(days=10_000)
    code = _run(
        "split-trend",
        "--models", str(models_path),
        "--split-date", far_future.isoformat(),
        "--out-dir", str(tmp_path),
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def _compression_registry(out_dir: Path) -> Path:
    loss_fit = make_loss_fit(*synth.DEFAULT_LOSS_TRUTH)
    perf_fit = make_perf_fit(*synth.DEFAULT_PERF_TRUTH)

    def score_of(n_effective: float) -> float:
        from density_lab.loss_law import predict_loss
        from density_lab.perf_curve import predict_score

        return predict_score(perf_fit, predict_loss(loss_fit, n_effective, 1.0e12))

    models = [
        registry.ModelRecord(
            name="base", param_count=1.0e9, release_date=date(2024, 1, 1),
            scores={"bench": score_of(1.0e9)},
        ),
        registry.ModelRecord(
            name="base-small", param_count=5.0e8, release_date=date(2024, 3, 1),
            scores={"bench": score_of(4.0e8)}, compressed_from="base",
        ),
    ]
    path = out_dir / "compression_models.csv"
    path.write_text(registry.dump_models(models, fmt="csv"))
    return path


def test_compare_compression_ratio(workspace, tmp_path):
    models_path = _compression_registry(tmp_path)
    assert (
        _run(
            "compare-compression",
            "--models", str(models_path),
            "--loss-fit", str(workspace / "loss_fit.json"),
            "--perf-fit", str(workspace / "perf_fit.json"),
            "--out-dir", str(tmp_path),
        )
        == 0
    )
    data = json.loads((tmp_path / "compression.json").read_text())
    assert data["skipped"] == []
    (pair,) = data["pairs"]
    assert pair["original"] == "base"
    assert pair["compressed"] == "base-small"
    # 4e8 effective params in a 5e8 body vs density 1.0 for the source
    assert pair["original_density"] == pytest.approx(1.0, rel=1e-3)
    assert pair["compressed_density"] == pytest.approx(0.8, rel=1e-3)
    assert pair["density_ratio"] == pytest.approx(0.8, rel=1e-3)
    assert pair["denser"] is False
    csv_lines = (tmp_path / "compression.csv").read_text().splitlines()
    assert csv_lines[0] == "original,compressed,original_density,compressed_density,density_ratio,denser"
    assert len(csv_lines) == 2


def test_compare_compression_without_links_fails(workspace, tmp_path, capsys):
    models = [
        registry.ModelRecord(
            name="solo", param_count=1.0e9, release_date=date(2024, 1, 1), scores={"bench": 0.5}
        )
    ]
    path = tmp_path / "models.csv"
    path.write_text(registry.dump_models(models, fmt="csv"))
    code = _run(
        "compare-compression",
        "--models", str(path),
        "--loss-fit", str(workspace / "loss_fit.json"),
        "--perf-fit", str(workspace / "perf_fit.json"),
        "--out-dir", str(tmp_path),
    )
    assert code == 1
    assert "compressed_from" in capsys.readouterr().err


# -- exit codes and configuration ----------------------------------------------


def test_usage_errors_exit_1(tmp_path, capsys):
    assert _run("--no-such-flag") == 1
    assert _run() == 1
    assert _run("fit-loss", "--scaling", str(tmp_path / "missing.csv")) == 1
    capsys.readouterr()


def test_help_exits_0(capsys):
    assert _run("--help") == 0
    assert "density" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "density_lab", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "synth" in proc.stdout


def test_json_format_prints_machine_readable_output(workspace, tmp_path, capsys):
    code = _run(
        "fit-perf",
        "--perf", str(workspace / "perf.csv"),
        "--out-dir", str(tmp_path),
        "--format", "json",
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"c", "gamma", "l", "d", "rmse", "n_points", "converged"}


def test_config_file_sets_defaults_and_flags_override(tmp_path, monkeypatch):
    config_dir = tmp_path / "from_config"
    flag_dir = tmp_path / "from_flag"
    config = tmp_path / "config.toml"
    config.write_text(f'out_dir = "{config_dir}"\nseed = 9\n')
    monkeypatch.setenv("DENSITY_LAB_CONFIG", str(config))

    assert _run("synth") == 0
    truth = json.loads((config_dir / "truth.json").read_text())
    assert truth["seed"] == 9

    assert _run("synth", "--out-dir", str(flag_dir), "--seed", "3") == 0
    truth = json.loads((flag_dir / "truth.json").read_text())
    assert truth["seed"] == 3


def test_unknown_config_key_exits_1(tmp_path, monkeypatch, capsys):
    config = tmp_path / "config.toml"
    config.write_text('no_such_setting = 1\n')
    monkeypatch.setenv("DENSITY_LAB_CONFIG", str(config))
    assert _run("synth", "--out-dir", str(tmp_path)) == 1
    assert "unknown key" in capsys.readouterr().err


def test_artifacts_are_byte_reproducible(tmp_path):
    outputs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert _run("synth", "--out-dir", str(out), "--seed", "2", "--noise-sigma", "0.02") == 0
        assert _run("fit-loss", "--scaling", str(out / "scaling.csv"), "--out-dir", str(out)) == 0
        assert _run("fit-perf", "--perf", str(out / "perf.csv"), "--out-dir", str(out)) == 0
        assert _run("density", "--models", str(out / "models.csv"), "--out-dir", str(out)) == 0
        assert _run("trend", "--models", str(out / "models.csv"), "--out-dir", str(out)) == 0
        outputs.append(out)
    first, second = outputs
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_iteration_capped_fit_exits_2(workspace, tmp_path, monkeypatch, capsys):
    from density_lab import loss_law

    original = loss_law.default_fit_config

    def capped(*args, **kwargs):
        cfg = original(*args, **kwargs)
        return FitConfig(
            max_iterations=1,
            relative_tolerance=cfg.relative_tolerance,
            multistart_grid=cfg.multistart_grid[:4],
            parameter_bounds=cfg.parameter_bounds,
            seed=cfg.seed,
        )

    monkeypatch.setattr(loss_law, "default_fit_config", capped)
    code = _run("fit-loss", "--scaling", str(workspace / "scaling.csv"), "--out-dir", str(tmp_path))
    assert code == 2
    assert "warning:" in capsys.readouterr().err
    # the artifact is still written so the pipeline can be inspected
    assert (tmp_path / "loss_fit.json").is_file()
