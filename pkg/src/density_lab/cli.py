"""Command-line pipeline over the density library.

Subcommands mirror the pipeline stages: fit the loss law, fit the score
curve, turn registry scores into density estimates, fit trends (overall,
split at a date, price), project forward, compare compressed models, and
generate synthetic datasets. Every stage writes its artifacts atomically
into ``--out-dir`` and reads its upstream artifacts from there by default,
so the stages chain through a single directory.

Settings resolve as flags > config file > built-in defaults. The config
file is TOML, located by the ``DENSITY_LAB_CONFIG`` environment variable.

Exit codes: 0 success, 1 any error (bad input, missing file, degenerate
data), 2 finished with warnings (a fit that hit its iteration cap).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from datetime import date
from pathlib import Path

try:
    import tomllib as _toml
except ModuleNotFoundError:
    import tomli as _toml

from density_lab import density_core, loss_law, perf_curve, registry, synth, trends
from density_lab.density_core import DEFAULT_D0_TOKENS, DensityEstimate
from density_lab.errors import (
    DensityLabError,
    NonConvergenceWarning,
    ParseError,
    ScoreAboveCeiling,
    ScoreBelowFloor,
    UnattainablePerformance,
    ValidationError,
    ZeroSlope,
)
from density_lab.registry import DEFAULT_EPOCH, Epoch
from density_lab.svgplot import Series, render_chart
from density_lab.synth import SyntheticSpec
from density_lab.trends import DEFAULT_SPLIT_DATE, MooreConfig, TimedValue

_DENSITY_CSV_HEADER = "model,benchmark,score,effective_loss,effective_params,density,d0_tokens"

_CONFIG_KEYS = {
    "models": str,
    "scaling": str,
    "perf": str,
    "prices": str,
    "d0_tokens": (int, float),
    "epoch": (str, date),
    "split_date": (str, date),
    "aggregate": str,
    "chip_doubling_days": (int, float),
    "out_dir": str,
    "seed": int,
    "format": str,
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one CLI invocation."""

    models: Path | None
    scaling: Path | None
    perf: Path | None
    prices: Path | None
    d0_tokens: float
    epoch: Epoch
    split_date: date
    aggregate: str
    chip_doubling_days: float
    out_dir: Path
    seed: int
    format: str
    aggregate_source: str = "default"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d0_tokens) and self.d0_tokens > 0):
            raise ValidationError("d0_tokens: must be finite and > 0")
        if self.aggregate not in ("geometric", "arithmetic"):
            raise ValidationError(f"aggregate: expected geometric|arithmetic, got {self.aggregate!r}")
        if not (math.isfinite(self.chip_doubling_days) and self.chip_doubling_days > 0):
            raise ValidationError("chip_doubling_days: must be finite and > 0")
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format: expected csv|json, got {self.format!r}")
        if not isinstance(self.seed, int):
            raise ValidationError("seed: must be an integer")


def _sig(value: float) -> str:
    return f"{value:.4g}"


def _write_text(path: Path, text: str) -> None:
    # Write-then-rename so a crash never leaves a half-written artifact.
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _read_json(path: Path) -> object:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _require(path: Path | None, flag: str) -> Path:
    if path is None:
        raise ValidationError(f"missing required input: {flag}")
    if not path.is_file():
        raise ValidationError(f"{flag}: no such file: {path}")
    return path


def _parse_iso(value, label: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ValidationError(f"{label}: cannot parse ISO date from {value!r}") from None


def _load_env_config() -> dict:
    location = os.environ.get("DENSITY_LAB_CONFIG")
    if not location:
        return {}
    path = Path(location)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValidationError(f"config file {path}: {exc}") from None
    try:
        data = _toml.loads(raw.decode("utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"config file {path}: {exc}") from None
    for key, value in data.items():
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"config file {path}: unknown key {key!r}")
        if not isinstance(value, _CONFIG_KEYS[key]) or isinstance(value, bool):
            raise ValidationError(f"config file {path}: key {key!r} has unexpected type")
    return data


def _resolve(args: argparse.Namespace) -> RunConfig:
    config = _load_env_config()

    def pick(key: str, default):
        flag = getattr(args, key, None)
        if flag is not None:
            return flag, "flag"
        if key in config:
            return config[key], "config"
        return default, "default"

    def pick_path(key: str) -> Path | None:
        value, _ = pick(key, None)
        return Path(value) if value is not None else None

    d0, _ = pick("d0_tokens", DEFAULT_D0_TOKENS)
    epoch_raw, _ = pick("epoch", DEFAULT_EPOCH.reference_date)
    split_raw, _ = pick("split_date", DEFAULT_SPLIT_DATE)
    aggregate, aggregate_source = pick("aggregate", "geometric")
    chip, _ = pick("chip_doubling_days", 766.5)
    out_dir, _ = pick("out_dir", ".")
    seed, _ = pick("seed", 0)
    fmt, _ = pick("format", "csv")
    return RunConfig(
        models=pick_path("models"),
        scaling=pick_path("scaling"),
        perf=pick_path("perf"),
        prices=pick_path("prices"),
        d0_tokens=float(d0),
        epoch=Epoch(_parse_iso(epoch_raw, "epoch")),
        split_date=_parse_iso(split_raw, "split_date"),
        aggregate=str(aggregate),
        chip_doubling_days=float(chip),
        out_dir=Path(out_dir),
        seed=int(seed),
        format=str(fmt),
        aggregate_source=aggregate_source,
    )


def _load_registry(cfg: RunConfig) -> list[registry.ModelRecord]:
    path = _require(cfg.models, "--models")
    fmt = "json" if path.suffix.lower() == ".json" else "csv"
    return registry.load_models(path.read_text(encoding="utf-8"), fmt=fmt)


def _load_fit_pair(cfg: RunConfig, args) -> tuple[loss_law.LossLawFit, perf_curve.PerfCurveFit]:
    loss_path = Path(getattr(args, "loss_fit", None) or cfg.out_dir / "loss_fit.json")
    perf_path = Path(getattr(args, "perf_fit", None) or cfg.out_dir / "perf_fit.json")
    lf = loss_law.from_artifact(_read_json(_require(loss_path, "--loss-fit")))
    pf = perf_curve.from_artifact(_read_json(_require(perf_path, "--perf-fit")))
    return lf, pf


def _catch_nonconvergence(func, *fargs, **fkwargs):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = func(*fargs, **fkwargs)
    warned = False
    for item in caught:
        if issubclass(item.category, NonConvergenceWarning):
            warned = True
            print(f"warning: {item.message}", file=sys.stderr)
    return result, warned


# -- fit commands -------------------------------------------------------------


def cmd_fit_loss(cfg: RunConfig, args) -> int:
    path = _require(cfg.scaling, "--scaling")
    observations = registry.load_observations(path.read_text(encoding="utf-8"))
    fit, warned = _catch_nonconvergence(loss_law.fit_loss_law, observations)
    artifact = loss_law.to_artifact(fit)
    _write_text(cfg.out_dir / "loss_fit.json", _dump_json(artifact))

    observed = [(o.params, o.loss) for o in observations]
    fitted = sorted(
        (o.params, loss_law.predict_loss(fit, o.params, o.tokens)) for o in observations
    )
    svg = render_chart(
        [Series("observed", tuple(observed)), Series("fitted", tuple(fitted), kind="line")],
        title="Conditional loss vs parameter count",
        x_label="parameters",
        y_label="loss",
        annotations=(
            f"a={_sig(fit.a)} alpha={_sig(fit.alpha)}",
            f"b={_sig(fit.b)} beta={_sig(fit.beta)}",
            f"rmse={_sig(fit.diagnostics.rmse)} (log-space)",
        ),
    )
    _write_text(cfg.out_dir / "loss_fit.svg", svg)

    if cfg.format == "json":
        print(_dump_json(artifact), end="")
    else:
        print(
            f"loss law: a={_sig(fit.a)} alpha={_sig(fit.alpha)} "
            f"b={_sig(fit.b)} beta={_sig(fit.beta)}"
        )
        print(
            f"rmse={_sig(fit.diagnostics.rmse)} n_points={fit.diagnostics.n_points} "
            f"converged={fit.diagnostics.converged}"
        )
    print(f"wrote {cfg.out_dir / 'loss_fit.json'}", file=sys.stderr)
    return 2 if warned else 0


def cmd_fit_perf(cfg: RunConfig, args) -> int:
    path = _require(cfg.perf, "--perf")
    points = registry.load_perf_points(path.read_text(encoding="utf-8"))
    fit, warned = _catch_nonconvergence(perf_curve.fit_perf_curve, points)
    artifact = perf_curve.to_artifact(fit)
    _write_text(cfg.out_dir / "perf_fit.json", _dump_json(artifact))

    losses = [p.loss for p in points]
    lo, hi = min(losses), max(losses)
    grid = [lo + (hi - lo) * i / 99.0 for i in range(100)]
    curve = [(x, perf_curve.predict_score(fit, x)) for x in grid]
    svg = render_chart(
        [
            Series("observed", tuple((p.loss, p.score) for p in points)),
            Series("fitted", tuple(curve), kind="line"),
        ],
        title="Benchmark score vs conditional loss",
        x_label="loss",
        y_label="score",
        annotations=(
            f"c={_sig(fit.c)} gamma={_sig(fit.gamma)}",
            f"l={_sig(fit.l)} d={_sig(fit.d)}",
            f"rmse={_sig(fit.diagnostics.rmse)}",
        ),
    )
    _write_text(cfg.out_dir / "perf_fit.svg", svg)

    if cfg.format == "json":
        print(_dump_json(artifact), end="")
    else:
        print(
            f"score curve: c={_sig(fit.c)} gamma={_sig(fit.gamma)} "
            f"l={_sig(fit.l)} d={_sig(fit.d)}"
        )
        print(
            f"rmse={_sig(fit.diagnostics.rmse)} n_points={fit.diagnostics.n_points} "
            f"converged={fit.diagnostics.converged}"
        )
    print(f"wrote {cfg.out_dir / 'perf_fit.json'}", file=sys.stderr)
    return 2 if warned else 0


# -- density ------------------------------------------------------------------


def _estimate_rows(estimates) -> str:
    lines = [_DENSITY_CSV_HEADER]
    for e in estimates:
        lines.append(
            f"{e.model},{e.benchmark},{e.score!r},{e.effective_loss!r},"
            f"{e.effective_params!r},{e.density!r},{e.d0_tokens!r}"
        )
    return "\n".join(lines) + "\n"


def _estimate_objects(estimates) -> list[dict]:
    return [
        {
            "model": e.model,
            "benchmark": e.benchmark,
            "score": e.score,
            "effective_loss": e.effective_loss,
            "effective_params": e.effective_params,
            "density": e.density,
            "d0_tokens": e.d0_tokens,
        }
        for e in estimates
    ]


def cmd_density(cfg: RunConfig, args) -> int:
    models = _load_registry(cfg)
    if not models:
        raise ValidationError("model registry is empty")
    lf, pf = _load_fit_pair(cfg, args)

    estimates: list[DensityEstimate] = []
    skipped: list[dict] = []
    for record in models:
        for benchmark in sorted(record.scores):
            try:
                estimates.append(density_core.density(record, benchmark, lf, pf, cfg.d0_tokens))
            except (ScoreBelowFloor, ScoreAboveCeiling, UnattainablePerformance) as exc:
                skipped.append(
                    {
                        "model": record.name,
                        "benchmark": benchmark,
                        "reason": type(exc).__name__,
                        "detail": str(exc),
                    }
                )

    aggregates = []
    for record in models:
        mine = [e for e in estimates if e.model == record.name]
        if mine:
            aggregates.append(
                {
                    "model": record.name,
                    "method": cfg.aggregate,
                    "density": density_core.aggregate_density(mine, cfg.aggregate),
                    "n_benchmarks": len(mine),
                }
            )

    _write_text(cfg.out_dir / "density_report.csv", _estimate_rows(estimates))
    _write_text(cfg.out_dir / "density_report.json", _dump_json(_estimate_objects(estimates)))
    summary = {"aggregates": aggregates, "skipped": skipped, "d0_tokens": cfg.d0_tokens}
    _write_text(cfg.out_dir / "density_summary.json", _dump_json(summary))

    if cfg.format == "json":
        print(_dump_json({"estimates": _estimate_objects(estimates), **summary}), end="")
    else:
        print(_estimate_rows(estimates), end="")
        if cfg.aggregate_source == "default":
            print("note: aggregate method 'geometric' (default; set --aggregate to override)")
        for agg in aggregates:
            print(f"aggregate {agg['model']}: density={_sig(agg['density'])} ({agg['method']}, n={agg['n_benchmarks']})")
        for skip in skipped:
            print(f"skipped {skip['model']}/{skip['benchmark']}: {skip['reason']}: {skip['detail']}")
    print(f"wrote {cfg.out_dir / 'density_report.csv'}", file=sys.stderr)
    return 0


def _aggregate_values(models, estimates, method: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for record in models:
        mine = [e for e in estimates if e.model == record.name]
        if mine:
            values[record.name] = density_core.aggregate_density(mine, method)
    return values


def _load_density_report(cfg: RunConfig, args) -> list[DensityEstimate]:
    path = Path(getattr(args, "density_report", None) or cfg.out_dir / "density_report.json")
    data = _read_json(_require(path, "--density-report"))
    if not isinstance(data, list):
        raise ValidationError(f"{path}: density report must be a JSON array")
    expected = {"model", "benchmark", "score", "effective_loss", "effective_params", "density", "d0_tokens"}
    out = []
    for i, obj in enumerate(data):
        if not isinstance(obj, dict) or set(obj) != expected:
            raise ValidationError(f"{path}: record {i}: expected exactly keys {sorted(expected)}")
        out.append(DensityEstimate(**obj))
    return out


# -- trends -------------------------------------------------------------------


def _trend_series(timeline, envelope, fit) -> list[Series]:
    t_lo = min(p.t for p in timeline)
    t_hi = max(p.t for p in timeline)
    line = tuple(
        (t, trends.project(fit, t)) for t in (t_lo + (t_hi - t_lo) * i / 59.0 for i in range(60))
    )
    return [
        Series("all models", tuple((p.t, p.value) for p in timeline)),
        Series("envelope", tuple((p.t, p.value) for p in envelope)),
        Series("fit", line, kind="line"),
    ]


def cmd_trend(cfg: RunConfig, args) -> int:
    models = _load_registry(cfg)
    estimates = _load_density_report(cfg, args)
    values = _aggregate_values(models, estimates, cfg.aggregate)
    if not values:
        raise ValidationError("no density values to fit a trend on")
    timeline = trends.model_timeline(models, values, cfg.epoch)
    envelope = trends.extract_envelope(timeline, "upper")
    fit = trends.fit_trend(envelope, epoch=cfg.epoch, direction="upper")
    _write_text(cfg.out_dir / "trend.json", _dump_json(trends.to_artifact(fit)))

    doubling = fit.doubling_days
    svg = render_chart(
        _trend_series(timeline, envelope, fit),
        title="Maximum capability density over time",
        x_label=f"days since {cfg.epoch.reference_date.isoformat()}",
        y_label="density",
        annotations=(
            f"slope={_sig(fit.slope_per_day)}/day",
            f"doubling={_sig(doubling)} days" if math.isfinite(doubling) else "doubling=flat",
            f"r2={_sig(fit.r_squared)}",
        ),
        log_y=True,
    )
    _write_text(cfg.out_dir / "density_trend.svg", svg)

    if cfg.format == "json":
        print(_dump_json(trends.to_artifact(fit)), end="")
    else:
        print(f"density trend: slope={_sig(fit.slope_per_day)}/day r2={_sig(fit.r_squared)}")
        if math.isfinite(doubling):
            print(f"doubling every {_sig(doubling)} days ({_sig(doubling / 30.4375)} months)")
        else:
            print("trend is flat; no doubling period")
        print(f"envelope points: {len(envelope)} of {len(timeline)}")
    print(f"wrote {cfg.out_dir / 'trend.json'}", file=sys.stderr)
    return 0


def cmd_split_trend(cfg: RunConfig, args) -> int:
    models = _load_registry(cfg)
    estimates = _load_density_report(cfg, args)
    values = _aggregate_values(models, estimates, cfg.aggregate)
    if not values:
        raise ValidationError("no density values to fit a trend on")
    timeline = trends.model_timeline(models, values, cfg.epoch)
    before, after = trends.split_trend(timeline, cfg.split_date, cfg.epoch, "upper")
    if before.slope_per_day == 0.0:
        raise ZeroSlope("before-trend slope is 0; growth ratio is undefined")
    ratio = after.slope_per_day / before.slope_per_day
    _write_text(cfg.out_dir / "trend_before.json", _dump_json(trends.to_artifact(before)))
    _write_text(cfg.out_dir / "trend_after.json", _dump_json(trends.to_artifact(after)))
    summary = {
        "split_date": cfg.split_date.isoformat(),
        "slope_before": before.slope_per_day,
        "slope_after": after.slope_per_day,
        "slope_ratio": ratio,
    }
    _write_text(cfg.out_dir / "split_summary.json", _dump_json(summary))

    t_split = registry.days_since(cfg.split_date, cfg.epoch)
    side_b = [p for p in timeline if p.t < t_split]
    side_a = [p for p in timeline if p.t >= t_split]

    def fitted_line(fit: trends.TrendFit, pts) -> tuple:
        t_lo = min(p.t for p in pts)
        t_hi = max(p.t for p in pts)
        return tuple((t, trends.project(fit, t)) for t in (t_lo + (t_hi - t_lo) * i / 29.0 for i in range(30)))

    svg = render_chart(
        [
            Series("before", tuple((p.t, p.value) for p in side_b)),
            Series("after", tuple((p.t, p.value) for p in side_a)),
            Series("fit before", fitted_line(before, side_b), kind="line"),
            Series("fit after", fitted_line(after, side_a), kind="line"),
        ],
        title="Density growth before and after the split date",
        x_label=f"days since {cfg.epoch.reference_date.isoformat()}",
        y_label="density",
        annotations=(
            f"before slope={_sig(before.slope_per_day)}/day",
            f"after slope={_sig(after.slope_per_day)}/day",
            f"ratio={_sig(ratio)}",
        ),
        log_y=True,
    )
    _write_text(cfg.out_dir / "split_trend.svg", svg)

    if cfg.format == "json":
        print(_dump_json(summary), end="")
    else:
        print(
            f"split at {cfg.split_date.isoformat()}: before={_sig(before.slope_per_day)}/day "
            f"after={_sig(after.slope_per_day)}/day ratio={_sig(ratio)}"
        )
    print(f"wrote {cfg.out_dir / 'split_summary.json'}", file=sys.stderr)
    return 0


def cmd_price_trend(cfg: RunConfig, args) -> int:
    path = _require(cfg.prices, "--prices")
    prices = registry.load_prices(path.read_text(encoding="utf-8"))
    fit = trends.fit_price_trend(prices, cfg.epoch)
    reduction = fit.envelope[0].value / fit.envelope[-1].value
    halving = fit.doubling_days if math.isfinite(fit.doubling_days) else None
    artifact = trends.to_artifact(fit)
    _write_text(cfg.out_dir / "price_trend.json", _dump_json(artifact))
    summary = {
        "reduction_factor": reduction,
        "halving_days": halving,
        "halving_months": None if halving is None else halving / 30.4375,
        "first": {"t": fit.envelope[0].t, "usd_per_million_tokens": fit.envelope[0].value},
        "last": {"t": fit.envelope[-1].t, "usd_per_million_tokens": fit.envelope[-1].value},
    }
    _write_text(cfg.out_dir / "price_summary.json", _dump_json(summary))

    points = [
        TimedValue(t=float(registry.days_since(p.date, cfg.epoch)), value=p.usd_per_million_tokens, label=p.model)
        for p in prices
    ]
    svg = render_chart(
        _trend_series(points, fit.envelope, fit),
        title="Cheapest inference price over time",
        x_label=f"days since {cfg.epoch.reference_date.isoformat()}",
        y_label="USD per million tokens",
        annotations=(
            f"reduction={_sig(reduction)}x",
            f"halving={_sig(halving)} days" if halving is not None else "price is flat",
        ),
        log_y=True,
    )
    _write_text(cfg.out_dir / "price_trend.svg", svg)

    if cfg.format == "json":
        print(_dump_json(summary), end="")
    else:
        print(f"price reduction: {_sig(reduction)}x between first and last envelope points")
        if halving is not None:
            print(f"halving every {_sig(halving)} days ({_sig(halving / 30.4375)} months)")
        else:
            print("price trend is flat")
    print(f"wrote {cfg.out_dir / 'price_summary.json'}", file=sys.stderr)
    return 0


def cmd_project(cfg: RunConfig, args) -> int:
    trend_path = Path(getattr(args, "trend", None) or cfg.out_dir / "trend.json")
    fit = trends.from_artifact(_read_json(_require(trend_path, "--trend")))
    target = _parse_iso(args.target_date, "--target-date")
    t_days = registry.days_since(target, fit.epoch)
    value = trends.project(fit, target)
    moore = MooreConfig(cfg.chip_doubling_days)
    combined = trends.combine_moore(fit.doubling_days, moore)
    multiple = 2.0 ** (t_days / combined)
    payload = {
        "target_date": target.isoformat(),
        "t_days": t_days,
        "projected_value": value,
        "trend_doubling_days": None if math.isinf(fit.doubling_days) else fit.doubling_days,
        "chip_doubling_days": moore.chip_doubling_days,
        "combined_doubling_days": combined,
        "combined_multiple_at_target": multiple,
    }
    _write_text(cfg.out_dir / "projection.json", _dump_json(payload))
    if cfg.format == "json":
        print(_dump_json(payload), end="")
    else:
        print(f"projection for {target.isoformat()} (t={t_days} days):")
        print(f"  trend value: {_sig(value)}")
        print(f"  combined doubling: {_sig(combined)} days (chip {_sig(moore.chip_doubling_days)})")
        print(f"  combined multiple at target: {_sig(multiple)}x")
    print(f"wrote {cfg.out_dir / 'projection.json'}", file=sys.stderr)
    return 0


def cmd_compare_compression(cfg: RunConfig, args) -> int:
    models = _load_registry(cfg)
    lf, pf = _load_fit_pair(cfg, args)
    by_name = {m.name: m for m in models}
    linked = [m for m in models if m.compressed_from is not None]
    if not linked:
        raise ValidationError("no compression links (compressed_from) in the registry")

    rows: list[dict] = []
    skipped: list[dict] = []
    for compressed in linked:
        source = by_name.get(compressed.compressed_from)
        if source is None:
            raise ValidationError(
                f"{compressed.name}: compressed_from names unknown model {compressed.compressed_from!r}"
            )
        try:
            cmp_result = density_core.compare_compression(
                source, compressed, lf, pf, cfg.d0_tokens, cfg.aggregate
            )
        except DensityLabError as exc:
            skipped.append({"original": source.name, "compressed": compressed.name, "reason": str(exc)})
            continue
        rows.append(
            {
                "original": source.name,
                "compressed": compressed.name,
                "original_density": cmp_result.original.density,
                "compressed_density": cmp_result.compressed.density,
                "density_ratio": cmp_result.density_ratio,
                "denser": cmp_result.density_ratio > 1.0,
            }
        )

    header = "original,compressed,original_density,compressed_density,density_ratio,denser"
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['original']},{r['compressed']},{r['original_density']!r},"
            f"{r['compressed_density']!r},{r['density_ratio']!r},{str(r['denser']).lower()}"
        )
    _write_text(cfg.out_dir / "compression.csv", "\n".join(lines) + "\n")
    _write_text(cfg.out_dir / "compression.json", _dump_json({"pairs": rows, "skipped": skipped}))

    if rows:
        svg = render_chart(
            [
                Series("original", tuple((float(i), r["original_density"]) for i, r in enumerate(rows))),
                Series("compressed", tuple((float(i), r["compressed_density"]) for i, r in enumerate(rows))),
            ],
            title="Density of compressed models vs their sources",
            x_label="pair index",
            y_label="density",
            annotations=tuple(
                f"{r['compressed']}: ratio {_sig(r['density_ratio'])}" for r in rows
            ),
        )
        _write_text(cfg.out_dir / "compression.svg", svg)

    if cfg.format == "json":
        print(_dump_json({"pairs": rows, "skipped": skipped}), end="")
    else:
        for r in rows:
            verdict = "denser than source" if r["denser"] else "density regression"
            print(
                f"{r['compressed']} (from {r['original']}): ratio={_sig(r['density_ratio'])} [{verdict}]"
            )
        for s in skipped:
            print(f"skipped {s['compressed']} (from {s['original']}): {s['reason']}")
    print(f"wrote {cfg.out_dir / 'compression.csv'}", file=sys.stderr)
    return 0


# -- synthetic data -----------------------------------------------------------


def _parse_truth(text: str | None, n: int, label: str, default: tuple) -> tuple:
    if text is None:
        return default
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != n:
        raise ValidationError(f"{label}: expected {n} comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"{label}: cannot parse numbers from {text!r}") from None


def cmd_synth(cfg: RunConfig, args) -> int:
    spec = SyntheticSpec(
        loss_truth=_parse_truth(getattr(args, "loss_truth", None), 4, "--loss-truth", synth.DEFAULT_LOSS_TRUTH),
        perf_truth=_parse_truth(getattr(args, "perf_truth", None), 4, "--perf-truth", synth.DEFAULT_PERF_TRUTH),
        trend_truth=(
            args.timeline_slope if getattr(args, "timeline_slope", None) is not None else synth.DEFAULT_TREND_TRUTH[0],
            args.timeline_intercept if getattr(args, "timeline_intercept", None) is not None else synth.DEFAULT_TREND_TRUTH[1],
        ),
        noise_sigma=getattr(args, "noise_sigma", None) or 0.0,
        seed=cfg.seed,
    )
    n_points = getattr(args, "timeline_points", None) or 40
    span_days = getattr(args, "timeline_days", None) or 600
    if n_points < 2 or span_days <= 0:
        raise ValidationError("timeline needs >= 2 points over a positive day span")
    param_count = getattr(args, "param_count", None) or 1.0e8

    scaling = synth.gen_scaling_grid(spec)
    a, alpha, b, beta = spec.loss_truth
    ladder = sorted(
        loss_law.conditional_loss(a, alpha, b, beta, n, m * n)
        for n in spec.size_grid
        for m in spec.token_multiples
    )
    perf_points = synth.gen_perf_points(spec, ladder)
    dates = [round(i * span_days / (n_points - 1)) for i in range(n_points)]
    timeline = synth.gen_density_timeline(
        spec.trend_truth[0], spec.trend_truth[1], dates, noise_sigma=spec.noise_sigma, seed=spec.seed
    )
    models = synth.timeline_models(
        timeline, spec, epoch=cfg.epoch, param_count=param_count, d0_tokens=cfg.d0_tokens
    )

    _write_text(cfg.out_dir / "scaling.csv", registry.dump_observations(scaling))
    _write_text(cfg.out_dir / "perf.csv", registry.dump_perf_points(perf_points))
    _write_text(cfg.out_dir / "models.csv", registry.dump_models(models, fmt="csv"))
    _write_text(
        cfg.out_dir / "truth.json",
        _dump_json(synth.truth_artifact(spec, epoch=cfg.epoch, d0_tokens=cfg.d0_tokens, param_count=param_count)),
    )
    print(
        f"synthetic dataset: {len(scaling)} scaling points, {len(perf_points)} calibration points, "
        f"{len(models)} models (seed={spec.seed}, noise_sigma={spec.noise_sigma})"
    )
    print(f"wrote {cfg.out_dir / 'truth.json'}", file=sys.stderr)
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    worst = 0
    for step in (cmd_fit_loss, cmd_fit_perf, cmd_density, cmd_trend):
        code = step(cfg, args)
        if code == 1:
            return 1
        worst = max(worst, code)
    if cfg.prices is not None:
        code = cmd_price_trend(cfg, args)
        if code == 1:
            return 1
        worst = max(worst, code)
    return worst


# -- parser -------------------------------------------------------------------

_HANDLERS = {
    "fit-loss": cmd_fit_loss,
    "fit-perf": cmd_fit_perf,
    "density": cmd_density,
    "trend": cmd_trend,
    "split-trend": cmd_split_trend,
    "price-trend": cmd_price_trend,
    "project": cmd_project,
    "compare-compression": cmd_compare_compression,
    "synth": cmd_synth,
    "report": cmd_report,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--models", help="model registry (CSV, or JSON by extension)")
    sub.add_argument("--scaling", help="scaling observations CSV (params,tokens,loss)")
    sub.add_argument("--perf", help="calibration points CSV (loss,score)")
    sub.add_argument("--prices", help="price quotes CSV (model,date,usd_per_million_tokens)")
    sub.add_argument("--d0-tokens", dest="d0_tokens", type=float, help="reference token budget (default 1000000000000)")
    sub.add_argument("--epoch", help="timeline origin date, ISO (default 2023-02-24)")
    sub.add_argument("--split-date", dest="split_date", help="boundary date for split-trend (default 2022-11-30)")
    sub.add_argument("--aggregate", choices=("geometric", "arithmetic"), help="benchmark aggregation method")
    sub.add_argument(
        "--chip-doubling-days",
        dest="chip_doubling_days",
        type=float,
        help="hardware cost-halving period in days (default 766.5)",
    )
    sub.add_argument("--out-dir", dest="out_dir", help="artifact directory (default .)")
    sub.add_argument("--seed", type=int, help="random seed for synthetic data (default 0)")
    sub.add_argument("--format", choices=("csv", "json"), help="stdout format (default csv/text)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="density-lab",
        description="Capability-density pipeline: scaling-law fits, density estimates, trends.",
    )
    sub = parser.add_subparsers(dest="command")

    for name, help_text in (
        ("fit-loss", "fit the two-term loss scaling law to scaling observations"),
        ("fit-perf", "fit the loss-to-score sigmoid to calibration points"),
        ("density", "compute per-model capability densities from fitted curves"),
        ("trend", "fit the exponential trend of maximum density over time"),
        ("split-trend", "compare density growth before and after a date"),
        ("price-trend", "fit the falling price envelope of inference cost"),
        ("project", "extrapolate a fitted trend to a target date"),
        ("compare-compression", "compare densities of compressed models vs sources"),
        ("synth", "generate synthetic datasets with known ground truth"),
        ("report", "run fit-loss, fit-perf, density, and trend in sequence"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name in ("density", "compare-compression", "report"):
            p.add_argument("--loss-fit", dest="loss_fit", help="path to loss_fit.json")
            p.add_argument("--perf-fit", dest="perf_fit", help="path to perf_fit.json")
        if name in ("trend", "split-trend"):
            p.add_argument("--density-report", dest="density_report", help="path to density_report.json")
        if name == "project":
            p.add_argument("--trend", help="path to trend.json")
            p.add_argument("--target-date", dest="target_date", required=True, help="date to project to, ISO")
        if name == "synth":
            p.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="noise level (default 0)")
            p.add_argument("--loss-truth", dest="loss_truth", help="a,alpha,b,beta ground truth")
            p.add_argument("--perf-truth", dest="perf_truth", help="c,gamma,l,d ground truth")
            p.add_argument("--timeline-slope", dest="timeline_slope", type=float, help="density growth per day")
            p.add_argument("--timeline-intercept", dest="timeline_intercept", type=float, help="log-density at epoch")
            p.add_argument("--timeline-points", dest="timeline_points", type=int, help="number of timeline models (default 40)")
            p.add_argument("--timeline-days", dest="timeline_days", type=int, help="timeline span in days (default 600)")
            p.add_argument("--param-count", dest="param_count", type=float, help="parameter count of synthetic models (default 1e8)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; this tool's contract is 1.
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        cfg = _resolve(args)
        return _HANDLERS[args.command](cfg, args)
    except DensityLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
