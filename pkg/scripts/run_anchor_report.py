#!/usr/bin/env python3
"""Headline growth numbers from the bundled anchor dataset.

Fits the density trend through the published anchors, fits the price
envelope through the two endpoint quotes, and prints the derived
doubling/halving periods together with the reference-constant arithmetic
(growth-rate doubling, regime speedup, combined hardware-plus-density
doubling). With ``--out-dir`` the same numbers and charts are written as
artifacts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import date
from pathlib import Path

from density_lab import registry, trends
from density_lab.errors import DensityLabError
from density_lab.registry import DEFAULT_EPOCH, days_since
from density_lab.svgplot import Series, render_chart
from density_lab.trends import MooreConfig, TimedValue

DEFAULT_DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "published_anchors"

# Reported growth constants: per-day density growth after/before the regime
# change, and the hardware cost-efficiency doubling period in days.
GROWTH_PER_DAY = 0.0073
EARLY_GROWTH_PER_DAY = 0.0048
DENSITY_DOUBLING_DAYS = 3.3 * 30.4375
CHIP = MooreConfig()


def load_density_anchors(path: Path) -> list[TimedValue]:
    with path.open(newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    return [
        TimedValue(
            t=float(days_since(date.fromisoformat(row["release_date"]), DEFAULT_EPOCH)),
            value=float(row["density"]),
            label=row["model"],
        )
        for row in rows
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", type=Path, default=DEFAULT_DATA_DIR)
    parser.add_argument("--out-dir", type=Path, help="also write JSON and SVG artifacts here")
    args = parser.parse_args(argv)

    try:
        anchors = load_density_anchors(args.data_dir / "density_anchors.csv")
        prices = registry.load_prices((args.data_dir / "prices.csv").read_text(encoding="utf-8"))

        envelope = trends.extract_envelope(anchors, "upper")
        density_fit = trends.fit_trend(envelope, direction="upper")
        price_fit = trends.fit_price_trend(prices, DEFAULT_EPOCH)
    except (OSError, DensityLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    reduction = price_fit.envelope[0].value / price_fit.envelope[-1].value
    halving_months = price_fit.doubling_days / 30.4375
    combined = trends.combine_moore(DENSITY_DOUBLING_DAYS, CHIP)

    print("anchor trend (fit through the published density anchors)")
    print(f"  slope: {density_fit.slope_per_day:.5f}/day, doubling every {density_fit.doubling_days:.1f} days")
    print("reference constants")
    print(f"  growth {GROWTH_PER_DAY}/day doubles every {trends.doubling_days(GROWTH_PER_DAY):.2f} days")
    print(
        f"  regime speedup: {GROWTH_PER_DAY}/{EARLY_GROWTH_PER_DAY} = "
        f"{GROWTH_PER_DAY / EARLY_GROWTH_PER_DAY:.2f}x"
    )
    print(
        f"  density doubling of {DENSITY_DOUBLING_DAYS:.1f} days + hardware doubling of "
        f"{CHIP.chip_doubling_days} days combine to {combined:.1f} days"
    )
    print("price envelope")
    print(f"  reduction: {reduction:.1f}x, halving every {halving_months:.2f} months")

    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        summary = {
            "anchor_slope_per_day": density_fit.slope_per_day,
            "anchor_doubling_days": density_fit.doubling_days,
            "reference_doubling_days": trends.doubling_days(GROWTH_PER_DAY),
            "regime_speedup": GROWTH_PER_DAY / EARLY_GROWTH_PER_DAY,
            "combined_doubling_days": combined,
            "price_reduction_factor": reduction,
            "price_halving_months": halving_months,
        }
        (args.out_dir / "anchor_report.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        line = tuple(
            (t, trends.project(density_fit, t))
            for t in (p.t for p in anchors)
        )
        svg = render_chart(
            [
                Series("anchors", tuple((p.t, p.value) for p in anchors)),
                Series("fit", line, kind="line"),
            ],
            title="Published density anchors",
            x_label=f"days since {DEFAULT_EPOCH.reference_date.isoformat()}",
            y_label="density",
            annotations=(f"doubling={density_fit.doubling_days:.1f} days",),
            log_y=True,
        )
        (args.out_dir / "anchor_trend.svg").write_text(svg, encoding="utf-8")
        print(f"wrote {args.out_dir / 'anchor_report.json'}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
