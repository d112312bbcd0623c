"""Time trends over density and price series.

The headline quantity is the growth rate of the maximum achieved density:
take the best models over time (an upper envelope, so laggards do not drag
the line down), fit ``ln(value) = A * t + B`` by least squares, and read off
the doubling period ``ln 2 / |A|``. The same machinery runs downward for
price series (lower envelope, halving period), splits a series at a date to
compare growth rates before and after, combines the density trend with a
hardware cost trend into one effective doubling period, and projects the
fitted trend to future dates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from density_lab.errors import (
    DegenerateTimes,
    InsufficientPoints,
    ParseError,
    ValidationError,
    ZeroSlope,
)
from density_lab.optimize import linear_lsq, r_squared
from density_lab.registry import DEFAULT_EPOCH, Epoch, PriceRecord, days_since

#: Default boundary for before/after growth comparisons.
DEFAULT_SPLIT_DATE = date(2022, 11, 30)

_DIRECTIONS = ("upper", "lower")


@dataclass(frozen=True)
class TimedValue:
    """One positive measurement at a day offset ``t`` from the epoch."""

    t: float
    value: float
    label: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValidationError("t: must be finite")
        if not (math.isfinite(self.value) and self.value > 0):
            raise ValidationError(f"value: must be finite and > 0, got {self.value!r}")


@dataclass(frozen=True)
class MooreConfig:
    """Hardware cost trend: days for compute per dollar to double.

    An infinite period means no hardware growth and is allowed.
    """

    chip_doubling_days: float = 766.5

    def __post_init__(self) -> None:
        if math.isnan(self.chip_doubling_days) or not self.chip_doubling_days > 0:
            raise ValidationError("chip_doubling_days: must be > 0")


@dataclass(frozen=True)
class TrendFit:
    """Exponential trend ``value = exp(slope_per_day * t + intercept)``.

    ``doubling_days`` is ``ln 2 / |slope_per_day|`` (inf for a flat trend;
    for a falling trend it is the halving period). ``envelope`` holds the
    points the line was fitted to, ordered by t and weakly monotone in the
    fitted direction.
    """

    slope_per_day: float
    intercept: float
    r_squared: float
    doubling_days: float
    epoch: Epoch
    envelope: tuple[TimedValue, ...]
    direction: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.slope_per_day):
            raise ValidationError("slope_per_day: must be finite")
        if not math.isfinite(self.intercept):
            raise ValidationError("intercept: must be finite")
        if not (self.r_squared <= 1.0 + 1e-9):
            raise ValidationError(f"r_squared: {self.r_squared!r} exceeds 1")
        expected = math.inf if self.slope_per_day == 0 else math.log(2.0) / abs(self.slope_per_day)
        if not (
            self.doubling_days == expected
            or (math.isfinite(expected) and math.isclose(self.doubling_days, expected, rel_tol=1e-9))
        ):
            raise ValidationError("doubling_days: inconsistent with slope_per_day")
        if self.direction not in _DIRECTIONS:
            raise ValidationError(f"direction: expected one of {_DIRECTIONS}, got {self.direction!r}")
        if not self.envelope:
            raise ValidationError("envelope: must be non-empty")
        ts = [p.t for p in self.envelope]
        if ts != sorted(ts):
            raise ValidationError("envelope: points must be ordered by t")
        values = [p.value for p in self.envelope]
        if self.direction == "upper":
            ok = all(b >= a for a, b in zip(values, values[1:]))
        else:
            ok = all(b <= a for a, b in zip(values, values[1:]))
        if not ok:
            raise ValidationError(f"envelope: values not monotone for direction {self.direction!r}")


def extract_envelope(points, direction: str = "upper", strict: bool = True) -> list[TimedValue]:
    """Running-extremum envelope of a timed series.

    Sorts by t, collapses ties in t to the more extreme value, then keeps a
    point only if it beats every kept point with smaller t: strictly greater
    for the upper envelope, strictly smaller for the lower. With
    ``strict=False`` a point that exactly matches the running extremum is
    kept too (useful for price floors, where a repeat of the cheapest price
    is still on the floor). Idempotent: the envelope of an envelope is
    itself.
    """
    if direction not in _DIRECTIONS:
        raise ValidationError(f"direction: expected one of {_DIRECTIONS}, got {direction!r}")
    pts = sorted(points, key=lambda p: p.t)
    upper = direction == "upper"

    collapsed: list[TimedValue] = []
    for p in pts:
        if collapsed and collapsed[-1].t == p.t:
            prev = collapsed[-1]
            better = p.value > prev.value if upper else p.value < prev.value
            if better:
                collapsed[-1] = p
        else:
            collapsed.append(p)

    kept: list[TimedValue] = []
    for p in collapsed:
        if not kept:
            kept.append(p)
            continue
        extreme = kept[-1].value
        if upper:
            beats = p.value > extreme or (not strict and p.value == extreme)
        else:
            beats = p.value < extreme or (not strict and p.value == extreme)
        if beats:
            kept.append(p)
    return kept


def _doubling_or_inf(slope_per_day: float) -> float:
    """ln 2 / |slope|, or inf for a flat slope (no doubling horizon)."""
    if slope_per_day == 0.0:
        return math.inf
    return math.log(2.0) / abs(slope_per_day)


def fit_trend(
    envelope,
    epoch: Epoch = DEFAULT_EPOCH,
    direction: str = "upper",
) -> TrendFit:
    """Least-squares fit of ``ln(value)`` against ``t`` over envelope points.

    The design is centered on the mean t, so the slope is invariant (to
    rounding) under shifting every t by a constant; the intercept is mapped
    back to the t = 0 origin. Requires two points at distinct t. A constant
    series fits exactly with slope 0 and r_squared 1.
    """
    pts = sorted(envelope, key=lambda p: p.t)
    if len(pts) < 2:
        raise InsufficientPoints(f"trend fit needs >= 2 points, got {len(pts)}")
    t = np.array([p.t for p in pts], dtype=float)
    y = np.log([p.value for p in pts])
    if float(t.max() - t.min()) == 0.0:
        raise DegenerateTimes("all points share one t; slope is undefined")

    t_center = float(t.mean())
    design = np.column_stack([t - t_center, np.ones(len(pts))])
    slope, level = (float(v) for v in linear_lsq(design, y))
    intercept = level - slope * t_center
    if float(y.max() - y.min()) == 0.0:
        slope, intercept, r2 = 0.0, float(y[0]), 1.0
    else:
        r2 = r_squared(y, slope * (t - t_center) + level)
    return TrendFit(
        slope_per_day=slope,
        intercept=intercept,
        r_squared=r2,
        doubling_days=_doubling_or_inf(slope),
        epoch=epoch,
        envelope=tuple(pts),
        direction=direction,
    )


def doubling_days(slope_per_day: float) -> float:
    """Days for an exponential trend with the given log-slope to double.

    The magnitude is used, so a decaying trend reports its halving period.
    A zero slope raises ZeroSlope rather than returning infinity.
    """
    if not math.isfinite(slope_per_day):
        raise ValidationError("slope_per_day: must be finite")
    if slope_per_day == 0.0:
        raise ZeroSlope("flat trend has no doubling period")
    return math.log(2.0) / abs(slope_per_day)


def split_trend(
    points,
    split_date: date = DEFAULT_SPLIT_DATE,
    epoch: Epoch = DEFAULT_EPOCH,
    direction: str = "upper",
) -> tuple[TrendFit, TrendFit]:
    """Fit separate envelope trends before and after a boundary date.

    Points dated strictly before the boundary go to the first fit, the rest
    to the second; each side is enveloped independently. A side with too few
    envelope points raises InsufficientPoints naming the side.
    """
    t_split = float(days_since(split_date, epoch))
    before_raw = [p for p in points if p.t < t_split]
    after_raw = [p for p in points if p.t >= t_split]
    before_env = extract_envelope(before_raw, direction)
    after_env = extract_envelope(after_raw, direction)
    if len(before_env) < 2:
        raise InsufficientPoints(
            f"before {split_date.isoformat()}: {len(before_env)} envelope point(s), need >= 2"
        )
    if len(after_env) < 2:
        raise InsufficientPoints(
            f"after {split_date.isoformat()}: {len(after_env)} envelope point(s), need >= 2"
        )
    before = fit_trend(before_env, epoch=epoch, direction=direction)
    after = fit_trend(after_env, epoch=epoch, direction=direction)
    return before, after


def fit_price_trend(prices, epoch: Epoch = DEFAULT_EPOCH) -> TrendFit:
    """Exponential trend of the cheapest available price over time.

    Builds the lower envelope of the quotes (non-strict, so a repeated floor
    price stays on the line) and fits the log-linear trend. A falling price
    series yields a negative slope, and ``doubling_days`` then reads as the
    halving period of cost.
    """
    records = list(prices)
    for rec in records:
        if not isinstance(rec, PriceRecord):
            raise ValidationError("prices: expected PriceRecord items")
    points = [
        TimedValue(t=float(days_since(rec.date, epoch)), value=rec.usd_per_million_tokens, label=rec.model)
        for rec in records
    ]
    envelope = extract_envelope(points, direction="lower", strict=False)
    if len(envelope) < 2:
        raise InsufficientPoints(f"price envelope has {len(envelope)} point(s), need >= 2")
    return fit_trend(envelope, epoch=epoch, direction="lower")


def combine_moore(trend_doubling_days: float, moore: MooreConfig) -> float:
    """Effective doubling period when two exponential gains compound.

    Growth rates add, so periods combine harmonically:
    ``1 / (1/d_trend + 1/d_chip)``. The result is never longer than the
    faster of the two inputs; an infinite input leaves the other unchanged.
    """
    if math.isnan(trend_doubling_days) or not trend_doubling_days > 0:
        raise ValidationError("trend_doubling_days: must be > 0")
    if math.isinf(trend_doubling_days):
        return moore.chip_doubling_days
    if math.isinf(moore.chip_doubling_days):
        return trend_doubling_days
    return 1.0 / (1.0 / trend_doubling_days + 1.0 / moore.chip_doubling_days)


def project(fit: TrendFit, target: date | float) -> float:
    """Trend value at a future (or past) date or day offset."""
    t = float(days_since(target, fit.epoch)) if isinstance(target, date) else float(target)
    if not math.isfinite(t):
        raise ValidationError("target: must be finite")
    return math.exp(fit.slope_per_day * t + fit.intercept)


# -- artifacts and timeline IO ------------------------------------------------


def to_artifact(fit: TrendFit) -> dict:
    """JSON-ready summary (doubling_days inf maps to null)."""
    return {
        "slope_per_day": fit.slope_per_day,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "doubling_days": None if math.isinf(fit.doubling_days) else fit.doubling_days,
        "epoch": fit.epoch.reference_date.isoformat(),
        "direction": fit.direction,
        "envelope": [{"t": p.t, "value": p.value, "label": p.label} for p in fit.envelope],
    }


def from_artifact(data: dict) -> TrendFit:
    expected = {"slope_per_day", "intercept", "r_squared", "doubling_days", "epoch", "direction", "envelope"}
    if set(data) != expected:
        raise ValidationError(f"trend artifact must have exactly keys {sorted(expected)}, got {sorted(data)}")
    try:
        epoch = Epoch(date.fromisoformat(data["epoch"]))
    except (TypeError, ValueError):
        raise ParseError(f"epoch: cannot parse ISO date from {data['epoch']!r}") from None
    raw_doubling = data["doubling_days"]
    envelope = tuple(
        TimedValue(t=float(p["t"]), value=float(p["value"]), label=str(p.get("label", "")))
        for p in data["envelope"]
    )
    return TrendFit(
        slope_per_day=float(data["slope_per_day"]),
        intercept=float(data["intercept"]),
        r_squared=float(data["r_squared"]),
        doubling_days=math.inf if raw_doubling is None else float(raw_doubling),
        epoch=epoch,
        envelope=envelope,
        direction=str(data["direction"]),
    )


def model_timeline(models, values: dict[str, float], epoch: Epoch = DEFAULT_EPOCH) -> list[TimedValue]:
    """Pair each model's release date offset with a per-model value."""
    out = []
    for rec in models:
        if rec.name in values:
            out.append(
                TimedValue(
                    t=float(days_since(rec.release_date, epoch)),
                    value=float(values[rec.name]),
                    label=rec.name,
                )
            )
    return out
