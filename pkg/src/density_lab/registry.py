"""Input data model and flat-file IO.

The registry is the boundary between files on disk and the typed records the
rest of the pipeline consumes: model cards, scaling observations,
loss/score pairs, and price quotes. Loaders accept raw text, bytes, or an
open stream (never a path; path handling belongs to the caller), validate
eagerly, and fail fast with a line or record reference. Serializers are the
exact inverse: ``load(dump(records)) == records`` for every valid record set.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Mapping, Sequence, Union

from density_lab.errors import DuplicateName, ParseError, ValidationError

Source = Union[str, bytes, IO[str], IO[bytes]]

# Benchmark ids live inside a ``key=value;key=value`` CSV cell, so the pair
# syntax characters are reserved.
_RESERVED_IN_BENCH = ("=", ";", "\n", "\r")


def _check_finite_positive(value: float, label: str) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{label}: expected a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{label}: must be finite and > 0, got {value!r}")


def _check_score(value: float, label: str) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{label}: expected a number, got {value!r}")
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValidationError(f"{label}: score {value!r} outside [0, 1]")


def _check_bench_id(bench: str, label: str) -> None:
    if not isinstance(bench, str) or not bench:
        raise ValidationError(f"{label}: benchmark id must be a non-empty string")
    for ch in _RESERVED_IN_BENCH:
        if ch in bench:
            raise ValidationError(f"{label}: benchmark id {bench!r} contains reserved character {ch!r}")


@dataclass(frozen=True)
class Epoch:
    """Reference date that anchors all day-offset arithmetic."""

    reference_date: date

    def __post_init__(self) -> None:
        if not isinstance(self.reference_date, date):
            raise ValidationError("reference_date: expected a calendar date")


#: Default timeline origin used by the CLI when no epoch is given.
DEFAULT_EPOCH = Epoch(date(2023, 2, 24))


@dataclass(frozen=True, eq=True)
class ModelRecord:
    """One released model: identity, size, and measured results.

    ``scores`` maps benchmark id to accuracy in [0, 1]. ``measured_loss``
    optionally carries directly measured conditional loss per benchmark.
    ``compressed_from`` names the source model when this record is a
    pruned/distilled derivative.
    """

    name: str
    param_count: float
    release_date: date
    scores: Mapping[str, float]
    train_tokens: float | None = None
    measured_loss: Mapping[str, float] = field(default_factory=dict)
    compressed_from: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("name: must be a non-empty string")
        _check_finite_positive(self.param_count, "param_count")
        if not isinstance(self.release_date, date):
            raise ValidationError("release_date: expected a calendar date")
        if self.train_tokens is not None:
            _check_finite_positive(self.train_tokens, "train_tokens")
        for bench, score in self.scores.items():
            _check_bench_id(bench, "scores")
            _check_score(score, f"scores.{bench}")
        for bench, loss in self.measured_loss.items():
            _check_bench_id(bench, "measured_loss")
            _check_finite_positive(loss, f"measured_loss.{bench}")
        if self.compressed_from is not None:
            if not isinstance(self.compressed_from, str) or not self.compressed_from:
                raise ValidationError("compressed_from: must be a non-empty string or omitted")
            if self.compressed_from == self.name:
                raise ValidationError("compressed_from: a model cannot be compressed from itself")


@dataclass(frozen=True)
class ScalingObservation:
    """One (parameter count, token count, conditional loss) training point."""

    params: float
    tokens: float
    loss: float

    def __post_init__(self) -> None:
        _check_finite_positive(self.params, "params")
        _check_finite_positive(self.tokens, "tokens")
        _check_finite_positive(self.loss, "loss")


@dataclass(frozen=True)
class PerfObservation:
    """One (conditional loss, downstream score) calibration point."""

    loss: float
    score: float

    def __post_init__(self) -> None:
        _check_finite_positive(self.loss, "loss")
        _check_score(self.score, "score")


@dataclass(frozen=True)
class PriceRecord:
    """One API price quote: model, quote date, USD per million tokens."""

    model: str
    date: date
    usd_per_million_tokens: float

    def __post_init__(self) -> None:
        if not isinstance(self.model, str) or not self.model:
            raise ValidationError("model: must be a non-empty string")
        if not isinstance(self.date, date):
            raise ValidationError("date: expected a calendar date")
        _check_finite_positive(self.usd_per_million_tokens, "usd_per_million_tokens")


def days_since(d: date, epoch: Epoch | date) -> int:
    """Signed whole-day offset of ``d`` from the epoch (negative if earlier)."""
    ref = epoch.reference_date if isinstance(epoch, Epoch) else epoch
    if not isinstance(d, date) or not isinstance(ref, date):
        raise ValidationError("days_since: expected calendar dates")
    return (d - ref).days


# -- shared text plumbing ----------------------------------------------------


def _read_text(source: Source) -> str:
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    if isinstance(data, str):
        return data
    raise ParseError(f"unsupported input source of type {type(data).__name__}")


def _parse_float(cell: str, line: int, label: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"line {line}: {label}: cannot parse number from {cell!r}") from None


def _parse_date(cell: str, line: int, label: str) -> date:
    try:
        return date.fromisoformat(cell)
    except ValueError:
        raise ParseError(f"line {line}: {label}: cannot parse ISO date from {cell!r}") from None


def _parse_pairs(cell: str, line: int, label: str) -> dict[str, float]:
    """Parse a ``bench=value;bench=value`` cell into an ordered dict."""
    out: dict[str, float] = {}
    cell = cell.strip()
    if not cell:
        return out
    for chunk in cell.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, val = chunk.partition("=")
        if not sep or not key.strip():
            raise ParseError(f"line {line}: {label}: expected 'bench=value', got {chunk!r}")
        key = key.strip()
        if key in out:
            raise ParseError(f"line {line}: {label}: duplicate benchmark {key!r}")
        out[key] = _parse_float(val.strip(), line, f"{label}.{key}")
    return out


def _parse_bool(cell: str, line: int, label: str) -> bool:
    norm = cell.strip().lower()
    if norm in ("", "0", "false", "no"):
        return False
    if norm in ("1", "true", "yes"):
        return True
    raise ParseError(f"line {line}: {label}: cannot parse boolean from {cell!r}")


def _csv_rows(text: str) -> tuple[list[str], Iterable[tuple[int, list[str]]], csv.reader]:
    """Yield (header, iterator of (line_number, row)) from CSV text."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("line 1: empty input, expected a header row") from None

    def rows() -> Iterable[tuple[int, list[str]]]:
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            yield reader.line_num, row

    return [h.strip() for h in header], rows(), reader


def _require_header(header: list[str], expected: Sequence[str], what: str) -> None:
    if header != list(expected):
        raise ParseError(
            f"line 1: {what}: expected header {','.join(expected)!r}, got {','.join(header)!r}"
        )


# -- model registry ----------------------------------------------------------

_MODEL_REQUIRED = ("name", "param_count", "release_date", "scores")
_MODEL_OPTIONAL = ("train_tokens", "compressed_from", "percent", "losses")
_MODEL_JSON_KEYS = {
    "name",
    "param_count",
    "train_tokens",
    "release_date",
    "scores",
    "measured_loss",
    "compressed_from",
}


def load_models(source: Source, fmt: str = "csv") -> list[ModelRecord]:
    """Parse a model registry from CSV or JSON text.

    CSV columns ``name,param_count,train_tokens,release_date,compressed_from,
    scores`` (order free, unknown columns rejected); the ``scores`` cell packs
    ``bench=value`` pairs separated by ``;``. An optional ``percent`` column
    marks rows whose scores are given on a 0-100 scale and must be divided by
    100. An optional ``losses`` column carries measured conditional losses in
    the same pair syntax. JSON input is an array of objects with the record's
    field names.

    Empty or whitespace-only input is an empty registry, not an error.

    Raises ParseError (malformed text), ValidationError (bad values, with the
    offending field named), or DuplicateName.
    """
    text = _read_text(source)
    if not text.strip():
        return []
    if fmt == "csv":
        records = _load_models_csv(text)
    elif fmt == "json":
        records = _load_models_json(text)
    else:
        raise ValidationError(f"fmt: expected 'csv' or 'json', got {fmt!r}")
    seen: set[str] = set()
    for rec in records:
        if rec.name in seen:
            raise DuplicateName(f"duplicate model name {rec.name!r}")
        seen.add(rec.name)
    return records


def _load_models_csv(text: str) -> list[ModelRecord]:
    header, rows, _ = _csv_rows(text)
    allowed = set(_MODEL_REQUIRED) | set(_MODEL_OPTIONAL)
    unknown = [h for h in header if h not in allowed]
    if unknown:
        raise ParseError(f"line 1: unknown column(s) {unknown} in model registry")
    missing = [c for c in _MODEL_REQUIRED if c not in header]
    if missing:
        raise ParseError(f"line 1: model registry missing required column(s) {missing}")
    if len(set(header)) != len(header):
        raise ParseError("line 1: model registry has a repeated column")
    idx = {name: i for i, name in enumerate(header)}

    records: list[ModelRecord] = []
    for line, row in rows:
        if len(row) != len(header):
            raise ParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")

        def cell(col: str) -> str:
            return row[idx[col]].strip() if col in idx else ""

        scores = _parse_pairs(cell("scores"), line, "scores")
        losses = _parse_pairs(cell("losses"), line, "losses")
        if "percent" in idx and _parse_bool(cell("percent"), line, "percent"):
            scores = {k: v / 100.0 for k, v in scores.items()}
        tokens_cell = cell("train_tokens")
        source_cell = cell("compressed_from")
        try:
            rec = ModelRecord(
                name=cell("name"),
                param_count=_parse_float(cell("param_count"), line, "param_count"),
                release_date=_parse_date(cell("release_date"), line, "release_date"),
                scores=scores,
                train_tokens=_parse_float(tokens_cell, line, "train_tokens") if tokens_cell else None,
                measured_loss=losses,
                compressed_from=source_cell or None,
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        records.append(rec)
    return records


def _load_models_json(text: str) -> list[ModelRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, list):
        raise ParseError("model registry JSON must be an array of objects")
    records: list[ModelRecord] = []
    for i, obj in enumerate(data):
        where = f"record {i}"
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: expected an object, got {type(obj).__name__}")
        unknown = sorted(set(obj) - _MODEL_JSON_KEYS)
        if unknown:
            raise ParseError(f"{where}: unknown key(s) {unknown}")
        for key in ("name", "param_count", "release_date", "scores"):
            if key not in obj:
                raise ParseError(f"{where}: missing required key {key!r}")
        raw_date = obj["release_date"]
        if not isinstance(raw_date, str):
            raise ParseError(f"{where}: release_date must be an ISO date string")
        try:
            release = date.fromisoformat(raw_date)
        except ValueError:
            raise ParseError(f"{where}: cannot parse ISO date from {raw_date!r}") from None
        scores = obj["scores"]
        losses = obj.get("measured_loss", {})
        if not isinstance(scores, dict) or not isinstance(losses, dict):
            raise ParseError(f"{where}: scores and measured_loss must be objects")
        try:
            rec = ModelRecord(
                name=obj["name"],
                param_count=obj["param_count"],
                release_date=release,
                scores=dict(scores),
                train_tokens=obj.get("train_tokens"),
                measured_loss=dict(losses),
                compressed_from=obj.get("compressed_from"),
            )
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
        records.append(rec)
    return records


def _pairs_cell(pairs: Mapping[str, float]) -> str:
    return ";".join(f"{k}={v!r}" for k, v in sorted(pairs.items()))


def dump_models(records: Sequence[ModelRecord], fmt: str = "csv") -> str:
    """Serialize records so that ``load_models`` parses them back unchanged."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "param_count", "train_tokens", "release_date", "compressed_from", "scores", "losses"])
        for rec in records:
            writer.writerow(
                [
                    rec.name,
                    repr(float(rec.param_count)),
                    "" if rec.train_tokens is None else repr(float(rec.train_tokens)),
                    rec.release_date.isoformat(),
                    rec.compressed_from or "",
                    _pairs_cell(rec.scores),
                    _pairs_cell(rec.measured_loss),
                ]
            )
        return buf.getvalue()
    if fmt == "json":
        objs = []
        for rec in records:
            obj: dict = {
                "name": rec.name,
                "param_count": float(rec.param_count),
                "release_date": rec.release_date.isoformat(),
                "scores": {k: float(v) for k, v in sorted(rec.scores.items())},
            }
            if rec.train_tokens is not None:
                obj["train_tokens"] = float(rec.train_tokens)
            if rec.measured_loss:
                obj["measured_loss"] = {k: float(v) for k, v in sorted(rec.measured_loss.items())}
            if rec.compressed_from is not None:
                obj["compressed_from"] = rec.compressed_from
            objs.append(obj)
        return json.dumps(objs, indent=2, sort_keys=True) + "\n"
    raise ValidationError(f"fmt: expected 'csv' or 'json', got {fmt!r}")


# -- scaling observations ----------------------------------------------------

_SCALING_HEADER = ("params", "tokens", "loss")


def load_observations(source: Source) -> list[ScalingObservation]:
    """Parse ``params,tokens,loss`` CSV into scaling observations.

    Empty or whitespace-only input yields an empty list.
    """
    text = _read_text(source)
    if not text.strip():
        return []
    header, rows, _ = _csv_rows(text)
    _require_header(header, _SCALING_HEADER, "scaling observations")
    out: list[ScalingObservation] = []
    for line, row in rows:
        if len(row) != 3:
            raise ParseError(f"line {line}: expected 3 fields, got {len(row)}")
        try:
            out.append(
                ScalingObservation(
                    params=_parse_float(row[0].strip(), line, "params"),
                    tokens=_parse_float(row[1].strip(), line, "tokens"),
                    loss=_parse_float(row[2].strip(), line, "loss"),
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
    return out


def dump_observations(observations: Sequence[ScalingObservation]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SCALING_HEADER)
    for obs in observations:
        writer.writerow([repr(float(obs.params)), repr(float(obs.tokens)), repr(float(obs.loss))])
    return buf.getvalue()


# -- loss/score calibration points -------------------------------------------

_PERF_HEADER = ("loss", "score")


def load_perf_points(source: Source) -> list[PerfObservation]:
    """Parse ``loss,score`` CSV into calibration points.

    Empty or whitespace-only input yields an empty list.
    """
    text = _read_text(source)
    if not text.strip():
        return []
    header, rows, _ = _csv_rows(text)
    _require_header(header, _PERF_HEADER, "calibration points")
    out: list[PerfObservation] = []
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"line {line}: expected 2 fields, got {len(row)}")
        try:
            out.append(
                PerfObservation(
                    loss=_parse_float(row[0].strip(), line, "loss"),
                    score=_parse_float(row[1].strip(), line, "score"),
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
    return out


def dump_perf_points(points: Sequence[PerfObservation]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_PERF_HEADER)
    for p in points:
        writer.writerow([repr(float(p.loss)), repr(float(p.score))])
    return buf.getvalue()


# -- price quotes -------------------------------------------------------------

_PRICE_HEADER = ("model", "date", "usd_per_million_tokens")


def load_prices(source: Source) -> list[PriceRecord]:
    """Parse price quotes and return them sorted by date (stable order).

    Empty or whitespace-only input yields an empty list.
    """
    text = _read_text(source)
    if not text.strip():
        return []
    header, rows, _ = _csv_rows(text)
    _require_header(header, _PRICE_HEADER, "price quotes")
    out: list[PriceRecord] = []
    for line, row in rows:
        if len(row) != 3:
            raise ParseError(f"line {line}: expected 3 fields, got {len(row)}")
        try:
            out.append(
                PriceRecord(
                    model=row[0].strip(),
                    date=_parse_date(row[1].strip(), line, "date"),
                    usd_per_million_tokens=_parse_float(row[2].strip(), line, "usd_per_million_tokens"),
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
    out.sort(key=lambda rec: rec.date)
    return out


def dump_prices(records: Sequence[PriceRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_PRICE_HEADER)
    for rec in records:
        writer.writerow([rec.model, rec.date.isoformat(), repr(float(rec.usd_per_million_tokens))])
    return buf.getvalue()
