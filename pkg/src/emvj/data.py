"""Dated price / rate series: CSV loading, alignment and rolling windows."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class DatedSeries:
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.values):
            raise DataError("dates and values differ in length")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"dates must be strictly increasing (at {b.isoformat()})")
        if not np.all(np.isfinite(self.values)):
            raise DataError("values must be finite")

    def __len__(self) -> int:
        return len(self.dates)

    def between(self, start: dt.date, end: dt.date) -> DatedSeries:
        keep = [i for i, d in enumerate(self.dates) if start <= d <= end]
        return DatedSeries(tuple(self.dates[i] for i in keep), self.values[keep])

    def years(self) -> tuple[int, int]:
        if not self.dates:
            raise DataError("empty series")
        return self.dates[0].year, self.dates[-1].year


def load_csv(path, date_column: str = "date", value_column: str = "value") -> DatedSeries:
    """Read a headed, comma-delimited UTF-8 file with ISO dates; rows are sorted by date."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return parse_csv(fh.read(), date_column, value_column, source=str(path))


def parse_csv(text: str, date_column: str = "date", value_column: str = "value",
              source: str = "<string>") -> DatedSeries:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DataError(f"{source}: empty file")
    for col in (date_column, value_column):
        if col not in reader.fieldnames:
            raise DataError(f"{source}: missing column {col!r}")
    rows: dict[dt.date, float] = {}
    for row in reader:
        line = reader.line_num
        raw_date, raw_value = row.get(date_column), row.get(value_column)
        try:
            day = dt.date.fromisoformat((raw_date or "").strip())
            value = float((raw_value or "").strip())
        except ValueError:
            raise DataError(f"{source}: malformed row at line {line}: {raw_date!r}, {raw_value!r}") from None
        if not math.isfinite(value):
            raise DataError(f"{source}: non-finite value at line {line}")
        if day in rows:
            raise DataError(f"{source}: duplicate date {day.isoformat()}")
        rows[day] = value
    if not rows:
        raise DataError(f"{source}: no data rows")
    dates = tuple(sorted(rows))
    return DatedSeries(dates, np.array([rows[d] for d in dates]))


def to_csv(series: DatedSeries, date_column: str = "date", value_column: str = "value") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([date_column, value_column])
    for d, v in zip(series.dates, series.values):
        writer.writerow([d.isoformat(), repr(float(v))])
    return buf.getvalue()


def align(a: DatedSeries, b: DatedSeries) -> tuple[DatedSeries, DatedSeries]:
    common = sorted(set(a.dates) & set(b.dates))
    if not common:
        raise DataError("series have no dates in common")
    ia = {d: i for i, d in enumerate(a.dates)}
    ib = {d: i for i, d in enumerate(b.dates)}
    dates = tuple(common)
    return (DatedSeries(dates, a.values[[ia[d] for d in dates]]),
            DatedSeries(dates, b.values[[ib[d] for d in dates]]))


def carry_forward(series: DatedSeries, dates) -> DatedSeries:
    """Values of ``series`` on ``dates``, using the last observation on or before each date."""
    dates = tuple(dates)
    if not dates:
        raise DataError("no target dates")
    if dates[0] < series.dates[0]:
        raise DataError(f"no observation on or before {dates[0].isoformat()}")
    src = np.array([d.toordinal() for d in series.dates])
    tgt = np.array([d.toordinal() for d in dates])
    idx = np.searchsorted(src, tgt, side="right") - 1
    return DatedSeries(dates, series.values[idx])


def tbill_to_daily_rate(quote, divisor: float = 252.0):
    """Annualized percent quote -> daily simple rate, quote / 100 / divisor."""
    q = np.asarray(quote, dtype=float)
    if np.any(q <= -100):
        raise DataError("rate quote must be > -100 percent")
    out = q / 100.0 / divisor
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WindowSpec:
    train_years: int = 10
    eval_years: int = 1

    def __post_init__(self):
        if self.train_years < 1 or self.eval_years < 1:
            raise DataError("train_years and eval_years must be >= 1")


@dataclass(frozen=True)
class Window:
    train_start: dt.date
    train_end: dt.date
    eval_start: dt.date
    eval_end: dt.date

    @property
    def label(self) -> str:
        return f"{self.train_start.year}-{self.eval_end.year}"


def rolling_windows(years: tuple[int, int], spec: WindowSpec = WindowSpec()) -> list[Window]:
    """Train/eval windows advancing one calendar year at a time over ``years`` (inclusive)."""
    first_year, last_year = years
    span = spec.train_years + spec.eval_years
    if last_year - first_year + 1 < span:
        raise DataError(f"years {first_year}-{last_year} cannot hold a {span}-year window")
    out = []
    for start in range(first_year, last_year - span + 2):
        train_last = start + spec.train_years - 1
        out.append(Window(
            dt.date(start, 1, 1), dt.date(train_last, 12, 31),
            dt.date(train_last + 1, 1, 1), dt.date(train_last + spec.eval_years, 12, 31),
        ))
    return out
