"""Hourly day-ahead / intraday market records and exploratory statistics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime, timedelta
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DomainError,
    DuplicateError,
    EmptyOverlapError,
    FormatError,
    UndefinedVariationError,
    UnknownZoneError,
)

COLUMNS = (
    "timestamp",
    "zone",
    "da_price",
    "id_high",
    "id_low",
    "id_last",
    "id_avg",
    "buy_volume",
    "sell_volume",
)
NUMERIC_COLUMNS = COLUMNS[2:]

FIELD_KINDS = {"high": "id_high", "low": "id_low", "last": "id_last", "avg": "id_avg", "da": "da_price"}

# Published prices have two decimals; half a tick counts as "the same price".
PRICE_EQ_TOL = 0.005
# decimal prices like 10.005 - 10.0 land a few ulps above the tolerance
_EQ_SLACK = 1e-9


def field_column(field_kind: str) -> str:
    try:
        return FIELD_KINDS[field_kind]
    except KeyError:
        raise DomainError(f"unknown price field {field_kind!r}; expected one of {sorted(FIELD_KINDS)}") from None


@dataclass(frozen=True)
class PriceRecord:
    """One zone-hour. ``None`` marks a missing value (no trade that hour)."""

    timestamp: datetime
    zone: str
    da_price: Optional[float] = None
    id_high: Optional[float] = None
    id_low: Optional[float] = None
    id_last: Optional[float] = None
    id_avg: Optional[float] = None
    buy_volume: Optional[float] = None
    sell_volume: Optional[float] = None

    def get(self, field_kind: str) -> Optional[float]:
        return getattr(self, field_column(field_kind))

    def check(self) -> None:
        """Raise ``DomainError`` if the record violates a price/volume invariant."""
        hi, lo, avg = self.id_high, self.id_low, self.id_avg
        if hi is not None and lo is not None and lo > hi:
            raise DomainError(f"id_low {lo} exceeds id_high {hi}")
        if hi is not None and lo is not None and avg is not None and not lo <= avg <= hi:
            raise DomainError(f"id_avg {avg} outside [id_low {lo}, id_high {hi}]")
        for name in ("buy_volume", "sell_volume"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise DomainError(f"{name} must be non-negative, got {v}")


@dataclass(frozen=True)
class ParseWarning:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class MarketSeries:
    """Records sorted by (zone, timestamp); unique per key."""

    records: tuple
    source: str = ""
    warnings: tuple = ()
    _by_zone: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        by_zone: dict[str, list[PriceRecord]] = {}
        for rec in self.records:
            by_zone.setdefault(rec.zone, []).append(rec)
        for zone, recs in by_zone.items():
            for a, b in zip(recs, recs[1:]):
                if not a.timestamp < b.timestamp:
                    if a.timestamp == b.timestamp:
                        raise DuplicateError((zone, b.timestamp.isoformat()))
                    raise FormatError(f"records for zone {zone!r} are not time-ordered")
        object.__setattr__(self, "_by_zone", {z: tuple(r) for z, r in by_zone.items()})

    @classmethod
    def from_records(cls, records: Iterable[PriceRecord], source="", warnings=()) -> "MarketSeries":
        recs = list(records)
        seen = set()
        for r in recs:
            key = (r.zone, r.timestamp)
            if key in seen:
                raise DuplicateError((r.zone, r.timestamp.isoformat()))
            seen.add(key)
        recs.sort(key=lambda r: (r.zone, r.timestamp))
        return cls(tuple(recs), source=source, warnings=tuple(warnings))

    @property
    def zones(self) -> tuple:
        return tuple(sorted(self._by_zone))

    @property
    def coverage(self):
        if not self.records:
            return None
        stamps = [r.timestamp for r in self.records]
        return min(stamps), max(stamps)

    def zone_records(self, zone: str) -> tuple:
        try:
            return self._by_zone[zone]
        except KeyError:
            raise UnknownZoneError(f"no data for zone {zone!r}; available: {list(self.zones)}") from None

    def filter(self, zones=None, start: Optional[Date] = None, end: Optional[Date] = None) -> "MarketSeries":
        """Subset by zone set and inclusive calendar-date range."""
        keep = []
        for r in self.records:
            if zones is not None and r.zone not in zones:
                continue
            d = r.timestamp.date()
            if start is not None and d < start:
                continue
            if end is not None and d > end:
                continue
            keep.append(r)
        return MarketSeries(tuple(keep), source=self.source, warnings=self.warnings)

    def __len__(self):
        return len(self.records)


def _parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.strip())
    if ts.minute or ts.second or ts.microsecond:
        raise ValueError(f"timestamp {text!r} is not on an hour boundary")
    return ts


def _parse_number(text: str) -> Optional[float]:
    text = text.strip()
    if text == "":
        return None
    if "," in text:
        raise ValueError(f"invalid number {text!r} (thousands separators and decimal commas are not allowed)")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def parse_market_csv(text: str, source: str = "") -> MarketSeries:
    """Parse the hourly market CSV.

    Malformed rows are skipped and reported in ``MarketSeries.warnings``
    (with 1-based line numbers). A duplicated (zone, timestamp) key is an
    error, as is a missing or wrong header.
    """
    if text.startswith("﻿"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty input: header row required") from None
    header = [h.strip() for h in header]
    if tuple(header) != COLUMNS:
        raise FormatError(f"header mismatch: expected {','.join(COLUMNS)!r}, got {','.join(header)!r}")

    records, warnings = [], []
    seen: dict = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(COLUMNS):
            warnings.append(ParseWarning(line, f"expected {len(COLUMNS)} columns, got {len(row)}"))
            continue
        try:
            ts = _parse_timestamp(row[0])
            zone = row[1].strip()
            if not zone:
                raise ValueError("empty zone")
            values = {name: _parse_number(cell) for name, cell in zip(NUMERIC_COLUMNS, row[2:])}
            rec = PriceRecord(ts, zone, **values)
            rec.check()
        except (ValueError, DomainError) as exc:
            warnings.append(ParseWarning(line, str(exc)))
            continue
        key = (zone, ts)
        if key in seen:
            raise DuplicateError((zone, ts.isoformat()), line=line)
        seen[key] = line
        records.append(rec)

    try:
        return MarketSeries.from_records(records, source=source, warnings=warnings)
    except TypeError:
        raise FormatError("cannot order timestamps that mix UTC offsets with naive local times") from None


def load_market_csv(path) -> MarketSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_market_csv(fh.read(), source=str(path))


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


def series_to_csv(series: MarketSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in series.records:
        w.writerow([r.timestamp.isoformat(), r.zone] + [_fmt(getattr(r, c)) for c in NUMERIC_COLUMNS])
    return buf.getvalue()


def price_variation(high: float, low: float, avg: float) -> float:
    """Intraday spread relative to the average price, in percent."""
    if avg == 0:
        raise UndefinedVariationError("price variation is undefined for a zero average price")
    if high < low:
        raise DomainError(f"high price {high} is below low price {low}")
    return (high - low) / avg * 100.0


@dataclass(frozen=True)
class SimilarityResult:
    percent: float
    count: int
    total: int


def similar_price_fraction(series: MarketSeries, zones: Sequence[str], field_kind: str, tol: float = PRICE_EQ_TOL) -> SimilarityResult:
    """Share of hours in which all ``zones`` quote the same ``field_kind`` price.

    Only hours where every zone has the field contribute to the base.
    """
    zones = list(dict.fromkeys(zones))
    if len(zones) < 2:
        raise DomainError("need at least two zones to compare prices")
    per_zone = []
    for z in zones:
        per_zone.append({r.timestamp: r.get(field_kind) for r in series.zone_records(z) if r.get(field_kind) is not None})
    common = set(per_zone[0])
    for m in per_zone[1:]:
        common &= set(m)
    if not common:
        raise EmptyOverlapError(f"zones {zones} share no timestamps with field {field_kind!r}")
    same = 0
    for ts in common:
        vals = [m[ts] for m in per_zone]
        if max(vals) - min(vals) <= tol + _EQ_SLACK:
            same += 1
    return SimilarityResult(100.0 * same / len(common), same, len(common))


def volume_share(id_volume: float, da_volume: float) -> float:
    if da_volume <= 0:
        raise DomainError(f"day-ahead volume must be positive, got {da_volume}")
    return 100.0 * id_volume / da_volume


@dataclass(frozen=True)
class DayProfile:
    """24 hourly values; ``None`` marks a missing hour."""

    date: Optional[Date]
    zone: Optional[str]
    values: tuple
    field_kind: str = "avg"

    def __post_init__(self):
        if len(self.values) != 24:
            raise DomainError(f"a day profile has exactly 24 slots, got {len(self.values)}")

    @property
    def missing(self) -> tuple:
        return tuple(h for h, v in enumerate(self.values) if v is None)

    @property
    def complete(self) -> bool:
        return not self.missing

    def as_array(self) -> np.ndarray:
        """Values as float64 with NaN in missing slots."""
        return np.array([np.nan if v is None else v for v in self.values], dtype=np.float64)


def day_profile(series: MarketSeries, zone: str, date: Date, field_kind: str) -> DayProfile:
    """Hour-of-day profile; on a 25-hour day the first record of a repeated hour wins."""
    field_column(field_kind)
    slots: list = [None] * 24
    filled = [False] * 24
    for r in series.zone_records(zone):
        if r.timestamp.date() != date:
            continue
        h = r.timestamp.hour
        if not filled[h]:
            slots[h] = r.get(field_kind)
            filled[h] = True
    return DayProfile(date, zone, tuple(slots), field_kind)


def day_profiles(series: MarketSeries, zone: str, field_kind: str, complete_only: bool = True) -> list:
    dates = sorted({r.timestamp.date() for r in series.zone_records(zone)})
    out = [day_profile(series, zone, d, field_kind) for d in dates]
    return [p for p in out if p.complete] if complete_only else out


def field_sequence(series: MarketSeries, zone: str, field_kind: str) -> list:
    """Hourly values for one zone with ``None`` at missing values and at time gaps.

    A jump of more than one hour between consecutive records inserts a single
    ``None`` so that windows cannot bridge it.
    """
    out: list = []
    prev = None
    for r in series.zone_records(zone):
        if prev is not None and r.timestamp - prev > timedelta(hours=1):
            out.append(None)
        out.append(r.get(field_kind))
        prev = r.timestamp
    return out


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def sliding_windows(values: Sequence, window: int) -> list:
    """(window, next value) pairs from every gap-free stretch of ``values``.

    Missing entries (``None`` or NaN) split the sequence; no pair spans one.
    """
    if window < 1:
        raise DomainError("window must be at least 1")
    pairs = []
    segment: list = []
    for v in list(values) + [None]:
        if _is_missing(v):
            for i in range(len(segment) - window):
                pairs.append((tuple(segment[i : i + window]), segment[i + window]))
            segment = []
        else:
            segment.append(float(v))
    return pairs


def windows_to_arrays(pairs) -> tuple:
    """Stack pairs into ``X`` of shape (n, window) and ``y`` of shape (n,)."""
    if not pairs:
        return np.zeros((0, 0)), np.zeros(0)
    X = np.array([p[0] for p in pairs], dtype=np.float64)
    y = np.array([p[1] for p in pairs], dtype=np.float64)
    return X, y
