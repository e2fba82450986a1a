"""Minute streams to per-day hourly grids.

A calendar day is the classification sample unit, represented as 24
optional hourly totals.  A day is usable when at least
:data:`MIN_HOURS_PRESENT` of its hours contain any recorded minutes; up to
two absent hours are then filled with the mean of the nearest recorded
hours on either side (one-sided at the day's edges).  Neighbor search
never crosses midnight: days are independent samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

from .ingest import ClassLabel, SubjectSeries

# Keep a day iff at least this many of its 24 hours have any recording.
MIN_HOURS_PRESENT = 22

HOURS_PER_DAY = 24


class InvalidDayError(ValueError):
    """Imputation was asked to complete a day below the validity threshold."""


@dataclass(frozen=True)
class HourCell:
    """Sum of one hour's recorded minutes plus how many minutes were seen."""

    date: Date
    hour: int            # 0..23
    total: float         # >= 0
    minutes_present: int  # 1..60 (hours with zero minutes are simply absent)


@dataclass(frozen=True)
class DayRecord:
    """One calendar day's 24 optional hourly totals."""

    subject_id: str
    date: Date
    hours: tuple[float | None, ...]  # length 24, None where nothing recorded
    label: ClassLabel | None

    @property
    def hours_present(self) -> int:
        return sum(1 for h in self.hours if h is not None)

    @property
    def is_valid(self) -> bool:
        return self.hours_present >= MIN_HOURS_PRESENT


@dataclass(frozen=True)
class CompleteDay:
    """A valid day with its gaps filled; ``imputed_hours`` says which."""

    subject_id: str
    date: Date
    hours: tuple[float, ...]  # length 24, no gaps
    label: ClassLabel | None
    imputed_hours: frozenset[int]


def hourly_totals(series: SubjectSeries) -> list[HourCell]:
    """Aggregate a minute stream to hourly totals, one cell per seen hour."""
    sums: dict[tuple[Date, int], float] = {}
    counts: dict[tuple[Date, int], int] = {}
    for rec in series.records:
        key = (rec.timestamp.date(), rec.timestamp.hour)
        sums[key] = sums.get(key, 0.0) + rec.activity
        counts[key] = counts.get(key, 0) + 1
    return [HourCell(date=d, hour=h, total=sums[d, h], minutes_present=counts[d, h])
            for d, h in sorted(sums)]


def segment_days(cells: list[HourCell], subject_id: str,
                 label: ClassLabel | None) -> list[DayRecord]:
    """Group one subject's hour cells into per-date DayRecords."""
    by_date: dict[Date, list[float | None]] = {}
    for cell in cells:
        hours = by_date.setdefault(cell.date, [None] * HOURS_PER_DAY)
        hours[cell.hour] = cell.total
    return [DayRecord(subject_id=subject_id, date=d, hours=tuple(by_date[d]), label=label)
            for d in sorted(by_date)]


def impute_day(day: DayRecord) -> CompleteDay:
    """Fill a valid day's absent hours from their nearest recorded neighbors.

    Each absent hour gets the arithmetic mean of the nearest present hour
    before and after it within the same day; at the day's edges the single
    available neighbor's value is used as-is.
    """
    if not day.is_valid:
        raise InvalidDayError(
            f"{day.subject_id} {day.date}: {day.hours_present} hours present, "
            f"need >= {MIN_HOURS_PRESENT}"
        )
    present = [h for h in range(HOURS_PER_DAY) if day.hours[h] is not None]
    filled: list[float] = []
    imputed: set[int] = set()
    for h in range(HOURS_PER_DAY):
        value = day.hours[h]
        if value is not None:
            filled.append(value)
            continue
        before = [p for p in present if p < h]
        after = [p for p in present if p > h]
        neighbors = []
        if before:
            neighbors.append(day.hours[before[-1]])
        if after:
            neighbors.append(day.hours[after[0]])
        filled.append(sum(neighbors) / len(neighbors))
        imputed.add(h)
    return CompleteDay(subject_id=day.subject_id, date=day.date, hours=tuple(filled),
                       label=day.label, imputed_hours=frozenset(imputed))
