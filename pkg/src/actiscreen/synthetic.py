"""Seeded synthetic cohorts for tests, demos and offline experiments.

The public secondary dataset cannot be redistributed with this repository,
so tests and demos that need realistic minute streams generate them here.
Healthy subjects get a pronounced circadian profile with quiet nights;
depressed subjects get a damped, flattened profile with restless nights
and larger day-to-day swings, which is the qualitative contrast the
classifier is supposed to pick up.  Occasional high-multiplier bursts give
the hourly totals the heavy right tail real activity data shows.

Activities are integers and hours are either fully recorded (60 minutes)
or wholly absent.  That matches the devices' behavior, and it keeps
integer affine unit changes exactly representable in float64, so the
scale-invariance guarantees of per-subject robust scaling can be asserted
bitwise in tests.
"""

from __future__ import annotations

from datetime import date as Date
from datetime import datetime, timedelta

import numpy as np

from .ingest import ClassLabel, DeviceKind, MinuteRecord, SubjectSeries

# Expected hourly activity totals, healthy profile, device-native units.
_HEALTHY_PROFILE = np.array([
    40, 25, 20, 20, 30, 80,          # night
    180, 280, 340, 360, 350, 340,    # morning
    330, 320, 310, 320, 330, 340,    # afternoon
    330, 300, 260, 200, 140, 80,     # evening
], dtype=np.float64)

_NIGHT_HOURS = np.array([0, 1, 2, 3, 4, 5, 22, 23])


def _subject_profile(label: ClassLabel, rng: np.random.Generator) -> np.ndarray:
    profile = _HEALTHY_PROFILE * rng.lognormal(0.0, 0.25)
    if label == ClassLabel.DEPRESSED:
        profile = profile * 0.5
        profile[_NIGHT_HOURS] *= 2.4
        profile = 0.6 * profile + 0.4 * profile.mean()  # flatter rhythm
    return profile


def synth_subject(
    subject_id: str,
    label: ClassLabel | None,
    n_days: int,
    rng: np.random.Generator,
    device: DeviceKind = DeviceKind.ACTIWATCH_COUNTS,
    start: Date = Date(2020, 3, 2),
    missing_hour_rate: float = 0.0,
    disrupted_day_rate: float = 0.0,
) -> SubjectSeries:
    """Generate one subject's integer minute stream.

    ``missing_hour_rate`` drops individual hours (imputation fodder);
    ``disrupted_day_rate`` knocks out a long block of hours so the day
    fails the validity rule entirely.
    """
    label_kind = label if label is not None else ClassLabel.HEALTHY
    profile = _subject_profile(label_kind, rng)
    day_sigma = 0.45 if label_kind == ClassLabel.DEPRESSED else 0.25
    burst_rate = 0.015 if label_kind == ClassLabel.DEPRESSED else 0.04

    records: list[MinuteRecord] = []
    for day_index in range(n_days):
        day = start + timedelta(days=day_index)
        day_scale = rng.lognormal(0.0, day_sigma)
        dropped = set()
        if rng.random() < disrupted_day_rate:
            gap_start = int(rng.integers(0, 24 - 3))
            gap_len = int(rng.integers(3, 11))
            dropped.update(range(gap_start, min(24, gap_start + gap_len)))
        for hour in range(24):
            if hour in dropped or rng.random() < missing_hour_rate:
                continue
            rate = profile[hour] * day_scale * rng.lognormal(0.0, 0.35)
            if rng.random() < burst_rate:
                rate *= rng.uniform(2.0, 6.0)
            minutes = rng.poisson(rate / 60.0, 60)
            base = datetime.combine(day, datetime.min.time())
            for minute, activity in enumerate(minutes):
                records.append(MinuteRecord(base + timedelta(hours=hour, minutes=minute),
                                            float(activity)))
    return SubjectSeries(subject_id=subject_id, device=device, label=label,
                         records=tuple(records))


def synth_cohort(
    n_depressed: int,
    n_healthy: int,
    seed: int,
    min_days: int = 8,
    max_days: int = 16,
    missing_hour_rate: float = 0.01,
    disrupted_day_rate: float = 0.08,
) -> list[SubjectSeries]:
    """A labeled Actiwatch-style cohort, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    subjects = []
    for i in range(n_depressed):
        n_days = int(rng.integers(min_days, max_days + 1))
        subjects.append(synth_subject(f"condition_{i + 1}", ClassLabel.DEPRESSED, n_days, rng,
                                      missing_hour_rate=missing_hour_rate,
                                      disrupted_day_rate=disrupted_day_rate))
    for i in range(n_healthy):
        n_days = int(rng.integers(min_days, max_days + 1))
        subjects.append(synth_subject(f"control_{i + 1}", ClassLabel.HEALTHY, n_days, rng,
                                      missing_hour_rate=missing_hour_rate,
                                      disrupted_day_rate=disrupted_day_rate))
    return subjects


def affine_transform_series(
    series: SubjectSeries,
    a: float,
    b: float,
    subject_id: str | None = None,
    device: DeviceKind | None = None,
    label: ClassLabel | None | str = "keep",
) -> SubjectSeries:
    """Apply the unit change x -> a*x + b to every minute of a series."""
    if not a > 0:
        raise ValueError(f"slope must be positive, got {a}")
    records = tuple(MinuteRecord(rec.timestamp, a * rec.activity + b)
                    for rec in series.records)
    return SubjectSeries(
        subject_id=subject_id if subject_id is not None else series.subject_id,
        device=device if device is not None else series.device,
        label=series.label if label == "keep" else label,
        records=records,
    )


def resample_fitbit_from(
    source: SubjectSeries,
    n_days: int,
    rng: np.random.Generator,
    scale_a: float,
    offset_b: float,
    subject_id: str,
    start: Date = Date(2023, 1, 2),
) -> SubjectSeries:
    """Fake a step-counter user from another subject's hourly distributions.

    For each synthetic day, every hour's total is drawn from the source
    subject's observed totals for that hour of day, then converted to the
    new device's units via ``round(a * total + 60 * b)`` (an affine unit
    change applied at minute level) and spread over 60 integer minutes.
    """
    if not scale_a > 0:
        raise ValueError(f"slope must be positive, got {scale_a}")
    by_hour: dict[int, list[float]] = {h: [] for h in range(24)}
    all_totals: list[float] = []
    from .timeseries import hourly_totals  # local import to avoid a cycle

    for cell in hourly_totals(source):
        by_hour[cell.hour].append(cell.total)
        all_totals.append(cell.total)
    if not all_totals:
        raise ValueError(f"source subject {source.subject_id} has no data")

    records: list[MinuteRecord] = []
    for day_index in range(n_days):
        day = start + timedelta(days=day_index)
        base = datetime.combine(day, datetime.min.time())
        for hour in range(24):
            pool = by_hour[hour] or all_totals
            total = float(pool[int(rng.integers(0, len(pool)))])
            converted = int(round(scale_a * total + 60.0 * offset_b))
            per_minute, remainder = divmod(converted, 60)
            for minute in range(60):
                activity = per_minute + (1 if minute < remainder else 0)
                records.append(MinuteRecord(base + timedelta(hours=hour, minutes=minute),
                                            float(activity)))
    return SubjectSeries(subject_id=subject_id, device=DeviceKind.FITBIT_STEPS,
                         label=source.label, records=tuple(records))


def write_depresjon_layout(subjects: list[SubjectSeries], root) -> None:
    """Write a cohort to disk in the condition/control CSV layout."""
    from pathlib import Path

    from .ingest import format_depresjon_activity

    root = Path(root)
    for sub in ("condition", "control"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for series in subjects:
        sub = "condition" if series.label == ClassLabel.DEPRESSED else "control"
        (root / sub / f"{series.subject_id}.csv").write_text(format_depresjon_activity(series))
