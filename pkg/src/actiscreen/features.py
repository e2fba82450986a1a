"""Day-level feature vectors and labeled dataset assembly.

A day's 24 scaled hourly totals are split into four six-hour blocks
(night 0-5, morning 6-11, afternoon 12-17, evening 18-23) and each block
is summarized by five statistics, giving 20 features per day in a fixed
bin-major order.  The block layout and statistic set are versioned in
:class:`FeatureSchema` so they can evolve without silently invalidating
trained models.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from .ingest import ClassLabel, DeviceKind, SubjectSeries
from .scaling import ScalerKind, ScalerParams, apply_scaler, fit_scaler
from .timeseries import CompleteDay, hourly_totals, impute_day, segment_days


class MixedDeviceError(ValueError):
    """A dataset build was handed subjects from more than one device."""


class NoValidDaysError(ValueError):
    """No subject contributed a single valid day."""


@dataclass(frozen=True)
class FeatureSchema:
    version: int
    bin_boundaries: tuple[tuple[int, int], ...]  # half-open hour ranges
    statistic_names: tuple[str, ...]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(
            f"h{start:02d}_h{stop - 1:02d}_{stat}"
            for start, stop in self.bin_boundaries
            for stat in self.statistic_names
        )

    @property
    def n_features(self) -> int:
        return len(self.bin_boundaries) * len(self.statistic_names)


SCHEMA_V1 = FeatureSchema(
    version=1,
    bin_boundaries=((0, 6), (6, 12), (12, 18), (18, 24)),
    statistic_names=("mean", "std", "min", "max", "median"),
)


@dataclass(frozen=True)
class FeatureVector:
    subject_id: str
    date: Date
    values: tuple[float, ...]
    label: ClassLabel | None


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    rows: tuple[FeatureVector, ...]
    device: DeviceKind
    scaler: ScalerParams | None  # None when features were left on the raw scale

    @property
    def labels(self) -> tuple[ClassLabel, ...]:
        return tuple(row.label for row in self.rows)

    def matrix(self) -> np.ndarray:
        return np.array([row.values for row in self.rows], dtype=np.float64)


def day_features(hours, schema: FeatureSchema = SCHEMA_V1) -> tuple[float, ...]:
    """Compute the schema's statistics over each hour block of one day.

    ``hours`` are the day's 24 (scaled) hourly values.  Standard deviation
    is the population one (divisor n).
    """
    arr = np.asarray(hours, dtype=np.float64)
    values: list[float] = []
    for start, stop in schema.bin_boundaries:
        block = arr[start:stop]
        for stat in schema.statistic_names:
            if stat == "mean":
                values.append(float(block.mean()))
            elif stat == "std":
                values.append(float(block.std()))
            elif stat == "min":
                values.append(float(block.min()))
            elif stat == "max":
                values.append(float(block.max()))
            elif stat == "median":
                values.append(float(np.median(block)))
            else:
                raise ValueError(f"unknown statistic {stat!r}")
    return tuple(values)


def complete_days(series: SubjectSeries) -> list[CompleteDay]:
    """Run one subject through aggregation, the day-drop rule and imputation."""
    cells = hourly_totals(series)
    days = segment_days(cells, series.subject_id, series.label)
    return [impute_day(day) for day in days if day.is_valid]


def subject_hourly_totals(series: SubjectSeries) -> list[float]:
    """Every hourly total of a subject, including hours from dropped days."""
    return [cell.total for cell in hourly_totals(series)]


def featurize_days(days: list[CompleteDay], scaler: ScalerParams | None,
                   schema: FeatureSchema = SCHEMA_V1) -> list[FeatureVector]:
    """Scale each completed day's hours and compute its feature vector."""
    rows = []
    for day in days:
        hours = np.asarray(day.hours, dtype=np.float64)
        scaled = apply_scaler(scaler, hours) if scaler is not None else hours
        rows.append(FeatureVector(subject_id=day.subject_id, date=day.date,
                                  values=day_features(scaled, schema), label=day.label))
    return rows


def build_dataset(subjects: list[SubjectSeries], scaler_kind: ScalerKind | None,
                  schema: FeatureSchema = SCHEMA_V1) -> Dataset:
    """Build a labeled dataset from one device's subjects.

    The scaler is fitted on the union of every subject's hourly totals,
    including hours that belong to dropped days; ``scaler_kind=None``
    skips scaling entirely (comparison switch for single-device runs).
    Rows are ordered by subject id then date.
    """
    if not subjects:
        raise NoValidDaysError("no subjects given")
    devices = {s.device for s in subjects}
    if len(devices) != 1:
        raise MixedDeviceError(f"subjects span multiple devices: {sorted(d.value for d in devices)}")
    unlabeled = [s.subject_id for s in subjects if s.label is None]
    if unlabeled:
        raise ValueError(f"all subjects must be labeled; missing labels: {unlabeled}")

    scaler = None
    if scaler_kind is not None:
        totals = [t for s in subjects for t in subject_hourly_totals(s)]
        scaler = fit_scaler(scaler_kind, totals)

    rows: list[FeatureVector] = []
    for series in sorted(subjects, key=lambda s: s.subject_id):
        rows.extend(featurize_days(complete_days(series), scaler, schema))
    if not rows:
        raise NoValidDaysError("no subject contributed a valid day")
    return Dataset(schema=schema, rows=tuple(rows), device=devices.pop(), scaler=scaler)


def featurize_single(series: SubjectSeries, scaler_kind: ScalerKind | None,
                     schema: FeatureSchema = SCHEMA_V1) -> list[FeatureVector]:
    """Featurize one subject with a scaler fitted on its own hourly totals.

    This is the serving-side pipeline: a new user's upload carries its own
    unit scale, so the scaler must come from that upload alone.  Emits
    unlabeled rows for every valid day; no valid day yields an empty list.
    """
    days = complete_days(series)
    if not days:
        return []
    scaler = None
    if scaler_kind is not None:
        scaler = fit_scaler(scaler_kind, subject_hourly_totals(series))
    return [FeatureVector(subject_id=fv.subject_id, date=fv.date, values=fv.values, label=None)
            for fv in featurize_days(days, scaler, schema)]


def dataset_to_csv(dataset: Dataset) -> str:
    """Export rows as CSV: subject_id, date, the 20 features, label."""
    header = ["subject_id", "date", *dataset.schema.feature_names, "label"]
    lines = [",".join(header)]
    for row in dataset.rows:
        cells = [row.subject_id, row.date.isoformat()]
        cells.extend(repr(v) for v in row.values)
        cells.append("" if row.label is None else str(int(row.label)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str, device: DeviceKind, scaler: ScalerParams | None,
                     schema: FeatureSchema = SCHEMA_V1) -> Dataset:
    """Re-import a dataset exported by :func:`dataset_to_csv`."""
    lines = [line for line in text.splitlines() if line]
    expected = ["subject_id", "date", *schema.feature_names, "label"]
    if not lines or lines[0].split(",") != expected:
        raise ValueError("header does not match the feature schema")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(expected):
            raise ValueError(f"expected {len(expected)} cells, got {len(cells)}")
        values = tuple(float(c) for c in cells[2:-1])
        label = None if cells[-1] == "" else ClassLabel(int(cells[-1]))
        rows.append(FeatureVector(subject_id=cells[0], date=Date.fromisoformat(cells[1]),
                                  values=values, label=label))
    return Dataset(schema=schema, rows=tuple(rows), device=device, scaler=scaler)
