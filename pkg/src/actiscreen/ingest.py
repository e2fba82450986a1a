"""Parsers for the two supported raw activity formats.

Both device families produce a minute-resolution activity stream:
Actiwatch activity counts arrive as CSV files (one row per minute, as in
the public Depresjon download), Fitbit step logs as a JSON array of
``{"dateTime": ..., "value": ...}`` entries.  Everything downstream works
on :class:`SubjectSeries`, so the rest of the pipeline never needs to know
which device a stream came from beyond its :class:`DeviceKind` tag.

All timestamps are naive local time; no timezone arithmetic is performed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum, IntEnum
from pathlib import Path


class DeviceKind(Enum):
    """Closed set of supported activity sources."""

    ACTIWATCH_COUNTS = "actiwatch_counts"
    FITBIT_STEPS = "fitbit_steps"


class ClassLabel(IntEnum):
    """Numeric target encoding: healthy is 0, depressed is 1."""

    HEALTHY = 0
    DEPRESSED = 1


class ParseError(ValueError):
    """A malformed row or element in a raw activity file.

    ``line`` is the 1-based CSV line for Actiwatch files, ``index`` the
    0-based array index for Fitbit JSON entries.
    """

    def __init__(self, message: str, *, line: int | None = None, index: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        elif index is not None:
            message = f"entry {index}: {message}"
        super().__init__(message)
        self.line = line
        self.index = index


class DuplicateTimestampError(ParseError):
    """Two rows of an Actiwatch file resolve to the same minute."""


class FormatError(ValueError):
    """Input is not in the expected container format at all."""


class DatasetLayoutError(ValueError):
    """A dataset root is missing one of its expected subdirectories."""


@dataclass(frozen=True)
class MinuteRecord:
    """One minute of activity in device-native units (counts or steps)."""

    timestamp: datetime  # minute resolution, seconds == 0
    activity: float      # >= 0

    def __post_init__(self):
        if self.timestamp.second != 0 or self.timestamp.microsecond != 0:
            object.__setattr__(self, "timestamp", self.timestamp.replace(second=0, microsecond=0))
        if not (self.activity >= 0.0):  # also rejects NaN
            raise ValueError(f"activity must be >= 0, got {self.activity!r}")


@dataclass(frozen=True)
class SubjectSeries:
    """One participant's minute stream with device tag and optional label.

    Records are strictly ascending by timestamp with no duplicates; the
    parsers guarantee this and the constructor re-checks it so that hand
    built series obey the same contract.
    """

    subject_id: str
    device: DeviceKind
    label: ClassLabel | None
    records: tuple[MinuteRecord, ...]

    def __post_init__(self):
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.timestamp <= prev.timestamp:
                raise ValueError(
                    f"records must be strictly ascending; {cur.timestamp} follows {prev.timestamp}"
                )

    def relabeled(self, label: ClassLabel | None) -> "SubjectSeries":
        return replace(self, label=label)


DEPRESJON_TIMESTAMP_FORMATS = ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M")
FITBIT_DATETIME_FORMAT = "%m/%d/%y %H:%M:%S"


def _parse_activity_cell(cell: str) -> float:
    value = float(cell)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("activity must be finite")
    if value < 0:
        raise ValueError("activity must be non-negative")
    return value


def parse_depresjon_activity(content: str, subject_id: str, label: ClassLabel) -> SubjectSeries:
    """Parse one Depresjon-style CSV file into a SubjectSeries.

    The file must carry a header naming ``timestamp``, ``date`` and
    ``activity`` columns (any order, case-insensitive) followed by one row
    per minute.  Rows are re-sorted ascending; duplicate minutes are an
    error because the dataset guarantees uniqueness.
    """
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty input: expected a header row") from None

    names = [h.strip().lower() for h in header]
    try:
        ts_col = names.index("timestamp")
        names.index("date")
        act_col = names.index("activity")
    except ValueError:
        raise FormatError(
            f"header must name timestamp, date and activity columns, got {header!r}"
        ) from None
    width = len(header)

    rows: list[tuple[datetime, float, int]] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} columns, got {len(row)}", line=line)
        ts = None
        for fmt in DEPRESJON_TIMESTAMP_FORMATS:
            try:
                ts = datetime.strptime(row[ts_col].strip(), fmt)
                break
            except ValueError:
                continue
        if ts is None:
            raise ParseError(f"unparsable timestamp {row[ts_col]!r}", line=line)
        try:
            activity = _parse_activity_cell(row[act_col].strip())
        except ValueError as err:
            raise ParseError(f"bad activity {row[act_col]!r}: {err}", line=line) from None
        rows.append((ts.replace(second=0, microsecond=0), activity, line))

    rows.sort(key=lambda r: (r[0], r[2]))
    for (ts_a, _, _), (ts_b, _, line_b) in zip(rows, rows[1:]):
        if ts_a == ts_b:
            raise DuplicateTimestampError(f"duplicate timestamp {ts_b}", line=line_b)

    records = tuple(MinuteRecord(ts, act) for ts, act, _ in rows)
    return SubjectSeries(subject_id=subject_id, device=DeviceKind.ACTIWATCH_COUNTS,
                         label=label, records=records)


def format_depresjon_activity(series: SubjectSeries) -> str:
    """Serialize a series back to the Depresjon CSV layout (round-trips)."""
    lines = ["timestamp,date,activity"]
    for rec in series.records:
        act = int(rec.activity) if rec.activity == int(rec.activity) else repr(rec.activity)
        lines.append(f"{rec.timestamp:%Y-%m-%d %H:%M:%S},{rec.timestamp:%Y-%m-%d},{act}")
    return "\n".join(lines) + "\n"


def load_depresjon_dataset(
    root: str | Path,
    condition_dirname: str = "condition",
    control_dirname: str = "control",
) -> list[SubjectSeries]:
    """Load every participant file under ``root`` and attach labels.

    Files under the condition subdirectory are labeled depressed, control
    files healthy; the subject id is the file stem.  Any file-level parse
    error aborts the load with the offending file named.
    """
    root = Path(root)
    subjects: list[SubjectSeries] = []
    for dirname, label in ((condition_dirname, ClassLabel.DEPRESSED),
                           (control_dirname, ClassLabel.HEALTHY)):
        directory = root / dirname
        if not directory.is_dir():
            raise DatasetLayoutError(f"missing dataset directory: {directory}")
        for path in sorted(directory.glob("*.csv")):
            try:
                subjects.append(parse_depresjon_activity(path.read_text(), path.stem, label))
            except (ParseError, FormatError) as err:
                raise type(err)(f"{path.name}: {err}") from err
    subjects.sort(key=lambda s: s.subject_id)
    return subjects


def parse_fitbit_steps(content: str, subject_id: str = "fitbit-upload") -> SubjectSeries:
    """Parse a Fitbit step-count export (JSON array of dateTime/value).

    Entries falling in the same minute are summed: exports can split one
    minute across entries.  The result is unlabeled.
    """
    try:
        data = json.loads(content)
    except json.JSONDecodeError as err:
        raise FormatError(f"not valid JSON: {err}") from None
    if not isinstance(data, list):
        raise FormatError(f"expected a JSON array, got {type(data).__name__}")

    per_minute: dict[datetime, float] = {}
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise ParseError(f"expected an object, got {type(entry).__name__}", index=i)
        try:
            raw_ts = entry["dateTime"]
            raw_value = entry["value"]
        except KeyError as err:
            raise ParseError(f"missing field {err.args[0]!r}", index=i) from None
        try:
            ts = datetime.strptime(str(raw_ts), FITBIT_DATETIME_FORMAT)
        except ValueError:
            raise ParseError(f"unparsable dateTime {raw_ts!r}", index=i) from None
        if isinstance(raw_value, bool) or not isinstance(raw_value, (str, int, float)):
            raise ParseError(f"bad value {raw_value!r}", index=i)
        try:
            value = _parse_activity_cell(str(raw_value))
        except ValueError as err:
            raise ParseError(f"bad value {raw_value!r}: {err}", index=i) from None
        minute = ts.replace(second=0, microsecond=0)
        per_minute[minute] = per_minute.get(minute, 0.0) + value

    records = tuple(MinuteRecord(ts, per_minute[ts]) for ts in sorted(per_minute))
    return SubjectSeries(subject_id=subject_id, device=DeviceKind.FITBIT_STEPS,
                         label=None, records=records)


def format_fitbit_steps(series: SubjectSeries) -> str:
    """Serialize a series to the Fitbit step-log layout (round-trips)."""
    entries = []
    for rec in series.records:
        value = int(rec.activity) if rec.activity == int(rec.activity) else rec.activity
        entries.append({"dateTime": rec.timestamp.strftime(FITBIT_DATETIME_FORMAT),
                        "value": str(value)})
    return json.dumps(entries, indent=1)
