#!/usr/bin/env python3
"""Generate a synthetic cohort plus step-log uploads for offline play.

Writes a condition/control dataset usable by every `--data` flag, and a
handful of Fitbit-style JSON uploads (healthy users on a different unit
scale) for the `predict`/`transfer` commands and the web UI.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from actiscreen.ingest import ClassLabel, DeviceKind, format_fitbit_steps
from actiscreen.synthetic import synth_cohort, synth_subject, write_depresjon_layout


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("data/synthetic"))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--depressed", type=int, default=23)
    parser.add_argument("--healthy", type=int, default=32)
    parser.add_argument("--uploads", type=int, default=4,
                        help="number of step-log JSON files to emit")
    args = parser.parse_args()

    cohort = synth_cohort(args.depressed, args.healthy, seed=args.seed)
    write_depresjon_layout(cohort, args.out)
    days = sum(len({r.timestamp.date() for r in s.records}) for s in cohort)
    print(f"wrote {len(cohort)} subjects ({days} recorded days) under {args.out}")

    uploads = args.out / "uploads"
    uploads.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed + 1)
    for i in range(args.uploads):
        series = synth_subject(f"user_{i + 1}", ClassLabel.HEALTHY,
                               n_days=int(rng.integers(16, 25)), rng=rng,
                               device=DeviceKind.FITBIT_STEPS,
                               missing_hour_rate=0.01, disrupted_day_rate=0.05)
        path = uploads / f"user_{i + 1}_steps.json"
        path.write_text(format_fitbit_steps(series))
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
