#!/usr/bin/env python3
"""Run the three validation protocols end to end and print the tables.

Uses the real secondary dataset when it is installed (data/depresjon or
ACTISCREEN_DEPRESJON_ROOT), otherwise a synthetic stand-in cohort, so the
whole workflow is runnable offline.  Results land in out/experiments/.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from actiscreen import evaluation as ev
from actiscreen.features import build_dataset
from actiscreen.ingest import ClassLabel, load_depresjon_dataset
from actiscreen.model import ForestConfig, fit_forest, make_bundle, save_bundle
from actiscreen.scaling import ScalerKind
from actiscreen.synthetic import resample_fitbit_from, synth_cohort

DEFAULT_ROOT = Path(__file__).resolve().parent.parent / "data" / "depresjon"


def load_subjects(root: Path | None):
    candidates = [root] if root else []
    env = os.environ.get("ACTISCREEN_DEPRESJON_ROOT")
    if env:
        candidates.append(Path(env))
    candidates.append(DEFAULT_ROOT)
    for candidate in candidates:
        if candidate and (candidate / "condition").is_dir():
            print(f"using dataset at {candidate}")
            return load_depresjon_dataset(candidate)
    print("no installed dataset found; generating a synthetic cohort")
    return synth_cohort(23, 32, seed=4242)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", type=Path, default=None)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--trees", type=int, default=100)
    parser.add_argument("--out", type=Path, default=Path("out/experiments"))
    args = parser.parse_args()

    subjects = load_subjects(args.data)
    config = ForestConfig(n_trees=args.trees, rng_seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    dataset = build_dataset(subjects, ScalerKind.ROBUST)
    print(f"dataset: {len(dataset.rows)} day samples from {len(subjects)} subjects")

    cv5 = ev.run_cv5(dataset, config, seed=args.seed)
    loocv = ev.run_pair_loocv(subjects, config, seed=args.seed)

    # synthetic primary users resampled from the last four controls
    controls = [s for s in subjects if s.label == ClassLabel.HEALTHY][-4:]
    train = [s for s in subjects if s.subject_id not in {c.subject_id for c in controls}]
    rng = np.random.default_rng(args.seed)
    primaries = [
        resample_fitbit_from(c, 15, rng,
                             float(np.exp(rng.uniform(np.log(0.2), np.log(5.0)))),
                             float(rng.uniform(0, 5)), f"primary_{i}")
        for i, c in enumerate(controls)
    ]
    transfer = ev.run_transfer_eval(train, primaries, config)

    summaries = [cv5.forest, cv5.dummy, loocv.forest, loocv.dummy, transfer.forest]
    table = ev.summary_csv(summaries)
    (args.out / "summary.csv").write_text(table)
    (args.out / "cv5_roc.csv").write_text(ev.roc_csv(cv5.roc))
    print(table, end="")
    poor = sum(1 for d in loocv.pairs if d.poor)
    print(f"pairs flagged poor: {poor}/{len(loocv.pairs)}; pooled cv5 AUC {cv5.roc.auc:.4f}")

    forest = fit_forest(dataset, config)
    bundle = make_bundle(forest, ScalerKind.ROBUST, dataset.schema,
                         dataset_name="experiments", n_rows=len(dataset.rows))
    (args.out / "model.bundle").write_bytes(save_bundle(bundle))
    print(f"bundle written to {args.out / 'model.bundle'}; total {time.time() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
