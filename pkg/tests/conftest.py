"""Shared fixtures: synthetic cohorts, fixture files, dataset discovery."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from actiscreen.ingest import ClassLabel
from actiscreen.synthetic import synth_cohort, synth_subject, write_depresjon_layout

# Where the real secondary dataset is looked for.  It cannot ship with the
# repository; scripts/fetch_depresjon.py downloads it when network allows.
DATASET_ENV = "ACTISCREEN_DEPRESJON_ROOT"
DATASET_DEFAULT = Path(__file__).resolve().parent.parent / "data" / "depresjon"


def find_depresjon_root() -> Path | None:
    override = os.environ.get(DATASET_ENV)
    candidates = [Path(override)] if override else [DATASET_DEFAULT]
    for root in candidates:
        if (root / "condition").is_dir() and (root / "control").is_dir():
            return root
    return None


@pytest.fixture(scope="session")
def depresjon_root() -> Path:
    root = find_depresjon_root()
    if root is None:
        pytest.skip(
            f"secondary dataset not available: set {DATASET_ENV} or place it under "
            f"{DATASET_DEFAULT} (see scripts/fetch_depresjon.py)"
        )
    return root


@pytest.fixture(scope="session")
def cohort():
    """Mid-sized labeled cohort with gaps and some invalid days."""
    return synth_cohort(6, 8, seed=20240301, min_days=7, max_days=11)


@pytest.fixture(scope="session")
def clean_subject():
    """One gap-free healthy subject (every hour fully recorded)."""
    import numpy as np

    rng = np.random.default_rng(77)
    return synth_subject("control_clean", ClassLabel.HEALTHY, 9, rng)


@pytest.fixture(scope="session")
def cohort_dir(tmp_path_factory, cohort) -> Path:
    """The synthetic cohort written out in the condition/control layout."""
    root = tmp_path_factory.mktemp("synth-cohort")
    write_depresjon_layout(cohort, root)
    return root


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIP line per acceptance criterion test."""
    lines = []
    for status, key in (("PASS", "passed"), ("FAIL", "failed"), ("SKIP", "skipped")):
        for report in terminalreporter.stats.get(key, []):
            if "test_acceptance" not in getattr(report, "nodeid", ""):
                continue
            name = report.nodeid.split("::", 1)[-1]
            note = ""
            if status == "SKIP" and isinstance(report.longrepr, tuple):
                note = f"  ({report.longrepr[2]})"
            lines.append((name, f"[{status}] {name}{note}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
