#!/usr/bin/env python3
"""Download and unpack the public secondary dataset.

Fetches the ~10 MB archive of minute-level actigraphy recordings (23
participants in the condition group, 32 controls) and arranges it as

    data/depresjon/condition/*.csv
    data/depresjon/control/*.csv

which is the layout every `--data` flag and the acceptance suite expect.
If this machine has no route to the dataset host, download the archive on
another machine and run this script with the local file:

    python scripts/fetch_depresjon.py --archive ~/Downloads/depresjon.zip
"""

from __future__ import annotations

import argparse
import shutil
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

DATASET_URL = "https://datasets.simula.no/downloads/depresjon.zip"
DEFAULT_DEST = Path(__file__).resolve().parent.parent / "data" / "depresjon"


def locate_group_dirs(extracted: Path) -> tuple[Path, Path]:
    condition = next((p for p in extracted.rglob("condition") if p.is_dir()), None)
    control = next((p for p in extracted.rglob("control") if p.is_dir()), None)
    if condition is None or control is None:
        raise SystemExit("archive does not contain condition/ and control/ directories")
    return condition, control


def install(archive: Path, dest: Path) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        with zipfile.ZipFile(archive) as zf:
            zf.extractall(tmp)
        condition, control = locate_group_dirs(Path(tmp))
        dest.mkdir(parents=True, exist_ok=True)
        for source, name in ((condition, "condition"), (control, "control")):
            target = dest / name
            if target.exists():
                shutil.rmtree(target)
            shutil.copytree(source, target)
    n_condition = len(list((dest / "condition").glob("*.csv")))
    n_control = len(list((dest / "control").glob("*.csv")))
    print(f"installed {n_condition} condition + {n_control} control files under {dest}")
    if (n_condition, n_control) != (23, 32):
        print("warning: expected 23 condition and 32 control files", file=sys.stderr)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--archive", type=Path, default=None,
                        help="use an already-downloaded depresjon.zip instead of fetching")
    parser.add_argument("--dest", type=Path, default=DEFAULT_DEST)
    parser.add_argument("--url", default=DATASET_URL)
    args = parser.parse_args()

    if args.archive is not None:
        install(args.archive, args.dest)
        return 0

    print(f"downloading {args.url} ...")
    try:
        with tempfile.NamedTemporaryFile(suffix=".zip") as tmp:
            with urllib.request.urlopen(args.url, timeout=60) as response:
                shutil.copyfileobj(response, tmp)
            tmp.flush()
            install(Path(tmp.name), args.dest)
    except OSError as err:
        print(f"download failed: {err}", file=sys.stderr)
        print("fetch depresjon.zip manually and re-run with --archive", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
