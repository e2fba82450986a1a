"""Command line entry point: the full research-to-deployment workflow.

Subcommands mirror the pipeline stages: ``cv5``, ``loocv-pairs`` and
``transfer`` run the validation protocols and write their tables, ``qq``
writes quantile-pair diagnostics, ``train`` produces a model bundle,
``predict`` scores a local step log with it, and ``serve`` starts the HTTP
service.  Every randomized command takes one ``--seed`` and all outputs
are byte-reproducible for identical flags and seed.

Each flag can also be supplied via an ``ACTISCREEN_``-prefixed environment
variable (e.g. ``ACTISCREEN_SEED=7``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import evaluation as ev
from .features import MixedDeviceError, NoValidDaysError, build_dataset
from .ingest import (
    ClassLabel,
    DatasetLayoutError,
    FormatError,
    ParseError,
    load_depresjon_dataset,
    parse_fitbit_steps,
)
from .model import (
    BundleError,
    ForestConfig,
    SchemaMismatchError,
    TrainingError,
    fit_forest,
    make_bundle,
    save_bundle,
)
from .scaling import ScalerKind, concordance_correlation, fit_scaler, apply_scaler, qq_points, qq_to_csv
from .serve import (
    DEFAULT_MAX_UPLOAD_BYTES,
    DEFAULT_WINDOW_DAYS,
    NoValidDaysUpload,
    create_app,
    load_bundle_file,
    screen_series,
)

ENV_PREFIX = "ACTISCREEN_"

USAGE_EXIT = 1
DATA_EXIT = 2

DATA_ERRORS = (
    ParseError, FormatError, DatasetLayoutError, MixedDeviceError, NoValidDaysError,
    TrainingError, SchemaMismatchError, BundleError, ev.ProtocolError, NoValidDaysUpload,
    FileNotFoundError, NotADirectoryError, IsADirectoryError, PermissionError,
)

SCALER_CHOICES = {"robust": ScalerKind.ROBUST, "minmax": ScalerKind.MINMAX, "raw": None}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this tool reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _env(name: str, fallback):
    return os.environ.get(ENV_PREFIX + name.upper(), fallback)


def _add_seed(parser):
    parser.add_argument("--seed", type=int, default=int(_env("seed", 42)),
                        help="seed for every random choice (env ACTISCREEN_SEED)")


def _add_scaler(parser):
    parser.add_argument("--scaler", choices=sorted(SCALER_CHOICES),
                        default=_env("scaler", "robust"),
                        help="hourly-activity scaler (env ACTISCREEN_SCALER)")


def _add_trees(parser):
    parser.add_argument("--trees", type=int, default=int(_env("trees", 100)),
                        help="number of trees in the forest (env ACTISCREEN_TREES)")


def _add_out_dir(parser):
    parser.add_argument("--out-dir", type=Path, default=Path(_env("out_dir", "out")),
                        help="directory for result tables (env ACTISCREEN_OUT_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="actiscreen",
                     description="actigraphy screening pipeline and service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cv5", help="stratified k-fold CV against the dummy baseline")
    p.add_argument("--data", type=Path, required=True, help="dataset root (condition/control)")
    p.add_argument("--folds", type=int, default=5)
    _add_seed(p)
    _add_scaler(p)
    _add_trees(p)
    _add_out_dir(p)

    p = sub.add_parser("loocv-pairs", help="leave one depressed+healthy pair out per iteration")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--pairs", type=int, default=None,
                   help="number of pairs (default: min of the class counts)")
    _add_seed(p)
    _add_scaler(p)
    _add_trees(p)
    _add_out_dir(p)

    p = sub.add_parser("transfer", help="train on a dataset, test per-subject step logs")
    p.add_argument("--data", type=Path, required=True, help="secondary dataset root")
    p.add_argument("--primary", type=Path, nargs="+", required=True,
                   help="step-log JSON file(s), one subject each")
    p.add_argument("--primary-label", choices=["healthy", "depressed"], default="healthy",
                   help="class label of the primary subjects")
    _add_seed(p)
    _add_trees(p)
    _add_out_dir(p)

    p = sub.add_parser("train", help="train a forest and write a model bundle")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="bundle output path")
    p.add_argument("--dataset-name", default=None, help="name recorded in bundle metadata")
    _add_seed(p)
    _add_scaler(p)
    _add_trees(p)

    p = sub.add_parser("predict", help="score a local step-log file with a bundle")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW_DAYS,
                   help="most recent valid days to report")

    p = sub.add_parser("qq", help="write quantile-pair files (raw, minmax, robust)")
    p.add_argument("--a", type=Path, required=True, help="dataset root for sample A")
    p.add_argument("--b", type=Path, nargs="+", required=True,
                   help="step-log JSON file(s) for sample B")
    _add_out_dir(p)

    p = sub.add_parser("serve", help="start the HTTP screening service")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--port", type=int, default=int(_env("port", 8080)))
    p.add_argument("--bind", default=_env("bind", "127.0.0.1"))
    p.add_argument("--max-upload-bytes", type=int,
                   default=int(_env("max_upload_bytes", DEFAULT_MAX_UPLOAD_BYTES)))
    p.add_argument("--static", type=Path, default=Path(_env("static", "frontend/dist")),
                   help="directory of built web UI assets (optional)")

    return parser


def _write(path: Path, header: str, body: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"# {header}\n{body}")
    print(f"wrote {path}")


def _forest_config(args) -> ForestConfig:
    return ForestConfig(n_trees=args.trees, rng_seed=args.seed)


def _print_summary(caption: str, summaries) -> None:
    print(f"== {caption}")
    print(ev.summary_csv(summaries), end="")


def _cmd_cv5(args) -> int:
    subjects = load_depresjon_dataset(args.data)
    dataset = build_dataset(subjects, SCALER_CHOICES[args.scaler])
    result = ev.run_cv5(dataset, _forest_config(args), seed=args.seed, k=args.folds)
    header = f"actiscreen cv5 seed={args.seed} scaler={args.scaler} trees={args.trees} folds={args.folds}"
    _write(args.out_dir / "cv5_summary.csv", header,
           ev.summary_csv([result.forest, result.dummy]))
    _write(args.out_dir / "cv5_iterations.csv", header,
           ev.per_iteration_csv(result.forest) + ev.per_iteration_csv(result.dummy))
    _write(args.out_dir / "cv5_roc.csv", header + f" auc={result.roc.auc!r}",
           ev.roc_csv(result.roc))
    _print_summary(f"{args.folds}-fold cross-validation (pooled ROC AUC {result.roc.auc:.4f})",
                   [result.forest, result.dummy])
    return 0


def _cmd_loocv_pairs(args) -> int:
    subjects = load_depresjon_dataset(args.data)
    result = ev.run_pair_loocv(subjects, _forest_config(args), seed=args.seed,
                               n_pairs=args.pairs, scaler_kind=SCALER_CHOICES[args.scaler])
    header = (f"actiscreen loocv-pairs seed={args.seed} scaler={args.scaler} "
              f"trees={args.trees} pairs={len(result.pairs)}")
    _write(args.out_dir / "loocv_summary.csv", header,
           ev.summary_csv([result.forest, result.dummy]))
    pair_lines = ["depressed_id,healthy_id,n_test_days,accuracy,poor"]
    for detail in result.pairs:
        acc = "NA" if detail.report.accuracy is None else f"{detail.report.accuracy:.6f}"
        pair_lines.append(f"{detail.depressed_id},{detail.healthy_id},"
                          f"{detail.n_test_days},{acc},{int(detail.poor)}")
    _write(args.out_dir / "loocv_pairs.csv", header, "\n".join(pair_lines) + "\n")
    _write(args.out_dir / "loocv_iterations.csv", header,
           ev.per_iteration_csv(result.forest) + ev.per_iteration_csv(result.dummy))
    _write(args.out_dir / "loocv_roc.csv", header + f" auc={result.roc.auc!r}",
           ev.roc_csv(result.roc))
    poor = sum(1 for d in result.pairs if d.poor)
    _print_summary(f"pair LOOCV ({poor} of {len(result.pairs)} pairs poor)",
                   [result.forest, result.dummy])
    return 0


def _cmd_transfer(args) -> int:
    subjects = load_depresjon_dataset(args.data)
    label = ClassLabel.DEPRESSED if args.primary_label == "depressed" else ClassLabel.HEALTHY
    primaries = []
    for path in args.primary:
        series = parse_fitbit_steps(path.read_text(), subject_id=path.stem)
        primaries.append(series.relabeled(label))
    result = ev.run_transfer_eval(subjects, primaries, _forest_config(args))
    header = (f"actiscreen transfer seed={args.seed} trees={args.trees} "
              f"primaries={len(primaries)} primary_label={args.primary_label}")
    _write(args.out_dir / "transfer_summary.csv", header, ev.summary_csv([result.forest]))
    _write(args.out_dir / "transfer_subjects.csv", header, ev.per_iteration_csv(result.forest))
    if result.roc is not None:
        _write(args.out_dir / "transfer_roc.csv", header + f" auc={result.roc.auc!r}",
               ev.roc_csv(result.roc))
    else:
        print("transfer ROC not written: primary days are single-class")
    if result.skipped_subjects:
        print(f"skipped (no valid days): {', '.join(result.skipped_subjects)}")
    _print_summary("device transfer", [result.forest])
    return 0


def _cmd_train(args) -> int:
    scaler_kind = SCALER_CHOICES[args.scaler]
    if scaler_kind is None:
        print("train: --scaler raw is not servable; pick robust or minmax", file=sys.stderr)
        return USAGE_EXIT
    subjects = load_depresjon_dataset(args.data)
    dataset = build_dataset(subjects, scaler_kind)
    forest = fit_forest(dataset, _forest_config(args))
    name = args.dataset_name if args.dataset_name is not None else args.data.name
    bundle = make_bundle(forest, scaler_kind, dataset.schema,
                         dataset_name=name, n_rows=len(dataset.rows))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(save_bundle(bundle))
    print(f"wrote {args.out} ({len(dataset.rows)} training rows, {args.trees} trees)")
    return 0


def _cmd_predict(args) -> int:
    bundle = load_bundle_file(args.model)
    series = parse_fitbit_steps(args.input.read_text(), subject_id=args.input.stem)
    report = screen_series(series, bundle, window=args.window)
    print(json.dumps(report.to_json(bundle), indent=2))
    return 0


def _cmd_qq(args) -> int:
    from .features import subject_hourly_totals

    subjects = load_depresjon_dataset(args.a)
    sample_a = [t for s in subjects for t in subject_hourly_totals(s)]
    sample_b = []
    for path in args.b:
        series = parse_fitbit_steps(path.read_text(), subject_id=path.stem)
        sample_b.extend(subject_hourly_totals(series))

    header = f"actiscreen qq a={args.a.name} b={'+'.join(p.name for p in args.b)}"
    for variant, kind in (("raw", None), ("minmax", ScalerKind.MINMAX),
                          ("robust", ScalerKind.ROBUST)):
        if kind is None:
            qa, qb = sample_a, sample_b
        else:
            qa = apply_scaler(fit_scaler(kind, sample_a), sample_a)
            qb = apply_scaler(fit_scaler(kind, sample_b), sample_b)
        qq = qq_points(qa, qb)
        ccc = concordance_correlation([p[0] for p in qq.points], [p[1] for p in qq.points])
        _write(args.out_dir / f"qq_{variant}.csv", f"{header} identity_concordance={ccc:.6f}",
               qq_to_csv(qq))
        print(f"{variant}: identity-line concordance {ccc:.4f}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    bundle = load_bundle_file(args.model)
    static = args.static if args.static.is_dir() else None
    if static is None:
        print(f"note: no web UI at {args.static}, serving API only", file=sys.stderr)
    app = create_app(bundle, max_upload_bytes=args.max_upload_bytes, static_dir=static)
    print(f"model {args.model} loaded; listening on http://{args.bind}:{args.port}")
    uvicorn.run(app, host=args.bind, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "cv5": _cmd_cv5,
    "loocv-pairs": _cmd_loocv_pairs,
    "transfer": _cmd_transfer,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "qq": _cmd_qq,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DATA_ERRORS as err:
        print(f"actiscreen {args.command}: {err}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
