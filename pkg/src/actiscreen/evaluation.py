"""Metrics, ROC, and the three cross-validation protocols.

Three experiment layouts are supported:

* stratified 5-fold CV over day samples (subjects may span folds),
* pair leave-out: one depressed plus one healthy subject held out per
  iteration, with the scaler refitted on the training remainder,
* device transfer: one forest trained on the full secondary dataset, then
  each primary subject scored after per-subject robust scaling.

Metrics with a zero denominator are reported as undefined (None) and
excluded from means and standard deviations, mirroring how screening
studies report NA cells.  Standard deviations use the population divisor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .features import Dataset, build_dataset, complete_days, featurize_days, featurize_single
from .ingest import ClassLabel, SubjectSeries
from .model import (
    ForestConfig,
    fit_dummy,
    fit_forest,
    label_for_score,
    predict_dummy,
    predict_scores,
)
from .scaling import ScalerKind

POOR_ACCURACY_THRESHOLD = 0.5

METRIC_NAMES = ("sensitivity", "specificity", "accuracy")


class ProtocolError(ValueError):
    """A validation protocol cannot run on the given data."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with depressed as the positive class."""

    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class MetricsReport:
    """None marks a metric whose denominator was zero (reported as NA)."""

    sensitivity: float | None
    specificity: float | None
    accuracy: float | None

    def get(self, name: str) -> float | None:
        return getattr(self, name)


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float, float], ...]  # (fpr, tpr, threshold), thr descending
    auc: float


@dataclass(frozen=True)
class EvalSummary:
    protocol: str
    iterations: tuple[str, ...]
    matrices: tuple[ConfusionMatrix, ...]
    reports: tuple[MetricsReport, ...]

    def defined(self, metric: str) -> list[float]:
        return [r.get(metric) for r in self.reports if r.get(metric) is not None]

    def mean(self, metric: str) -> float | None:
        values = self.defined(metric)
        return float(np.mean(values)) if values else None

    def sd(self, metric: str) -> float | None:
        values = self.defined(metric)
        return float(np.std(values)) if values else None


@dataclass(frozen=True)
class PairDetail:
    depressed_id: str
    healthy_id: str
    n_test_days: int
    matrix: ConfusionMatrix
    report: MetricsReport
    poor: bool


@dataclass(frozen=True)
class Cv5Result:
    forest: EvalSummary
    dummy: EvalSummary
    roc: RocCurve  # pooled over the concatenated held-out forest scores


@dataclass(frozen=True)
class PairLoocvResult:
    forest: EvalSummary
    dummy: EvalSummary
    pairs: tuple[PairDetail, ...]
    skipped_pairs: tuple[tuple[str, str], ...]  # pairs with zero valid test days
    roc: RocCurve  # pooled over the concatenated held-pair forest scores


@dataclass(frozen=True)
class TransferResult:
    forest: EvalSummary
    skipped_subjects: tuple[str, ...]  # primaries with zero valid days
    roc: RocCurve | None  # None when the primary days are single-class


def derive_seed(base: int, *key: int) -> int:
    """Stable per-iteration seed from a base seed and an index path."""
    ss = np.random.SeedSequence(entropy=base, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def confusion(actual, predicted) -> ConfusionMatrix:
    """Count the four outcomes; inputs are equal-length label sequences."""
    actual = list(actual)
    predicted = list(predicted)
    if len(actual) != len(predicted):
        raise ValueError(f"length mismatch: {len(actual)} vs {len(predicted)}")
    if not actual:
        raise ValueError("need at least one observation")
    tp = fn = fp = tn = 0
    for a, p in zip(actual, predicted):
        if a == ClassLabel.DEPRESSED:
            if p == ClassLabel.DEPRESSED:
                tp += 1
            else:
                fn += 1
        else:
            if p == ClassLabel.DEPRESSED:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def metrics_from_confusion(matrix: ConfusionMatrix) -> MetricsReport:
    pos = matrix.tp + matrix.fn
    neg = matrix.tn + matrix.fp
    return MetricsReport(
        sensitivity=matrix.tp / pos if pos else None,
        specificity=matrix.tn / neg if neg else None,
        accuracy=(matrix.tp + matrix.tn) / matrix.total if matrix.total else None,
    )


def roc_auc(actual, scores) -> RocCurve:
    """ROC over distinct score thresholds; AUC by the trapezoidal rule.

    Tied scores collapse into a single threshold step, so the curve is a
    monotone staircase from (0,0) to (1,1).
    """
    y = np.array([1 if a == ClassLabel.DEPRESSED else 0 for a in actual], dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if y.size != s.size:
        raise ValueError(f"length mismatch: {y.size} vs {s.size}")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ProtocolError("ROC needs both classes present")

    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]

    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    auc = 0.0
    i = 0
    n = s_sorted.size
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        prev_fpr = fp / n_neg
        prev_tpr = tp / n_pos
        tp += int(y_sorted[i:j].sum())
        fp += (j - i) - int(y_sorted[i:j].sum())
        fpr = fp / n_neg
        tpr = tp / n_pos
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        points.append((fpr, tpr, float(s_sorted[i])))
        i = j
    return RocCurve(points=tuple(points), auc=auc)


def stratified_kfold(data: Dataset, k: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified partition of row indices into k folds.

    Each class is shuffled and dealt round-robin, so per-fold class counts
    stay within one row of the exact proportion.
    """
    if k < 2:
        raise ProtocolError(f"k must be >= 2, got {k}")
    labels = np.array([int(lab) for lab in data.labels], dtype=np.int64)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.nonzero(labels == cls)[0]
        if idx.size < k:
            raise ProtocolError(f"class {cls} has {idx.size} rows, fewer than k={k}")
        rng.shuffle(idx)
        for j in range(k):
            folds[j].extend(idx[j::k].tolist())
    return [np.sort(np.array(fold, dtype=np.int64)) for fold in folds]


def _subset(data: Dataset, indices: np.ndarray) -> Dataset:
    return replace(data, rows=tuple(data.rows[i] for i in indices))


def _forest_fold_eval(train: Dataset, test: Dataset, config: ForestConfig,
                      fold_seed: int) -> tuple[ConfusionMatrix, MetricsReport, np.ndarray, ForestModel]:
    forest = fit_forest(train, replace(config, rng_seed=fold_seed))
    scores = predict_scores(forest, test.matrix())
    predicted = [label_for_score(s) for s in scores]
    matrix = confusion(test.labels, predicted)
    return matrix, metrics_from_confusion(matrix), scores, forest


def run_cv5(data: Dataset, model_config: ForestConfig, seed: int, k: int = 5) -> Cv5Result:
    """Stratified k-fold CV of the forest against the stratified dummy."""
    folds = stratified_kfold(data, k, derive_seed(seed, 0))

    forest_matrices, forest_reports = [], []
    dummy_matrices, dummy_reports = [], []
    pooled_actual: list[ClassLabel] = []
    pooled_scores: list[float] = []
    names = []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(data.rows)), test_idx)
        train = _subset(data, train_idx)
        test = _subset(data, test_idx)

        matrix, report, scores, _ = _forest_fold_eval(
            train, test, model_config, derive_seed(model_config.rng_seed, 1, i))
        forest_matrices.append(matrix)
        forest_reports.append(report)
        pooled_actual.extend(test.labels)
        pooled_scores.extend(scores.tolist())

        dummy = fit_dummy(train.labels)
        dummy_predicted = predict_dummy(dummy, len(test.rows),
                                        np.random.default_rng(derive_seed(seed, 2, i)))
        dummy_matrix = confusion(test.labels, dummy_predicted)
        dummy_matrices.append(dummy_matrix)
        dummy_reports.append(metrics_from_confusion(dummy_matrix))
        names.append(f"fold{i}")

    return Cv5Result(
        forest=EvalSummary("forest-cv5", tuple(names), tuple(forest_matrices),
                           tuple(forest_reports)),
        dummy=EvalSummary("dummy-cv5", tuple(names), tuple(dummy_matrices),
                          tuple(dummy_reports)),
        roc=roc_auc(pooled_actual, pooled_scores),
    )


def make_pairs(subjects: list[SubjectSeries], seed: int,
               n_pairs: int | None = None) -> list[tuple[str, str]]:
    """Disjoint (depressed_id, healthy_id) pairs by seeded random matching."""
    depressed = sorted(s.subject_id for s in subjects if s.label == ClassLabel.DEPRESSED)
    healthy = sorted(s.subject_id for s in subjects if s.label == ClassLabel.HEALTHY)
    if not depressed or not healthy:
        raise ProtocolError(
            f"need both classes to pair, got {len(depressed)} depressed / {len(healthy)} healthy"
        )
    rng = np.random.default_rng(seed)
    depressed = [depressed[i] for i in rng.permutation(len(depressed))]
    healthy = [healthy[i] for i in rng.permutation(len(healthy))]
    count = min(len(depressed), len(healthy))
    if n_pairs is not None:
        if not 1 <= n_pairs <= count:
            raise ProtocolError(f"n_pairs must be in [1, {count}], got {n_pairs}")
        count = n_pairs
    return [(depressed[i], healthy[i]) for i in range(count)]


def run_pair_loocv(subjects: list[SubjectSeries], model_config: ForestConfig, seed: int,
                   n_pairs: int | None = None,
                   scaler_kind: ScalerKind | None = ScalerKind.ROBUST) -> PairLoocvResult:
    """Hold out one depressed + one healthy subject per iteration.

    The dataset (and its scaler) is rebuilt from the remaining subjects
    each time; the held pair's days are scaled with that training scaler,
    which is the standard within-device train/test discipline.
    """
    by_id = {s.subject_id: s for s in subjects}
    pairs = make_pairs(subjects, derive_seed(seed, 0), n_pairs)

    forest_matrices, forest_reports = [], []
    dummy_matrices, dummy_reports = [], []
    details: list[PairDetail] = []
    skipped: list[tuple[str, str]] = []
    pooled_actual: list[ClassLabel] = []
    pooled_scores: list[float] = []
    names = []
    for i, (dep_id, healthy_id) in enumerate(pairs):
        train_subjects = [s for s in subjects if s.subject_id not in (dep_id, healthy_id)]
        train = build_dataset(train_subjects, scaler_kind)

        test_rows = []
        for sid in (dep_id, healthy_id):
            series = by_id[sid]
            test_rows.extend(featurize_days(complete_days(series), train.scaler, train.schema))
        if not test_rows:
            skipped.append((dep_id, healthy_id))
            continue
        actual = [row.label for row in test_rows]
        X_test = np.array([row.values for row in test_rows], dtype=np.float64)

        forest = fit_forest(train, replace(model_config,
                                           rng_seed=derive_seed(model_config.rng_seed, 1, i)))
        scores = predict_scores(forest, X_test)
        pooled_actual.extend(actual)
        pooled_scores.extend(scores.tolist())
        predicted = [label_for_score(s) for s in scores]
        matrix = confusion(actual, predicted)
        report = metrics_from_confusion(matrix)
        forest_matrices.append(matrix)
        forest_reports.append(report)
        details.append(PairDetail(
            depressed_id=dep_id, healthy_id=healthy_id, n_test_days=len(test_rows),
            matrix=matrix, report=report,
            poor=report.accuracy is not None and report.accuracy < POOR_ACCURACY_THRESHOLD,
        ))

        dummy = fit_dummy(train.labels)
        dummy_predicted = predict_dummy(dummy, len(test_rows),
                                        np.random.default_rng(derive_seed(seed, 2, i)))
        dummy_matrix = confusion(actual, dummy_predicted)
        dummy_matrices.append(dummy_matrix)
        dummy_reports.append(metrics_from_confusion(dummy_matrix))
        names.append(f"{dep_id}+{healthy_id}")

    if not details:
        raise ProtocolError("every pair had zero valid test days")
    return PairLoocvResult(
        forest=EvalSummary("forest-pair-loocv", tuple(names), tuple(forest_matrices),
                           tuple(forest_reports)),
        dummy=EvalSummary("dummy-pair-loocv", tuple(names), tuple(dummy_matrices),
                          tuple(dummy_reports)),
        pairs=tuple(details),
        skipped_pairs=tuple(skipped),
        roc=roc_auc(pooled_actual, pooled_scores),
    )


def run_transfer_eval(secondary_subjects: list[SubjectSeries],
                      primary_subjects: list[SubjectSeries],
                      model_config: ForestConfig,
                      scaler_kind: ScalerKind = ScalerKind.ROBUST) -> TransferResult:
    """Train once on the secondary cohort, test each primary subject.

    Every primary subject is featurized with a scaler fitted on its own
    hourly totals — the same rule the serving path applies to an upload —
    so unit differences between devices cancel.  Sensitivity comes out
    undefined for subjects with no positive days (the usual case: primary
    participants are healthy).
    """
    unlabeled = [s.subject_id for s in primary_subjects if s.label is None]
    if unlabeled:
        raise ProtocolError(f"primary subjects must be labeled, missing: {unlabeled}")

    train = build_dataset(secondary_subjects, scaler_kind)
    forest = fit_forest(train, model_config)

    matrices, reports, names = [], [], []
    skipped: list[str] = []
    pooled_actual: list[ClassLabel] = []
    pooled_scores: list[float] = []
    for series in sorted(primary_subjects, key=lambda s: s.subject_id):
        rows = featurize_single(series, scaler_kind, train.schema)
        if not rows:
            skipped.append(series.subject_id)
            continue
        scores = predict_scores(forest, np.array([r.values for r in rows], dtype=np.float64))
        predicted = [label_for_score(s) for s in scores]
        actual = [series.label] * len(rows)
        pooled_actual.extend(actual)
        pooled_scores.extend(scores.tolist())
        matrix = confusion(actual, predicted)
        matrices.append(matrix)
        reports.append(metrics_from_confusion(matrix))
        names.append(series.subject_id)

    if not reports:
        raise ProtocolError("every primary subject had zero valid days")
    roc = None
    if len({a for a in pooled_actual}) == 2:
        roc = roc_auc(pooled_actual, pooled_scores)
    return TransferResult(
        forest=EvalSummary("forest-transfer", tuple(names), tuple(matrices), tuple(reports)),
        skipped_subjects=tuple(skipped),
        roc=roc,
    )


def _fmt(value: float | None) -> str:
    return "NA" if value is None else f"{value:.6f}"


def per_iteration_csv(summary: EvalSummary) -> str:
    """One row per fold / pair / subject with counts and metrics."""
    lines = ["protocol,iteration,tp,fn,fp,tn,sensitivity,specificity,accuracy"]
    for name, matrix, report in zip(summary.iterations, summary.matrices, summary.reports):
        lines.append(
            f"{summary.protocol},{name},{matrix.tp},{matrix.fn},{matrix.fp},{matrix.tn},"
            f"{_fmt(report.sensitivity)},{_fmt(report.specificity)},{_fmt(report.accuracy)}"
        )
    return "\n".join(lines) + "\n"


def summary_csv(summaries: list[EvalSummary]) -> str:
    """Mean/SD table with one experiment per row (the reporting layout)."""
    lines = ["experiment,sensitivity_mean,sensitivity_sd,specificity_mean,specificity_sd,"
             "accuracy_mean,accuracy_sd"]
    for summary in summaries:
        cells = [summary.protocol]
        for metric in METRIC_NAMES:
            cells.append(_fmt(summary.mean(metric)))
            cells.append(_fmt(summary.sd(metric)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def roc_csv(roc: RocCurve) -> str:
    lines = ["fpr,tpr,threshold"]
    for fpr, tpr, threshold in roc.points:
        lines.append(f"{fpr!r},{tpr!r},{threshold!r}")
    return "\n".join(lines) + "\n"
