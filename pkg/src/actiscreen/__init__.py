"""Actigraphy-based depression screening pipeline.

Stages: raw device files -> minute streams (`ingest`) -> per-day hourly
grids (`timeseries`) -> per-device scaling (`scaling`) -> day feature
vectors (`features`) -> random forest + baseline (`model`) -> validation
protocols (`evaluation`) -> HTTP service (`serve`) and CLI (`cli`).
"""

from .ingest import (
    ClassLabel,
    DeviceKind,
    MinuteRecord,
    SubjectSeries,
    load_depresjon_dataset,
    parse_depresjon_activity,
    parse_fitbit_steps,
)
from .timeseries import CompleteDay, DayRecord, HourCell, hourly_totals, impute_day, segment_days
from .scaling import ScalerKind, ScalerParams, apply_scaler, fit_scaler, qq_points
from .features import (
    SCHEMA_V1,
    Dataset,
    FeatureSchema,
    FeatureVector,
    build_dataset,
    day_features,
    featurize_single,
)
from .model import (
    DummyModel,
    ForestConfig,
    ForestModel,
    ModelBundle,
    balanced_weights,
    fit_dummy,
    fit_forest,
    load_bundle,
    make_bundle,
    predict_dummy,
    predict_score,
    save_bundle,
)
from .evaluation import (
    ConfusionMatrix,
    EvalSummary,
    MetricsReport,
    RocCurve,
    confusion,
    make_pairs,
    roc_auc,
    run_cv5,
    run_pair_loocv,
    run_transfer_eval,
    stratified_kfold,
)
from .serve import DISCLAIMER, create_app, screen_series

__version__ = "0.1.0"
