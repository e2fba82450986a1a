"""From-scratch random forest with balanced class weights.

Trees are grown greedily on bootstrap samples, minimizing weighted Gini
impurity over a random feature subset per split.  Class weights are the
"balanced" ones computed once on the full training set, so the minority
class carries the same total weighted mass as the majority.

Everything random flows from a single integer seed: tree ``t`` derives its
own splitmix64 stream from ``(seed, t)``, and that stream drives both the
bootstrap draw and every feature-subset shuffle inside the tree.  Fitting
is therefore bit-reproducible and trees could be grown in parallel without
changing the result.  The growth loop is JIT-compiled with numba; a pure
Python tree builder was an order of magnitude too slow for the
cross-validation protocols.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from numba import njit

from .features import SCHEMA_V1, Dataset, FeatureSchema, FeatureVector
from .ingest import ClassLabel
from .scaling import ScalerKind

BUNDLE_FORMAT_VERSION = 1

_UNLIMITED_DEPTH = 1 << 60

_U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = np.uint64(0x94D049BB133111EB)


class TrainingError(ValueError):
    """The training set cannot support a fit (too small or single-class)."""


class SchemaMismatchError(ValueError):
    """A feature vector does not match the model's feature schema."""


class BundleError(ValueError):
    """A model bundle could not be decoded."""

    def __init__(self, message: str, *, fieldname: str | None = None):
        if fieldname is not None:
            message = f"field {fieldname!r}: {message}"
        super().__init__(message)
        self.fieldname = fieldname


class VersionError(BundleError):
    """The bundle declares a format version this code does not know."""


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features: int | None = None   # None -> ceil(sqrt(n_features))
    max_depth: int | None = None      # None -> unlimited
    min_samples_leaf: int = 1
    rng_seed: int = 42


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; ``feature[i] < 0`` marks node i as a leaf.

    Internal nodes route ``x[feature] <= threshold`` to ``left`` else
    ``right``.  ``mass[i]`` holds the bootstrap-weighted class mass that
    reached node i, which at a leaf is the vote.
    """

    feature: np.ndarray    # int64
    threshold: np.ndarray  # float64
    left: np.ndarray       # int64
    right: np.ndarray      # int64
    mass: np.ndarray       # float64, shape (n_nodes, 2)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    config: ForestConfig
    class_weights: tuple[float, float]  # (healthy, depressed)
    schema_version: int
    n_features: int


@dataclass(frozen=True)
class DummyModel:
    """Stratified baseline: predicts positive with the training prevalence."""

    positive_prior: float
    rng_seed: int = 0


@dataclass(frozen=True)
class ModelBundle:
    """Deployable artifact: forest plus the preprocessing it expects."""

    forest: ForestModel
    scaler_kind: ScalerKind
    feature_schema: FeatureSchema
    format_version: int = BUNDLE_FORMAT_VERSION
    training_metadata: dict = field(default_factory=dict)


def balanced_weights(labels) -> dict[ClassLabel, float]:
    """Per-class weights n_total / (2 * n_class); both classes required."""
    labels = list(labels)
    n = len(labels)
    counts = {c: sum(1 for lab in labels if lab == c) for c in ClassLabel}
    if any(count == 0 for count in counts.values()):
        raise TrainingError(f"need both classes to weight, got counts {counts}")
    return {c: n / (2.0 * counts[c]) for c in ClassLabel}


def weighted_gini(mass0: float, mass1: float) -> float:
    """Gini impurity 1 - sum(p_c^2) of a node's weighted class masses."""
    total = mass0 + mass1
    if total <= 0:
        raise ValueError("node mass must be positive")
    p0 = mass0 / total
    p1 = mass1 / total
    return 1.0 - p0 * p0 - p1 * p1


@njit(cache=True)
def _next_u64(state):
    # splitmix64; state is a one-element uint64 array
    state[0] = state[0] + _U64_GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _best_split(X, y, w, rows, feats):
    """Best (feature, threshold, gain) for one node.

    Ties break to the first candidate in (feats order, ascending
    threshold); thresholds are midpoints between consecutive distinct
    sorted values.  Returns feature -1 when no feature admits a split.
    """
    w0 = 0.0
    w1 = 0.0
    for i in range(rows.shape[0]):
        r = rows[i]
        if y[r] == 0:
            w0 += w[r]
        else:
            w1 += w[r]
    total = w0 + w1
    parent = 1.0 - (w0 / total) ** 2 - (w1 / total) ** 2

    best_gain = -1.0
    best_feat = -1
    best_thr = 0.0
    nv = rows.shape[0]
    v = np.empty(nv, np.float64)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(nv):
            v[i] = X[rows[i], f]
        order = np.argsort(v, kind="mergesort")
        l0 = 0.0
        l1 = 0.0
        for i in range(nv - 1):
            r = rows[order[i]]
            if y[r] == 0:
                l0 += w[r]
            else:
                l1 += w[r]
            lo = v[order[i]]
            hi = v[order[i + 1]]
            if lo < hi:
                wl = l0 + l1
                wr = total - wl
                gini_l = 1.0 - (l0 / wl) ** 2 - (l1 / wl) ** 2
                r0 = w0 - l0
                r1 = w1 - l1
                gini_r = 1.0 - (r0 / wr) ** 2 - (r1 / wr) ** 2
                gain = parent - (wl * gini_l + wr * gini_r) / total
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = (lo + hi) / 2.0
    return best_feat, best_thr, best_gain


@njit(cache=True)
def _fit_tree(X, y, class_weight, min_samples_leaf, max_depth, mtry, seed):
    """Bootstrap and grow one tree; returns its flat node arrays."""
    n, d = X.shape
    state = np.empty(1, np.uint64)
    state[0] = seed

    mult = np.zeros(n, np.int64)
    for _ in range(n):
        mult[int(_next_u64(state) % np.uint64(n))] += 1
    w = np.empty(n, np.float64)
    for r in range(n):
        w[r] = mult[r] * class_weight[y[r]]

    m = 0
    for r in range(n):
        if mult[r] > 0:
            m += 1
    work = np.empty(m, np.int64)
    k = 0
    for r in range(n):
        if mult[r] > 0:
            work[k] = r
            k += 1

    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    mass = np.zeros((cap, 2), np.float64)
    stack = np.empty((cap, 4), np.int64)  # node, start, end, depth

    perm = np.empty(d, np.int64)
    n_nodes = 1
    sp = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    stack[0, 3] = 0
    while sp >= 0:
        node = stack[sp, 0]
        start = stack[sp, 1]
        end = stack[sp, 2]
        depth = stack[sp, 3]
        sp -= 1

        m0 = 0.0
        m1 = 0.0
        n_rows = 0
        for i in range(start, end):
            r = work[i]
            if y[r] == 0:
                m0 += w[r]
            else:
                m1 += w[r]
            n_rows += mult[r]
        mass[node, 0] = m0
        mass[node, 1] = m1

        if m0 == 0.0 or m1 == 0.0 or n_rows < 2 * min_samples_leaf or depth >= max_depth:
            continue

        for j in range(d):
            perm[j] = j
        for j in range(mtry):
            pick = j + int(_next_u64(state) % np.uint64(d - j))
            tmp = perm[j]
            perm[j] = perm[pick]
            perm[pick] = tmp

        best_feat, best_thr, _ = _best_split(X, y, w, work[start:end], perm[:mtry])
        if best_feat < 0:
            continue

        i = start
        j = end - 1
        while i <= j:
            if X[work[i], best_feat] <= best_thr:
                i += 1
            else:
                tmp = work[i]
                work[i] = work[j]
                work[j] = tmp
                j -= 1
        mid = i

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        sp += 1
        stack[sp, 0] = right_id
        stack[sp, 1] = mid
        stack[sp, 2] = end
        stack[sp, 3] = depth + 1
        sp += 1
        stack[sp, 0] = left_id
        stack[sp, 1] = start
        stack[sp, 2] = mid
        stack[sp, 3] = depth + 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], mass[:n_nodes])


def find_best_split(X, y, sample_weight, features):
    """Expose the node split search for verification against brute force.

    Returns (feature, threshold, gain) or None when no candidate exists.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    w = np.ascontiguousarray(sample_weight, dtype=np.float64)
    rows = np.arange(X.shape[0], dtype=np.int64)
    feats = np.ascontiguousarray(features, dtype=np.int64)
    f, thr, gain = _best_split(X, y, w, rows, feats)
    if f < 0:
        return None
    return int(f), float(thr), float(gain)


def tree_seed(rng_seed: int, tree_index: int) -> int:
    """Stable 64-bit stream seed for tree ``tree_index`` of a forest."""
    ss = np.random.SeedSequence(entropy=rng_seed, spawn_key=(tree_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def fit_forest(data: Dataset, config: ForestConfig) -> ForestModel:
    """Train a forest on a labeled dataset; deterministic given the seed."""
    if len(data.rows) < 2:
        raise TrainingError(f"need at least 2 rows, got {len(data.rows)}")
    weights = balanced_weights(data.labels)

    X = data.matrix()
    y = np.array([int(lab) for lab in data.labels], dtype=np.int8)
    d = X.shape[1]
    mtry = config.max_features if config.max_features is not None else math.ceil(math.sqrt(d))
    mtry = min(mtry, d)
    max_depth = config.max_depth if config.max_depth is not None else _UNLIMITED_DEPTH
    class_weight = np.array([weights[ClassLabel.HEALTHY], weights[ClassLabel.DEPRESSED]])

    trees = []
    for t in range(config.n_trees):
        arrays = _fit_tree(X, y, class_weight, config.min_samples_leaf,
                           max_depth, mtry, np.uint64(tree_seed(config.rng_seed, t)))
        trees.append(Tree(*arrays))
    return ForestModel(trees=tuple(trees), config=config,
                       class_weights=(float(class_weight[0]), float(class_weight[1])),
                       schema_version=data.schema.version, n_features=d)


def _tree_scores(tree: Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feats = tree.feature[node]
        active = np.nonzero(feats >= 0)[0]
        if active.size == 0:
            break
        rows_feats = feats[active]
        go_left = X[active, rows_feats] <= tree.threshold[node[active]]
        node[active] = np.where(go_left, tree.left[node[active]], tree.right[node[active]])
    mass = tree.mass[node]
    return mass[:, 1] / (mass[:, 0] + mass[:, 1])


def predict_scores(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Mean positive-mass fraction over trees, one score in [0,1] per row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise SchemaMismatchError(
            f"expected shape (n, {model.n_features}), got {X.shape}"
        )
    total = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        total += _tree_scores(tree, X)
    return total / len(model.trees)


def predict_score(model: ForestModel, x: FeatureVector) -> float:
    """Score one feature vector; schema version and width must match."""
    if len(x.values) != model.n_features:
        raise SchemaMismatchError(
            f"vector has {len(x.values)} values, model expects {model.n_features}"
        )
    return float(predict_scores(model, np.array([x.values]))[0])


def label_for_score(score: float) -> ClassLabel:
    return ClassLabel.DEPRESSED if score >= 0.5 else ClassLabel.HEALTHY


def fit_dummy(labels, rng_seed: int = 0) -> DummyModel:
    """Baseline whose prior is the training set's positive prevalence."""
    labels = list(labels)
    if not labels:
        raise TrainingError("need at least one label")
    prior = sum(1 for lab in labels if lab == ClassLabel.DEPRESSED) / len(labels)
    return DummyModel(positive_prior=prior, rng_seed=rng_seed)


def predict_dummy(model: DummyModel, n: int, rng=None) -> list[ClassLabel]:
    """Draw n labels, each positive with probability ``positive_prior``."""
    if rng is None:
        rng = np.random.default_rng(model.rng_seed)
    elif isinstance(rng, int):
        rng = np.random.default_rng(rng)
    draws = rng.random(n) < model.positive_prior
    return [ClassLabel.DEPRESSED if hit else ClassLabel.HEALTHY for hit in draws]


def make_bundle(forest: ForestModel, scaler_kind: ScalerKind,
                schema: FeatureSchema = SCHEMA_V1, dataset_name: str = "unknown",
                n_rows: int = 0, trained_at: str | None = None) -> ModelBundle:
    if schema.version != forest.schema_version:
        raise BundleError(
            f"schema version {schema.version} != forest schema {forest.schema_version}",
            fieldname="feature_schema",
        )
    if trained_at is None:
        trained_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    meta = {"dataset": dataset_name, "rows": n_rows, "trained_at": trained_at}
    return ModelBundle(forest=forest, scaler_kind=scaler_kind, feature_schema=schema,
                       training_metadata=meta)


def save_bundle(bundle: ModelBundle) -> bytes:
    """Serialize to a self-describing, versioned JSON document."""
    cfg = bundle.forest.config
    doc = {
        "format_version": bundle.format_version,
        "feature_schema": {
            "version": bundle.feature_schema.version,
            "bin_boundaries": [list(b) for b in bundle.feature_schema.bin_boundaries],
            "statistic_names": list(bundle.feature_schema.statistic_names),
        },
        "scaler_kind": bundle.scaler_kind.value,
        "config": {
            "n_trees": cfg.n_trees,
            "max_features": cfg.max_features,
            "max_depth": cfg.max_depth,
            "min_samples_leaf": cfg.min_samples_leaf,
            "rng_seed": cfg.rng_seed,
        },
        "class_weights": {"healthy": bundle.forest.class_weights[0],
                          "depressed": bundle.forest.class_weights[1]},
        "n_features": bundle.forest.n_features,
        "training_metadata": bundle.training_metadata,
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "mass": tree.mass.tolist(),
            }
            for tree in bundle.forest.trees
        ],
    }
    return json.dumps(doc).encode("utf-8")


def _get(doc: dict, name: str, kind) -> object:
    try:
        value = doc[name]
    except (KeyError, TypeError):
        raise BundleError("missing", fieldname=name) from None
    if not isinstance(value, kind) or isinstance(value, bool):
        expected = getattr(kind, "__name__", "/".join(k.__name__ for k in kind))
        raise BundleError(f"expected {expected}, got {type(value).__name__}",
                          fieldname=name)
    return value


def load_bundle(data: bytes) -> ModelBundle:
    """Parse bytes from :func:`save_bundle`; rejects unknown versions."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise BundleError(f"not a valid bundle document: {err}") from None
    if not isinstance(doc, dict):
        raise BundleError("bundle document must be an object")

    version = _get(doc, "format_version", int)
    if version != BUNDLE_FORMAT_VERSION:
        raise VersionError(f"unsupported value {version}", fieldname="format_version")

    schema_doc = _get(doc, "feature_schema", dict)
    schema = FeatureSchema(
        version=_get(schema_doc, "version", int),
        bin_boundaries=tuple((int(a), int(b)) for a, b in _get(schema_doc, "bin_boundaries", list)),
        statistic_names=tuple(_get(schema_doc, "statistic_names", list)),
    )
    try:
        scaler_kind = ScalerKind(_get(doc, "scaler_kind", str))
    except ValueError as err:
        raise BundleError(str(err), fieldname="scaler_kind") from None

    cfg_doc = _get(doc, "config", dict)
    for optional in ("max_features", "max_depth"):
        if not isinstance(cfg_doc.get(optional), (int, type(None))):
            raise BundleError("expected int or null", fieldname=f"config.{optional}")
    config = ForestConfig(
        n_trees=_get(cfg_doc, "n_trees", int),
        max_features=cfg_doc.get("max_features"),
        max_depth=cfg_doc.get("max_depth"),
        min_samples_leaf=_get(cfg_doc, "min_samples_leaf", int),
        rng_seed=_get(cfg_doc, "rng_seed", int),
    )
    weights_doc = _get(doc, "class_weights", dict)
    class_weights = (float(_get(weights_doc, "healthy", (int, float))),
                     float(_get(weights_doc, "depressed", (int, float))))
    n_features = _get(doc, "n_features", int)

    trees = []
    for i, tree_doc in enumerate(_get(doc, "trees", list)):
        if not isinstance(tree_doc, dict):
            raise BundleError("expected an object", fieldname=f"trees[{i}]")
        try:
            tree = Tree(
                feature=np.asarray(tree_doc["feature"], dtype=np.int64),
                threshold=np.asarray(tree_doc["threshold"], dtype=np.float64),
                left=np.asarray(tree_doc["left"], dtype=np.int64),
                right=np.asarray(tree_doc["right"], dtype=np.int64),
                mass=np.asarray(tree_doc["mass"], dtype=np.float64).reshape(-1, 2),
            )
        except (KeyError, ValueError, TypeError) as err:
            raise BundleError(f"bad node arrays: {err}", fieldname=f"trees[{i}]") from None
        if tree.feature.max(initial=-1) >= n_features:
            raise BundleError("feature index out of range", fieldname=f"trees[{i}].feature")
        trees.append(tree)
    if not trees:
        raise BundleError("no trees", fieldname="trees")

    forest = ForestModel(trees=tuple(trees), config=config, class_weights=class_weights,
                         schema_version=schema.version, n_features=n_features)
    meta = _get(doc, "training_metadata", dict)
    return ModelBundle(forest=forest, scaler_kind=scaler_kind, feature_schema=schema,
                       format_version=version, training_metadata=meta)


def bundle_info(bundle: ModelBundle) -> dict:
    """Metadata summary used by the service and CLI."""
    return {
        "format_version": bundle.format_version,
        "schema_version": bundle.feature_schema.version,
        "n_features": bundle.forest.n_features,
        "n_trees": len(bundle.forest.trees),
        "scaler_kind": bundle.scaler_kind.value,
        "class_weights": {"healthy": bundle.forest.class_weights[0],
                          "depressed": bundle.forest.class_weights[1]},
        "training_metadata": dict(bundle.training_metadata),
    }
