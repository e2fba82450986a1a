"""Per-device normalization of hourly activity and Q-Q diagnostics.

Activity units differ across device families (accelerometer counts versus
step counts), so hourly totals are rescaled per device before features are
computed.  Two scalers are supported: min-max to [0, 1] and a robust
median/IQR scaler.  The robust scaler is exactly invariant to positive
affine unit changes, which is what makes a model trained on one device
usable on another.

All quantiles in this package are linear-interpolation quantiles and go
through :func:`linear_quantile` so every consumer agrees on the method.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class ScalerKind(Enum):
    MINMAX = "minmax"
    ROBUST = "robust"


class FitError(ValueError):
    """A scaler was fitted on an empty sample."""


@dataclass(frozen=True)
class ScalerParams:
    """Fitted scaler state: (min, max) for minmax, (median, iqr) for robust."""

    kind: ScalerKind
    minimum: float | None = None
    maximum: float | None = None
    median: float | None = None
    iqr: float | None = None

    def __post_init__(self):
        if self.kind is ScalerKind.MINMAX:
            if self.minimum is None or self.maximum is None or self.maximum < self.minimum:
                raise ValueError(f"bad minmax params: min={self.minimum} max={self.maximum}")
        else:
            if self.median is None or self.iqr is None or self.iqr < 0:
                raise ValueError(f"bad robust params: median={self.median} iqr={self.iqr}")


@dataclass(frozen=True)
class QQSeries:
    """Paired quantiles of two samples at shared levels."""

    levels: tuple[float, ...]
    points: tuple[tuple[float, float], ...]  # (quantile_a, quantile_b) per level


def linear_quantile(values, q):
    """Linear-interpolation quantile(s) of a 1-D sample."""
    return np.quantile(np.asarray(values, dtype=np.float64), q, method="linear")


def fit_scaler(kind: ScalerKind, values) -> ScalerParams:
    """Fit scaler parameters on a non-empty sample of reals."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise FitError("cannot fit a scaler on an empty sample")
    if kind is ScalerKind.MINMAX:
        return ScalerParams(kind=kind, minimum=float(arr.min()), maximum=float(arr.max()))
    q1, med, q3 = (float(x) for x in linear_quantile(arr, [0.25, 0.5, 0.75]))
    return ScalerParams(kind=kind, median=med, iqr=q3 - q1)


def apply_scaler(params: ScalerParams, x):
    """Transform a value (or array) with fitted parameters, no clamping.

    Degenerate fits are handled as: constant minmax sample -> 0, zero IQR
    -> centered value.  Out-of-range inputs pass through the same formula;
    trees downstream only care about order.
    """
    x = np.asarray(x, dtype=np.float64)
    if params.kind is ScalerKind.MINMAX:
        span = params.maximum - params.minimum
        if span == 0:
            out = np.zeros_like(x)
        else:
            out = (x - params.minimum) / span
    else:
        if params.iqr == 0:
            out = x - params.median
        else:
            out = (x - params.median) / params.iqr
    return float(out) if out.ndim == 0 else out


DEFAULT_QQ_LEVELS = tuple(np.round(np.arange(1, 100) / 100.0, 2))


def qq_points(sample_a, sample_b, levels=None) -> QQSeries:
    """Pair the two samples' quantiles at each level (default 1%..99%)."""
    if levels is None:
        levels = DEFAULT_QQ_LEVELS
    levels = tuple(float(q) for q in levels)
    if not levels or any(not 0 < q < 1 for q in levels):
        raise ValueError("levels must lie strictly inside (0, 1)")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise FitError("both samples must be non-empty")
    qa = linear_quantile(a, levels)
    qb = linear_quantile(b, levels)
    return QQSeries(levels=levels, points=tuple(zip(map(float, qa), map(float, qb))))


def qq_to_csv(qq: QQSeries) -> str:
    """Export as (level, quantile_a, quantile_b) rows for external plotting."""
    lines = ["level,quantile_a,quantile_b"]
    for level, (qa, qb) in zip(qq.levels, qq.points):
        lines.append(f"{level:.6f},{qa!r},{qb!r}")
    return "\n".join(lines) + "\n"


def pearson_correlation(xs, ys) -> float:
    """Plain Pearson correlation of two equal-length sequences."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    sx = x.std()
    sy = y.std()
    if sx == 0 or sy == 0:
        return float("nan")
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def concordance_correlation(xs, ys) -> float:
    """Lin's concordance correlation: agreement with the identity line.

    Unlike Pearson correlation this is sensitive to scale and offset, so it
    can tell apart scalings that align two distributions from ones that
    merely keep them linearly related.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    mx, my = x.mean(), y.mean()
    vx, vy = x.var(), y.var()
    cov = ((x - mx) * (y - my)).mean()
    denom = vx + vy + (mx - my) ** 2
    if denom == 0:
        return float("nan")
    return float(2.0 * cov / denom)
