"""HTTP screening service: upload a step log, get per-day predictions.

One immutable :class:`~actiscreen.model.ModelBundle` is loaded at startup
and shared read-only across requests; an upload is parsed, run through the
per-upload scaling pipeline and discarded, so the service holds no state
between requests.  Responses always carry a non-diagnostic disclaimer —
this is a screening aid, not a diagnosis.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .features import complete_days, featurize_single
from .ingest import ClassLabel, FormatError, ParseError, parse_fitbit_steps
from .model import ModelBundle, bundle_info, label_for_score, load_bundle, predict_scores
from .timeseries import hourly_totals, segment_days

DISCLAIMER = (
    "This screening result is a research prototype output, not a medical "
    "diagnosis. If you are concerned about your mental health, please "
    "contact a qualified clinician."
)

DEFAULT_WINDOW_DAYS = 15
DEFAULT_MAX_UPLOAD_BYTES = 32 * 1024 * 1024


class NoValidDaysUpload(ValueError):
    """The uploaded stream has no day with enough recorded hours."""


@dataclass(frozen=True)
class PredictionRow:
    date: Date
    hours_present: int
    score: float
    label: ClassLabel
    imputed_hours: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "hours_present": self.hours_present,
            "score": self.score,
            "label": self.label.name.capitalize(),
            "imputed_hours": list(self.imputed_hours),
        }


@dataclass(frozen=True)
class ScreeningReport:
    rows: tuple[PredictionRow, ...]  # newest first, at most the window size
    skipped_days: int                # invalid days within the reported window

    def to_json(self, bundle: ModelBundle) -> dict:
        return {
            "model_info": bundle_info(bundle),
            "rows": [row.to_json() for row in self.rows],
            "skipped_days": self.skipped_days,
            "disclaimer": DISCLAIMER,
        }


def screen_series(series, bundle: ModelBundle,
                  window: int = DEFAULT_WINDOW_DAYS) -> ScreeningReport:
    """Score the most recent ``window`` valid days of a minute stream.

    Runs exactly the offline path — :func:`featurize_single` with the
    bundle's scaler kind fitted on this upload's own hourly totals, then
    the forest — so service scores are bitwise equal to offline scores.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    days = complete_days(series)
    if not days:
        raise NoValidDaysUpload(
            "no day in the upload has at least 22 hours of recording"
        )
    vectors = featurize_single(series, bundle.scaler_kind, bundle.feature_schema)
    scores = predict_scores(bundle.forest, np.array([v.values for v in vectors]))

    selected = list(zip(days, scores))[-window:]
    rows = tuple(
        PredictionRow(
            date=day.date,
            hours_present=24 - len(day.imputed_hours),
            score=float(score),
            label=label_for_score(float(score)),
            imputed_hours=tuple(sorted(day.imputed_hours)),
        )
        for day, score in reversed(selected)
    )
    oldest_shown = rows[-1].date
    all_days = segment_days(hourly_totals(series), series.subject_id, series.label)
    skipped = sum(1 for d in all_days if not d.is_valid and d.date >= oldest_shown)
    return ScreeningReport(rows=rows, skipped_days=skipped)


def create_app(bundle: ModelBundle | None = None,
               max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES,
               static_dir: str | Path | None = None) -> FastAPI:
    """Build the service; ``bundle=None`` serves health but 503s the rest."""
    app = FastAPI(title="actiscreen", docs_url=None, redoc_url=None)
    app.state.bundle = bundle
    app.state.max_upload_bytes = max_upload_bytes

    @app.get("/api/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/v1/model")
    def model_metadata(request: Request) -> dict:
        loaded: ModelBundle | None = request.app.state.bundle
        if loaded is None:
            raise HTTPException(status_code=503, detail="no model bundle loaded")
        return bundle_info(loaded)

    @app.post("/api/v1/screen")
    async def screen(request: Request, file: UploadFile,
                     window: int = Query(default=DEFAULT_WINDOW_DAYS, ge=1)) -> JSONResponse:
        loaded: ModelBundle | None = request.app.state.bundle
        if loaded is None:
            raise HTTPException(status_code=503, detail="no model bundle loaded")

        limit = request.app.state.max_upload_bytes
        chunks = bytearray()
        while True:
            chunk = await file.read(1 << 20)
            if not chunk:
                break
            chunks.extend(chunk)
            if len(chunks) > limit:
                raise HTTPException(status_code=413,
                                    detail=f"upload exceeds {limit} bytes")
        try:
            text = bytes(chunks).decode("utf-8")
        except UnicodeDecodeError as err:
            raise HTTPException(status_code=400, detail=f"not UTF-8 text: {err}") from None
        try:
            series = parse_fitbit_steps(text)
        except (FormatError, ParseError) as err:
            raise HTTPException(status_code=400, detail=f"malformed step log: {err}") from None
        try:
            report = screen_series(series, loaded, window=window)
        except NoValidDaysUpload as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        return JSONResponse(report.to_json(loaded))

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="webui")

    return app


def load_bundle_file(path: str | Path) -> ModelBundle:
    return load_bundle(Path(path).read_bytes())
