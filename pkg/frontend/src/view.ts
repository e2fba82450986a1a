// Pure HTML renderers. Everything shown comes verbatim from the backend
// response; the only arithmetic here is presentation (bar widths, counts
// of rows already labeled by the server).

import type { FailureOutcome, ModelInfo, PredictionRow, ScreeningResponse } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderScoreBar(score: number): string {
  const percent = (score * 100).toFixed(1);
  return (
    `<div class="scorebar" role="img" aria-label="score ${score.toFixed(3)}">` +
    `<div class="scorebar-fill" style="width:${percent}%"></div>` +
    `<div class="scorebar-threshold"></div>` +
    `</div>`
  );
}

export function renderRow(row: PredictionRow): string {
  const flagged = row.label === "Depressed";
  const imputed = row.imputed_hours.length
    ? ` title="imputed hours: ${row.imputed_hours.join(", ")}"`
    : "";
  return (
    `<tr class="${flagged ? "row-flagged" : "row-clear"}">` +
    `<td${imputed}>${escapeHtml(row.date)}</td>` +
    `<td>${row.hours_present}</td>` +
    `<td>${escapeHtml(row.label)}</td>` +
    `<td>${renderScoreBar(row.score)}<span class="score-number">${row.score.toFixed(3)}</span></td>` +
    `</tr>`
  );
}

export function renderSummary(rows: PredictionRow[], skippedDays: number): string {
  const flagged = rows.filter((r) => r.label === "Depressed").length;
  const skipped = skippedDays > 0
    ? ` ${skippedDays} incomplete day${skippedDays === 1 ? "" : "s"} in this window were skipped.`
    : "";
  return (
    `<p class="summary">${flagged} of ${rows.length} screened day` +
    `${rows.length === 1 ? "" : "s"} flagged.${skipped}</p>`
  );
}

export function renderDisclaimer(text: string): string {
  return `<p class="disclaimer">${escapeHtml(text)}</p>`;
}

/** Rows arrive newest first from the server and are rendered as-is. */
export function renderResults(response: ScreeningResponse): string {
  const body = response.rows.map(renderRow).join("");
  return (
    renderSummary(response.rows, response.skipped_days) +
    `<table class="results">` +
    `<thead><tr><th>date</th><th>hours recorded</th><th>status</th>` +
    `<th>score (marker at 0.5)</th></tr></thead>` +
    `<tbody>${body}</tbody></table>` +
    renderDisclaimer(response.disclaimer)
  );
}

export function explainFailure(outcome: FailureOutcome): string {
  if (outcome.kind === "network-error") {
    return "Could not reach the screening service. Check that the backend is running, then retry.";
  }
  if (outcome.status === 400) {
    return "That file could not be read as a step-count export. Upload the JSON step log downloaded from your account.";
  }
  if (outcome.status === 422) {
    return "The file parsed, but no day had enough recorded hours (at least 22 of 24) to screen.";
  }
  if (outcome.status === 413) {
    return "The file is larger than the service accepts.";
  }
  if (outcome.status === 503) {
    return "The service has no model loaded yet. Try again once it has started up fully.";
  }
  return `The service rejected the upload (HTTP ${outcome.status}).`;
}

export function renderError(outcome: FailureOutcome, filename: string): string {
  const retry = outcome.kind === "network-error"
    ? `<button type="button" id="retry">Retry upload</button>`
    : "";
  return (
    `<div class="error-banner">` +
    `<p>${escapeHtml(explainFailure(outcome))}</p>` +
    `<p class="error-detail">${escapeHtml(filename)}: ${escapeHtml(outcome.message)}</p>` +
    retry +
    `</div>`
  );
}

export function renderUploading(filename: string): string {
  return `<p class="progress">Screening ${escapeHtml(filename)} &hellip;</p>`;
}

export function renderModelInfo(info: ModelInfo | null): string {
  if (info === null) {
    return `<span class="model-info model-missing">model: not loaded</span>`;
  }
  const trained = info.training_metadata?.["trained_at"];
  const suffix = typeof trained === "string" ? `, trained ${escapeHtml(trained)}` : "";
  return (
    `<span class="model-info">model: ${info.n_trees} trees, ` +
    `${escapeHtml(info.scaler_kind)} scaling, schema v${info.schema_version}${suffix}</span>`
  );
}
