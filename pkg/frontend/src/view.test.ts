import { describe, expect, it } from "vitest";

import type { PredictionRow, ScreeningResponse } from "./types.js";
import {
  escapeHtml,
  explainFailure,
  renderError,
  renderModelInfo,
  renderResults,
  renderRow,
  renderScoreBar,
  renderSummary,
} from "./view.js";

function row(date: string, score: number, extra: Partial<PredictionRow> = {}): PredictionRow {
  return {
    date,
    hours_present: 24,
    score,
    label: score >= 0.5 ? "Depressed" : "Healthy",
    imputed_hours: [],
    ...extra,
  };
}

function response(rows: PredictionRow[], skipped = 0): ScreeningResponse {
  return {
    model_info: {
      format_version: 1,
      schema_version: 1,
      n_features: 20,
      n_trees: 100,
      scaler_kind: "robust",
      class_weights: { healthy: 0.8, depressed: 1.4 },
      training_metadata: { trained_at: "2024-06-01T00:00:00+00:00" },
    },
    rows,
    skipped_days: skipped,
    disclaimer: "Screening only, not a diagnosis.",
  };
}

describe("renderResults", () => {
  it("renders the rows verbatim in the order received (newest first)", () => {
    const rows = [row("2023-02-03", 0.71), row("2023-02-02", 0.2), row("2023-02-01", 0.52)];
    const html = renderResults(response(rows));
    const first = html.indexOf("2023-02-03");
    const second = html.indexOf("2023-02-02");
    const third = html.indexOf("2023-02-01");
    expect(first).toBeGreaterThan(-1);
    expect(second).toBeGreaterThan(first);
    expect(third).toBeGreaterThan(second);
    // scores appear exactly as served, no recomputation
    expect(html).toContain("0.710");
    expect(html).toContain("0.200");
    expect(html).toContain("0.520");
  });

  it("keeps the disclaimer visible whenever rows are visible", () => {
    const html = renderResults(response([row("2023-02-01", 0.9)]));
    expect(html).toContain("Screening only, not a diagnosis.");
    expect(html.indexOf("disclaimer")).toBeGreaterThan(html.indexOf("<table"));
  });

  it("summarises the count of flagged days out of rows shown", () => {
    const rows = [row("2023-02-03", 0.9), row("2023-02-02", 0.1), row("2023-02-01", 0.6)];
    const html = renderSummary(rows, 0);
    expect(html).toContain("2 of 3 screened days flagged.");
  });

  it("mentions skipped incomplete days when the server reports them", () => {
    const html = renderSummary([row("2023-02-01", 0.4)], 2);
    expect(html).toContain("2 incomplete days");
  });
});

describe("renderRow", () => {
  it("marks flagged rows and shows recorded hours", () => {
    const html = renderRow(row("2023-02-01", 0.84, { hours_present: 23, imputed_hours: [4] }));
    expect(html).toContain("row-flagged");
    expect(html).toContain("<td>23</td>");
    expect(html).toContain("imputed hours: 4");
    expect(html).toContain("Depressed");
  });

  it("renders a score bar with width proportional to the served score", () => {
    const html = renderScoreBar(0.25);
    expect(html).toContain("width:25.0%");
    expect(html).toContain("scorebar-threshold");
  });
});

describe("error states", () => {
  it("explains a 400 as a bad file", () => {
    const text = explainFailure({ kind: "http-error", status: 400, message: "malformed" });
    expect(text).toMatch(/could not be read/);
  });

  it("explains a 422 as not enough complete days", () => {
    const text = explainFailure({ kind: "http-error", status: 422, message: "no valid day" });
    expect(text).toMatch(/enough recorded hours/);
  });

  it("offers a retry only for connection failures", () => {
    const network = renderError({ kind: "network-error", message: "ECONNREFUSED" }, "a.json");
    expect(network).toContain("id=\"retry\"");
    const http = renderError({ kind: "http-error", status: 400, message: "bad" }, "a.json");
    expect(http).not.toContain("id=\"retry\"");
  });

  it("escapes server-provided text", () => {
    const html = renderError(
      { kind: "http-error", status: 400, message: "<script>alert(1)</script>" },
      "<bad>.json",
    );
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("model info line", () => {
  it("summarises a loaded model", () => {
    const html = renderModelInfo(response([]).model_info);
    expect(html).toContain("100 trees");
    expect(html).toContain("robust");
  });

  it("flags a missing model", () => {
    expect(renderModelInfo(null)).toContain("not loaded");
  });
});

describe("escapeHtml", () => {
  it("escapes the five significant characters", () => {
    expect(escapeHtml(`<a href="x">&'`)).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&#39;");
  });
});
