import { afterEach, describe, expect, it, vi } from "vitest";

import { fetchModelInfo, screenFile } from "./api.js";
import type { ScreeningResponse } from "./types.js";

const okBody: ScreeningResponse = {
  model_info: {
    format_version: 1,
    schema_version: 1,
    n_features: 20,
    n_trees: 10,
    scaler_kind: "robust",
    class_weights: { healthy: 1, depressed: 1 },
    training_metadata: {},
  },
  rows: [
    { date: "2023-02-02", hours_present: 24, score: 0.61, label: "Depressed", imputed_hours: [] },
    { date: "2023-02-01", hours_present: 22, score: 0.18, label: "Healthy", imputed_hours: [0, 5] },
  ],
  skipped_days: 1,
  disclaimer: "not a diagnosis",
};

function file(): File {
  return new File(["[]"], "steps.json", { type: "application/json" });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("screenFile", () => {
  it("posts the file as multipart form field 'file' and returns the body untouched", async () => {
    const fetchMock = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      expect(String(url)).toBe("/api/v1/screen");
      expect(init?.method).toBe("POST");
      const form = init?.body as FormData;
      expect(form.get("file")).toBeInstanceOf(File);
      return new Response(JSON.stringify(okBody), { status: 200 });
    });
    vi.stubGlobal("fetch", fetchMock);

    const outcome = await screenFile(file());
    expect(outcome.kind).toBe("ok");
    if (outcome.kind === "ok") {
      // contract: the client performs no computation on the payload
      expect(outcome.response).toEqual(okBody);
    }
    expect(fetchMock).toHaveBeenCalledTimes(1);
  });

  it("maps a 422 to an http-error with the server's detail", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      new Response(JSON.stringify({ detail: "no day has 22 hours" }), { status: 422 })));
    const outcome = await screenFile(file());
    expect(outcome).toEqual({ kind: "http-error", status: 422, message: "no day has 22 hours" });
  });

  it("maps a thrown fetch to a network-error", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("Failed to fetch");
    }));
    const outcome = await screenFile(file());
    expect(outcome.kind).toBe("network-error");
  });

  it("survives a non-JSON error body", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      new Response("<html>proxy error</html>", { status: 502, statusText: "Bad Gateway" })));
    const outcome = await screenFile(file());
    expect(outcome).toEqual({ kind: "http-error", status: 502, message: "Bad Gateway" });
  });
});

describe("fetchModelInfo", () => {
  it("returns the parsed body on 200", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      new Response(JSON.stringify(okBody.model_info), { status: 200 })));
    expect(await fetchModelInfo()).toEqual(okBody.model_info);
  });

  it("returns null on 503 or network failure", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response("{}", { status: 503 })));
    expect(await fetchModelInfo()).toBeNull();
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new Error("down");
    }));
    expect(await fetchModelInfo()).toBeNull();
  });
});
