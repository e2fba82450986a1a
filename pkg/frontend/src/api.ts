import type { ModelInfo, ScreenOutcome, ScreeningResponse } from "./types.js";

async function errorMessage(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the status text
  }
  return res.statusText || `HTTP ${res.status}`;
}

/** POST one step-log file to the screening endpoint. Never throws. */
export async function screenFile(file: File, baseUrl = ""): Promise<ScreenOutcome> {
  const form = new FormData();
  form.append("file", file);
  let res: Response;
  try {
    res = await fetch(`${baseUrl}/api/v1/screen`, { method: "POST", body: form });
  } catch (err) {
    return { kind: "network-error", message: String(err) };
  }
  if (!res.ok) {
    return { kind: "http-error", status: res.status, message: await errorMessage(res) };
  }
  try {
    return { kind: "ok", response: (await res.json()) as ScreeningResponse };
  } catch (err) {
    return { kind: "network-error", message: `unreadable response: ${String(err)}` };
  }
}

export async function fetchModelInfo(baseUrl = ""): Promise<ModelInfo | null> {
  try {
    const res = await fetch(`${baseUrl}/api/v1/model`);
    if (!res.ok) {
      return null;
    }
    return (await res.json()) as ModelInfo;
  } catch {
    return null;
  }
}
