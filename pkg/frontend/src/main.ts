import { fetchModelInfo, screenFile } from "./api.js";
import type { UploadState } from "./types.js";
import { renderError, renderModelInfo, renderResults, renderUploading } from "./view.js";

let state: UploadState = { phase: "idle" };
let lastFile: File | null = null;

const resultsEl = document.getElementById("results") as HTMLElement;
const dropEl = document.getElementById("drop-zone") as HTMLElement;
const inputEl = document.getElementById("file-input") as HTMLInputElement;
const modelEl = document.getElementById("model-info") as HTMLElement;

function render(): void {
  switch (state.phase) {
    case "idle":
      resultsEl.innerHTML = "";
      break;
    case "uploading":
      resultsEl.innerHTML = renderUploading(state.filename);
      break;
    case "done":
      resultsEl.innerHTML = renderResults(state.response);
      break;
    case "error": {
      resultsEl.innerHTML = renderError(state.outcome, state.filename);
      const retry = document.getElementById("retry");
      if (retry && lastFile) {
        retry.addEventListener("click", () => void submit(lastFile as File));
      }
      break;
    }
  }
  dropEl.classList.toggle("busy", state.phase === "uploading");
}

async function submit(file: File): Promise<void> {
  if (state.phase === "uploading") {
    return; // one in-flight upload at a time
  }
  lastFile = file;
  state = { phase: "uploading", filename: file.name };
  render();
  const outcome = await screenFile(file);
  state = outcome.kind === "ok"
    ? { phase: "done", filename: file.name, response: outcome.response }
    : { phase: "error", filename: file.name, outcome };
  render();
}

inputEl.addEventListener("change", () => {
  const file = inputEl.files?.[0];
  if (file) {
    void submit(file);
    inputEl.value = "";
  }
});

dropEl.addEventListener("dragover", (event) => {
  event.preventDefault();
  dropEl.classList.add("dragging");
});
dropEl.addEventListener("dragleave", () => dropEl.classList.remove("dragging"));
dropEl.addEventListener("drop", (event) => {
  event.preventDefault();
  dropEl.classList.remove("dragging");
  const file = event.dataTransfer?.files?.[0];
  if (file) {
    void submit(file);
  }
});

void fetchModelInfo().then((info) => {
  modelEl.innerHTML = renderModelInfo(info);
});

render();
