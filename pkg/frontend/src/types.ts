// Wire types of the screening backend (/api/v1/*). The UI renders these
// verbatim and never derives its own numbers from activity data.

export interface PredictionRow {
  date: string; // ISO date
  hours_present: number;
  score: number; // [0, 1]; >= 0.5 means flagged
  label: "Healthy" | "Depressed";
  imputed_hours: number[];
}

export interface ModelInfo {
  format_version: number;
  schema_version: number;
  n_features: number;
  n_trees: number;
  scaler_kind: string;
  class_weights: Record<string, number>;
  training_metadata: Record<string, unknown>;
}

export interface ScreeningResponse {
  model_info: ModelInfo;
  rows: PredictionRow[];
  skipped_days: number;
  disclaimer: string;
}

export type UploadState =
  | { phase: "idle" }
  | { phase: "uploading"; filename: string }
  | { phase: "done"; filename: string; response: ScreeningResponse }
  | { phase: "error"; filename: string; outcome: FailureOutcome };

export type ScreenOutcome =
  | { kind: "ok"; response: ScreeningResponse }
  | FailureOutcome;

export type FailureOutcome =
  | { kind: "http-error"; status: number; message: string }
  | { kind: "network-error"; message: string };
