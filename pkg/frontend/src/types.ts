/** Wire types shared with the suggestion service (field names match the API). */

export interface PasteRegion {
  start_line: number;
  end_line: number;
}

export interface SuggestRequest {
  file_path: string;
  language: string;
  content_after_paste: string;
  region: PasteRegion;
  request_id: string;
}

export interface WireSuggestion {
  patch_text: string;
  preview_region_lines: string[];
  score: number | null;
}

export interface SuggestResponse {
  suggestion: WireSuggestion | null;
  engine_latency_ms: number;
  model_latency_ms: number;
  request_id: string;
}

export type TelemetryKind = "Shown" | "Accepted" | "Dismissed";

export interface TelemetryEvent {
  kind: TelemetryKind;
  event_id: string;
  timestamp: number;
  region: PasteRegion;
  before_text: string;
  after_text?: string;
  latency_ms?: number;
}

export interface ServiceClient {
  suggest(request: SuggestRequest): Promise<SuggestResponse>;
  telemetry(event: TelemetryEvent): Promise<void>;
}
