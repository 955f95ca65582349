import type { ServiceClient, SuggestRequest, SuggestResponse, TelemetryEvent } from "./types.js";

/** fetch-based client for the suggestion service endpoints. */
export class HttpServiceClient implements ServiceClient {
  constructor(private readonly baseUrl: string) {}

  async suggest(request: SuggestRequest): Promise<SuggestResponse> {
    const response = await fetch(`${this.baseUrl}/v1/suggest`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) {
      throw new Error(`suggest failed: ${response.status}`);
    }
    return (await response.json()) as SuggestResponse;
  }

  async telemetry(event: TelemetryEvent): Promise<void> {
    // Telemetry is fire-and-forget; a dead sink must never break the editor.
    try {
      await fetch(`${this.baseUrl}/v1/telemetry`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(event),
      });
    } catch (error) {
      console.debug("telemetry dropped", error);
    }
  }
}
