import type { PasteRegion, ServiceClient, TelemetryEvent, WireSuggestion } from "./types.js";

/** Inclusive 0-based line range, internal form. */
export interface Region {
  start: number;
  end: number;
}

export interface ActiveSuggestion {
  requestId: string;
  region: Region;
  beforeLines: string[];
  previewLines: string[];
  patchText: string;
  shownAt: number;
  dismissScheduled: boolean;
}

export interface ControllerConfig {
  minVisibleMs: number;
  language: string;
  filePath: string;
}

export interface ControllerDeps {
  client: ServiceClient;
  /** Millisecond clock; injectable so tests control time. */
  clock: () => number;
  /** Deferred-callback scheduler; injectable for the same reason. */
  schedule: (fn: () => void, delayMs: number) => void;
  getText: () => string;
  setText: (text: string) => void;
  /** View hook: called with the active suggestion, or null on clear. */
  onRender?: (suggestion: ActiveSuggestion | null) => void;
}

export function lineOfOffset(text: string, offset: number): number {
  let line = 0;
  for (let i = 0; i < offset && i < text.length; i++) {
    if (text[i] === "\n") line += 1;
  }
  return line;
}

function toWireRegion(region: Region): PasteRegion {
  return { start_line: region.start, end_line: region.end };
}

/** Paste-suggestion interaction: one active suggestion at a time, Tab to
 * accept, any other input dismisses — except that dismissal is deferred
 * until the suggestion has been visible for the configured minimum, during
 * which Tab still accepts. Every shown suggestion emits exactly one terminal
 * telemetry event. */
export class SuggestionController {
  active: ActiveSuggestion | null = null;
  private requestCounter = 0;

  constructor(
    private readonly deps: ControllerDeps,
    readonly config: ControllerConfig,
  ) {}

  /** Insert pasted text at a character offset and request a suggestion.
   * Stale responses (a newer paste happened meanwhile) are dropped. */
  async onPaste(text: string, offset: number): Promise<void> {
    if (!text) return;
    if (this.active) {
      this.dismissOrDefer();
    }
    const before = this.deps.getText();
    const clamped = Math.max(0, Math.min(offset, before.length));
    const content = before.slice(0, clamped) + text + before.slice(clamped);
    this.deps.setText(content);

    const region: Region = {
      start: lineOfOffset(content, clamped),
      end: lineOfOffset(content, clamped + text.length - 1),
    };
    this.requestCounter += 1;
    const requestId = `rq${this.requestCounter}`;
    const myTicket = this.requestCounter;
    const pastedAt = this.deps.clock();

    let suggestion: WireSuggestion | null;
    try {
      const response = await this.deps.client.suggest({
        file_path: this.config.filePath,
        language: this.config.language,
        content_after_paste: content,
        region: toWireRegion(region),
        request_id: requestId,
      });
      suggestion = response.suggestion;
    } catch (error) {
      console.debug("suggest failed", error);
      return;
    }
    if (myTicket !== this.requestCounter) return; // a newer paste superseded this one
    if (!suggestion) return;

    if (this.active) {
      // a newer suggestion replaces a lingering one; close it out first
      this.dismissNow(this.active);
    }
    const lines = this.deps.getText().split("\n");
    this.active = {
      requestId,
      region,
      beforeLines: lines.slice(region.start, region.end + 1),
      previewLines: [...suggestion.preview_region_lines],
      patchText: suggestion.patch_text,
      shownAt: this.deps.clock(),
      dismissScheduled: false,
    };
    this.emit({
      kind: "Shown",
      event_id: requestId,
      timestamp: this.deps.clock(),
      region: toWireRegion(region),
      before_text: this.active.beforeLines.join("\n"),
      latency_ms: this.deps.clock() - pastedAt,
    });
    this.render();
  }

  /** Tab accepts; any other key follows the dismissal rules. */
  onKey(key: string): void {
    if (!this.active) return;
    if (key === "Tab") {
      this.accept(this.active);
    } else {
      this.dismissOrDefer();
    }
  }

  onCursorMove(): void {
    if (this.active) this.dismissOrDefer();
  }

  onScroll(): void {
    if (this.active) this.dismissOrDefer();
  }

  private accept(suggestion: ActiveSuggestion): void {
    const lines = this.deps.getText().split("\n");
    const current = lines.slice(suggestion.region.start, suggestion.region.end + 1);
    if (current.join("\n") !== suggestion.beforeLines.join("\n")) {
      // buffer moved under the suggestion; applying would corrupt it
      this.dismissNow(suggestion);
      return;
    }
    lines.splice(
      suggestion.region.start,
      suggestion.region.end - suggestion.region.start + 1,
      ...suggestion.previewLines,
    );
    this.deps.setText(lines.join("\n"));
    this.active = null;
    this.emit({
      kind: "Accepted",
      event_id: suggestion.requestId,
      timestamp: this.deps.clock(),
      region: toWireRegion(suggestion.region),
      before_text: suggestion.beforeLines.join("\n"),
      after_text: suggestion.previewLines.join("\n"),
    });
    this.render();
  }

  private dismissOrDefer(): void {
    const suggestion = this.active;
    if (!suggestion) return;
    const visibleFor = this.deps.clock() - suggestion.shownAt;
    if (visibleFor >= this.config.minVisibleMs) {
      this.dismissNow(suggestion);
      return;
    }
    if (!suggestion.dismissScheduled) {
      suggestion.dismissScheduled = true;
      this.deps.schedule(() => {
        if (this.active === suggestion) {
          this.dismissNow(suggestion);
        }
      }, this.config.minVisibleMs - visibleFor);
    }
  }

  private dismissNow(suggestion: ActiveSuggestion): void {
    if (this.active !== suggestion) return; // already terminal
    this.active = null;
    this.emit({
      kind: "Dismissed",
      event_id: suggestion.requestId,
      timestamp: this.deps.clock(),
      region: toWireRegion(suggestion.region),
      before_text: suggestion.beforeLines.join("\n"),
    });
    this.render();
  }

  private emit(event: TelemetryEvent): void {
    void this.deps.client.telemetry(event);
  }

  private render(): void {
    this.deps.onRender?.(this.active);
  }
}
