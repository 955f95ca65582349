import type { ActiveSuggestion } from "./controller.js";
import { SuggestionController } from "./controller.js";
import { diffRows, parsePatch } from "./patch.js";
import type { ServiceClient } from "./types.js";

export interface EditorOptions {
  minVisibleMs: number;
  language: string;
  filePath: string;
  onStatus?: (message: string) => void;
}

/** Binds a textarea plus a decoration overlay to the suggestion controller.
 *
 * The textarea holds the buffer; when a suggestion is active the overlay
 * covers the paste region with an inline diff: kept lines tinted, removed
 * lines struck through, inserted lines in grey italics (new lines render as
 * a grey block appended after the line they follow).
 */
export class PlaygroundEditor {
  readonly controller: SuggestionController;

  constructor(
    private readonly textarea: HTMLTextAreaElement,
    private readonly overlay: HTMLElement,
    client: ServiceClient,
    private readonly options: EditorOptions,
  ) {
    this.controller = new SuggestionController(
      {
        client,
        clock: () => performance.now(),
        schedule: (fn, delayMs) => window.setTimeout(fn, delayMs),
        getText: () => this.textarea.value,
        setText: (text) => {
          this.textarea.value = text;
        },
        onRender: (suggestion) => this.renderSuggestion(suggestion),
      },
      {
        minVisibleMs: options.minVisibleMs,
        language: options.language,
        filePath: options.filePath,
      },
    );
    this.bind();
  }

  private bind(): void {
    this.textarea.addEventListener("paste", (event) => {
      const text = event.clipboardData?.getData("text/plain") ?? "";
      if (!text) return;
      event.preventDefault();
      const normalized = text.replace(/\r\n?/g, "\n");
      const offset = this.textarea.selectionStart;
      const caretAfter = offset + normalized.length;
      void this.controller.onPaste(normalized, offset).then(() => {
        this.options.onStatus?.(
          this.controller.active ? "suggestion shown — Tab accepts" : "no suggestion",
        );
      });
      this.textarea.setSelectionRange(caretAfter, caretAfter);
    });

    this.textarea.addEventListener("keydown", (event) => {
      if (!this.controller.active) return;
      if (event.key === "Tab") {
        event.preventDefault();
        this.controller.onKey("Tab");
        this.options.onStatus?.("suggestion accepted");
      } else {
        this.controller.onKey(event.key);
      }
    });

    this.textarea.addEventListener("click", () => this.controller.onCursorMove());
    this.textarea.addEventListener("scroll", () => {
      this.controller.onScroll();
      this.positionOverlay();
    });
  }

  private renderSuggestion(suggestion: ActiveSuggestion | null): void {
    this.overlay.replaceChildren();
    this.overlay.hidden = suggestion === null;
    if (!suggestion) return;

    let rows;
    try {
      rows = diffRows(suggestion.beforeLines, parsePatch(suggestion.patchText));
    } catch {
      rows = suggestion.previewLines.map((text) => ({ kind: "added" as const, text }));
    }
    for (const row of rows) {
      const line = document.createElement("div");
      line.className = `diff-line diff-${row.kind}`;
      line.textContent = row.text || " ";
      this.overlay.appendChild(line);
    }
    this.positionOverlay();
  }

  private positionOverlay(): void {
    const suggestion = this.controller.active;
    if (!suggestion) return;
    const style = window.getComputedStyle(this.textarea);
    const lineHeight = parseFloat(style.lineHeight) || 20;
    const paddingTop = parseFloat(style.paddingTop) || 0;
    const top = paddingTop + suggestion.region.start * lineHeight - this.textarea.scrollTop;
    this.overlay.style.top = `${top}px`;
  }
}
