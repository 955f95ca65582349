import { HttpServiceClient } from "./client.js";
import { PlaygroundEditor } from "./editor.js";

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing #${id}`);
  return element as T;
}

const textarea = byId<HTMLTextAreaElement>("editor");
const overlay = byId<HTMLDivElement>("overlay");
const endpoint = byId<HTMLInputElement>("endpoint");
const language = byId<HTMLSelectElement>("language");
const status = byId<HTMLSpanElement>("status");

function boot(): PlaygroundEditor {
  const client = new HttpServiceClient(endpoint.value.replace(/\/$/, ""));
  return new PlaygroundEditor(textarea, overlay, client, {
    minVisibleMs: 2000,
    language: language.value,
    filePath: `playground.${language.value}`,
    onStatus: (message) => {
      status.textContent = message;
    },
  });
}

let editor = boot();

function reboot(): void {
  overlay.replaceChildren();
  overlay.hidden = true;
  editor = boot();
  status.textContent = "reconnected";
}

endpoint.addEventListener("change", reboot);
language.addEventListener("change", reboot);

textarea.value = [
  "import os",
  "",
  "def main():",
  "    print('paste below, then Tab to accept the suggestion')",
  "",
].join("\n");

export { editor };
