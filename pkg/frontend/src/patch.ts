/** Minimal reader for the service's hunk wire format, for diff rendering.
 *
 * Grammar per hunk: a header line `@@ <start> @@` (0-based offset relative to
 * the first pasted line) followed by `-` lines then `+` lines.
 */

export interface Hunk {
  start: number;
  removed: string[];
  added: string[];
}

const HEADER = /^@@ (\d+) @@$/;

export function parsePatch(text: string): Hunk[] {
  if (!text.trim()) return [];
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") lines.pop();
  const hunks: Hunk[] = [];
  let i = 0;
  while (i < lines.length) {
    const header = HEADER.exec(lines[i]);
    if (!header) throw new Error(`expected hunk header at line ${i + 1}`);
    i += 1;
    const hunk: Hunk = { start: Number(header[1]), removed: [], added: [] };
    while (i < lines.length && lines[i].startsWith("-")) {
      hunk.removed.push(lines[i].slice(1));
      i += 1;
    }
    while (i < lines.length && lines[i].startsWith("+")) {
      hunk.added.push(lines[i].slice(1));
      i += 1;
    }
    if (hunk.removed.length === 0 && hunk.added.length === 0) {
      throw new Error(`empty hunk at line ${i + 1}`);
    }
    hunks.push(hunk);
  }
  return hunks;
}

export type DiffRowKind = "kept" | "removed" | "added";

export interface DiffRow {
  kind: DiffRowKind;
  text: string;
}

/** Flatten region lines + hunks into display rows: removed lines struck
 * through in place, added lines right after the run they replace. */
export function diffRows(regionLines: string[], hunks: Hunk[]): DiffRow[] {
  const rows: DiffRow[] = [];
  let cursor = 0;
  for (const hunk of hunks) {
    while (cursor < hunk.start && cursor < regionLines.length) {
      rows.push({ kind: "kept", text: regionLines[cursor] });
      cursor += 1;
    }
    for (const line of hunk.removed) {
      rows.push({ kind: "removed", text: line });
    }
    for (const line of hunk.added) {
      rows.push({ kind: "added", text: line });
    }
    cursor += hunk.removed.length;
  }
  while (cursor < regionLines.length) {
    rows.push({ kind: "kept", text: regionLines[cursor] });
    cursor += 1;
  }
  return rows;
}
