/**
 * Paste-box grammar for entering citation sentences.
 *
 * Plain-text form, one item per line:
 *   Results | The outcome agrees with earlier findings.
 *   An untitled citation sentence.
 * Everything before the first " | " is the section title; a line without the
 * separator is an untitled context.
 *
 * Alternatively a JSON array can be pasted: either objects with
 * {"section_title": ..., "context": ...} or two-element [title, context]
 * arrays.
 */

import type { ClassifyItem } from "./types";

export class ParseError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ParseError";
  }
}

const SEPARATOR = " | ";

function fromJsonEntry(entry: unknown, position: number): ClassifyItem {
  if (Array.isArray(entry)) {
    if (entry.length !== 2) {
      throw new ParseError(`item ${position}: expected [title, context]`);
    }
    const [title, context] = entry;
    if (typeof context !== "string" || context.trim() === "") {
      throw new ParseError(`item ${position}: context must be a non-empty string`);
    }
    return { section_title: title == null ? null : String(title), context };
  }
  if (entry && typeof entry === "object") {
    const record = entry as Record<string, unknown>;
    const context = record["context"];
    if (typeof context !== "string" || context.trim() === "") {
      throw new ParseError(`item ${position}: context must be a non-empty string`);
    }
    const title = record["section_title"];
    return { section_title: title == null ? null : String(title), context };
  }
  throw new ParseError(`item ${position}: expected an object or a [title, context] pair`);
}

export function parseItems(raw: string): ClassifyItem[] {
  const trimmed = raw.trim();
  if (trimmed === "") {
    throw new ParseError("enter at least one citation sentence");
  }

  if (trimmed.startsWith("[")) {
    let parsed: unknown;
    try {
      parsed = JSON.parse(trimmed);
    } catch (err) {
      throw new ParseError(`invalid JSON: ${(err as Error).message}`);
    }
    if (!Array.isArray(parsed) || parsed.length === 0) {
      throw new ParseError("JSON input must be a non-empty array of items");
    }
    return parsed.map((entry, i) => fromJsonEntry(entry, i + 1));
  }

  const items: ClassifyItem[] = [];
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i += 1) {
    const line = lines[i] ?? "";
    if (line.trim() === "") continue;
    // find the separator before trimming: a line ending in " | " means an
    // intentional (and empty, hence invalid) context
    const cut = line.indexOf(SEPARATOR);
    if (cut >= 0) {
      const title = line.slice(0, cut).trim();
      const context = line.slice(cut + SEPARATOR.length).trim();
      if (context === "") {
        throw new ParseError(`line ${i + 1}: empty context after the title separator`);
      }
      items.push({ section_title: title === "" ? null : title, context });
    } else {
      items.push({ section_title: null, context: line.trim() });
    }
  }
  if (items.length === 0) {
    throw new ParseError("enter at least one citation sentence");
  }
  return items;
}
