import { describe, expect, it } from "vitest";

import { parseItems, ParseError } from "../src/parse";

describe("parseItems plain-text grammar", () => {
  it("splits title and context on the separator", () => {
    expect(parseItems("Results | The outcome agrees.")).toEqual([
      { section_title: "Results", context: "The outcome agrees." },
    ]);
  });

  it("treats lines without a separator as untitled", () => {
    expect(parseItems("Just a sentence.")).toEqual([
      { section_title: null, context: "Just a sentence." },
    ]);
  });

  it("handles several lines and skips blank ones", () => {
    const items = parseItems("Methods | We applied X.\n\nAnother sentence.\n");
    expect(items).toHaveLength(2);
    expect(items[1]).toEqual({ section_title: null, context: "Another sentence." });
  });

  it("rejects empty input and empty contexts with line numbers", () => {
    expect(() => parseItems("  \n ")).toThrowError(ParseError);
    expect(() => parseItems("ok line\nResults | ")).toThrowError(/line 2/);
  });

  it("an empty title before the separator becomes null", () => {
    expect(parseItems(" | bare context")).toEqual([{ section_title: null, context: "bare context" }]);
  });
});

describe("parseItems JSON grammar", () => {
  it("accepts objects", () => {
    const items = parseItems('[{"section_title": "Results", "context": "ctx"}]');
    expect(items).toEqual([{ section_title: "Results", context: "ctx" }]);
  });

  it("accepts [title, context] pairs and null titles", () => {
    const items = parseItems('[["Methods", "a"], [null, "b"]]');
    expect(items).toEqual([
      { section_title: "Methods", context: "a" },
      { section_title: null, context: "b" },
    ]);
  });

  it("reports malformed JSON as a validation message", () => {
    expect(() => parseItems("[{not json")).toThrowError(/invalid JSON/);
  });

  it("rejects items without a usable context", () => {
    expect(() => parseItems('[{"section_title": "x"}]')).toThrowError(/item 1/);
    expect(() => parseItems('[["only-one"]]')).toThrowError(/expected \[title, context\]/);
    expect(() => parseItems("[]")).toThrowError(/non-empty/);
  });
});
