import { describe, expect, it } from "vitest";

import type { FetchLike } from "../src/api";
import { clampThreshold, UiSession } from "../src/session";
import type { ClassifyResponse } from "../src/types";

function bodyFor(contexts: string[], threshold: number, mode = "mixed"): string {
  const results = contexts.map((context) => ({
    section_title: null,
    context,
    setting: "WoS",
    experts: [],
    meta_probabilities: { Method: 0.5, Background: 0.3, Result: 0.2 },
    predicted_class: "Method",
    reliable: false,
    cito_iri: "http://purl.org/spar/cito/citesForInformation",
  }));
  return JSON.stringify({ mode, threshold, results });
}

function immediateFetch(bodies: string[]): { fetchImpl: FetchLike; requests: unknown[] } {
  const requests: unknown[] = [];
  let call = 0;
  const fetchImpl: FetchLike = async (_url, init) => {
    requests.push(JSON.parse(init!.body as string));
    const body = bodies[Math.min(call, bodies.length - 1)]!;
    call += 1;
    return new Response(body, { status: 200 });
  };
  return { fetchImpl, requests };
}

describe("clampThreshold", () => {
  it("constrains values to (0, 1]", () => {
    expect(clampThreshold(0)).toBe(0.01);
    expect(clampThreshold(-3)).toBe(0.01);
    expect(clampThreshold(0.42)).toBe(0.42);
    expect(clampThreshold(1)).toBe(1);
    expect(clampThreshold(7)).toBe(1);
    expect(clampThreshold(Number.NaN)).toBe(0.01);
  });
});

describe("UiSession", () => {
  it("round-trips the threshold through the request body", async () => {
    const { fetchImpl, requests } = immediateFetch([bodyFor(["a"], 0.65)]);
    const session = new UiSession("http://svc", fetchImpl);
    session.rawItems = "a";
    session.setThreshold(0.65);
    expect(await session.submit()).toBe(true);
    expect((requests[0] as { threshold: number }).threshold).toBe(0.65);
    // and the applied threshold shown to the user is the service's echo
    expect(session.lastClassify!.payload.threshold).toBe(0.65);
  });

  it("keeps the exact bytes for download", async () => {
    const body = bodyFor(["sentence one"], 0.9);
    const { fetchImpl } = immediateFetch([body]);
    const session = new UiSession("http://svc", fetchImpl);
    session.rawItems = "sentence one";
    await session.submit();
    expect(session.canDownload).toBe(true);
    expect(session.downloadBody()).toBe(body);
    // byte-identical on repeated downloads
    expect(session.downloadBody()).toBe(session.downloadBody());
  });

  it("refuses to download before any response", () => {
    const session = new UiSession("http://svc", immediateFetch([bodyFor(["x"], 0.9)]).fetchImpl);
    expect(session.canDownload).toBe(false);
    expect(() => session.downloadBody()).toThrowError(/nothing to download/);
  });

  it("reports client-side validation without calling the service", async () => {
    const { fetchImpl, requests } = immediateFetch([bodyFor(["x"], 0.9)]);
    const session = new UiSession("http://svc", fetchImpl);
    session.rawItems = "   ";
    expect(await session.submit()).toBe(false);
    expect(session.error).toMatch(/at least one citation sentence/);
    expect(requests).toHaveLength(0);
  });

  it("shows an error banner state when the service is unreachable", async () => {
    const failing: FetchLike = async () => {
      throw new Error("connection refused");
    };
    const session = new UiSession("http://svc", failing);
    session.rawItems = "a sentence";
    expect(await session.submit()).toBe(false);
    expect(session.error).toMatch(/unreachable/);
    expect(session.lastClassify).toBeNull(); // no partial table
  });

  it("discards stale responses by request number", async () => {
    // first request resolves after the second: the slow body must not win
    let release1: (r: Response) => void = () => {};
    const slow = new Promise<Response>((resolve) => (release1 = resolve));
    let call = 0;
    const fetchImpl: FetchLike = (_url, _init) => {
      call += 1;
      if (call === 1) return slow;
      return Promise.resolve(new Response(bodyFor(["second"], 0.9), { status: 200 }));
    };
    const session = new UiSession("http://svc", fetchImpl);
    session.rawItems = "first";
    const first = session.submit();
    session.rawItems = "second";
    const second = session.submit();
    expect(await second).toBe(true);
    release1(new Response(bodyFor(["first"], 0.9), { status: 200 }));
    expect(await first).toBe(false); // stale, discarded
    const payload = session.lastClassify!.payload as ClassifyResponse;
    expect(payload.results[0]!.context).toBe("second");
  });

  it("explains the last classified items with the same mode and threshold", async () => {
    const classifyBody = bodyFor(["ctx one"], 0.8, "with_sections");
    const explainBody = JSON.stringify({ mode: "with_sections", threshold: 0.8, results: [] });
    const { fetchImpl, requests } = immediateFetch([classifyBody, explainBody]);
    const session = new UiSession("http://svc", fetchImpl);
    session.rawItems = "ctx one";
    session.mode = "with_sections";
    session.setThreshold(0.8);
    await session.submit();
    expect(await session.explain()).toBe(true);
    const explainRequest = requests[1] as { mode: string; threshold: number; items: unknown[] };
    expect(explainRequest.mode).toBe("with_sections");
    expect(explainRequest.threshold).toBe(0.8);
    expect(explainRequest.items).toEqual([{ section_title: null, context: "ctx one" }]);
  });

  it("requires a classification before explaining", async () => {
    const session = new UiSession("http://svc", immediateFetch([bodyFor(["x"], 0.9)]).fetchImpl);
    expect(await session.explain()).toBe(false);
    expect(session.error).toMatch(/classify first/);
  });
});
