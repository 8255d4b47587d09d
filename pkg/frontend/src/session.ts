/**
 * Single-user session state: entered text, mode, threshold, last responses.
 *
 * At most one submission is considered live at a time; responses arriving for
 * an older request number are discarded, so a slow early reply can never
 * overwrite a newer one. The threshold is sent with every request and never
 * applied client-side; the raw body of the last classification is kept for
 * byte-identical downloads.
 */

import type { FetchLike, RawResult } from "./api";
import { ServiceClient, ServiceError } from "./api";
import { parseItems, ParseError } from "./parse";
import type { ClassifyResponse, ExplainResponse, Mode } from "./types";

export function clampThreshold(value: number): number {
  // the service contract wants a threshold in (0, 1]
  if (!Number.isFinite(value) || value <= 0) return 0.01;
  if (value > 1) return 1;
  return value;
}

export class UiSession {
  rawItems = "";
  mode: Mode = "mixed";
  threshold = 0.9;
  error: string | null = null;
  lastClassify: RawResult<ClassifyResponse> | null = null;
  lastExplain: RawResult<ExplainResponse> | null = null;

  private readonly client: ServiceClient;
  private requestCounter = 0;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.client = fetchImpl ? new ServiceClient(baseUrl, fetchImpl) : new ServiceClient(baseUrl);
  }

  setThreshold(value: number): void {
    this.threshold = clampThreshold(value);
  }

  get canDownload(): boolean {
    return this.lastClassify !== null;
  }

  /** The exact bytes of the last /classify body (what the download saves). */
  downloadBody(): string {
    if (this.lastClassify === null) {
      throw new Error("nothing to download yet");
    }
    return this.lastClassify.rawBody;
  }

  downloadFilename(): string {
    const mode = this.lastClassify?.payload.mode ?? this.mode;
    return `classification_${mode}.json`;
  }

  /**
   * Submit the current text. Resolves to true when this response was applied,
   * false when it was stale (a newer submission superseded it) or invalid.
   */
  async submit(): Promise<boolean> {
    this.error = null;
    let items;
    try {
      items = parseItems(this.rawItems);
    } catch (err) {
      if (err instanceof ParseError) {
        this.error = err.message;
        return false;
      }
      throw err;
    }
    const requestNumber = ++this.requestCounter;
    try {
      const result = await this.client.classify(items, this.mode, this.threshold);
      if (requestNumber !== this.requestCounter) return false; // stale
      this.lastClassify = result;
      this.lastExplain = null; // explanations belong to the previous submission
      return true;
    } catch (err) {
      if (requestNumber !== this.requestCounter) return false;
      this.lastClassify = null;
      this.error = err instanceof ServiceError ? err.message : `unexpected error: ${err}`;
      return false;
    }
  }

  /** Fetch explanations for the same items; needs a prior classification. */
  async explain(): Promise<boolean> {
    if (this.lastClassify === null) {
      this.error = "classify first, then explain";
      return false;
    }
    const { payload } = this.lastClassify;
    const items = payload.results.map((r) => ({ section_title: r.section_title, context: r.context }));
    const requestNumber = ++this.requestCounter;
    try {
      const result = await this.client.explain(items, payload.mode, payload.threshold);
      if (requestNumber !== this.requestCounter) return false;
      this.lastExplain = result;
      return true;
    } catch (err) {
      if (requestNumber !== this.requestCounter) return false;
      this.error = err instanceof ServiceError ? err.message : `unexpected error: ${err}`;
      return false;
    }
  }
}
