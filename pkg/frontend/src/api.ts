/**
 * Typed client for the classification service.
 *
 * The raw response body is kept verbatim next to the parsed payload so the
 * download feature can reproduce the service bytes exactly; re-serializing
 * the parsed object could reorder keys or reformat numbers.
 */

import type { ClassifyItem, ClassifyResponse, ExplainResponse, Mode, SchemaResponse } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface RawResult<T> {
  payload: T;
  rawBody: string;
}

async function failureMessage(status: number, rawBody: string): Promise<string> {
  try {
    const parsed = JSON.parse(rawBody);
    if (parsed && typeof parsed.detail === "string") return parsed.detail;
    if (parsed && Array.isArray(parsed.detail)) {
      return parsed.detail
        .map((d: { loc?: unknown[]; msg?: string }) => `${(d.loc ?? []).join(".")}: ${d.msg ?? ""}`)
        .join("; ");
    }
  } catch {
    // non-JSON error body; fall through
  }
  return `service responded with status ${status}`;
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<RawResult<T>> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceError(`service unreachable: ${(err as Error).message}`);
    }
    const rawBody = await response.text();
    if (!response.ok) {
      throw new ServiceError(await failureMessage(response.status, rawBody), response.status);
    }
    return { payload: JSON.parse(rawBody) as T, rawBody };
  }

  private async get<T>(path: string): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`);
    } catch (err) {
      throw new ServiceError(`service unreachable: ${(err as Error).message}`);
    }
    const rawBody = await response.text();
    if (!response.ok) {
      throw new ServiceError(await failureMessage(response.status, rawBody), response.status);
    }
    return JSON.parse(rawBody) as T;
  }

  classify(items: ClassifyItem[], mode: Mode, threshold: number): Promise<RawResult<ClassifyResponse>> {
    return this.post<ClassifyResponse>("/classify", { items, mode, threshold });
  }

  explain(items: ClassifyItem[], mode: Mode, threshold: number): Promise<RawResult<ExplainResponse>> {
    return this.post<ExplainResponse>("/explain", { items, mode, threshold });
  }

  schema(): Promise<SchemaResponse> {
    return this.get<SchemaResponse>("/schema");
  }

  health(): Promise<{ status: string }> {
    return this.get<{ status: string }>("/health");
  }
}
