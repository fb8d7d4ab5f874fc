// Thin typed client over the read-only JSON API.

import type {
  KwicPayload,
  MetaPayload,
  RelationsPayload,
  SketchPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function getJson<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(`network error: ${String(err)}`, 0);
  }
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON error body; fall through to the status check
  }
  if (!response.ok) {
    const detail =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : response.statusText;
    throw new ApiError(detail, response.status);
  }
  return body as T;
}

export class Client {
  constructor(private readonly base: string = "") {}

  meta(): Promise<MetaPayload> {
    return getJson(`${this.base}/api/meta`);
  }

  relations(): Promise<RelationsPayload> {
    return getJson(`${this.base}/api/relations`);
  }

  sketch(lemma: string, relation?: string, minFreq = 1, limit?: number): Promise<SketchPayload> {
    const params = new URLSearchParams({ lemma, min_freq: String(minFreq) });
    if (relation) params.set("relation", relation);
    if (limit !== undefined) params.set("limit", String(limit));
    return getJson(`${this.base}/api/sketch?${params}`);
  }

  kwic(
    head: string,
    collocate: string,
    relation: string | null,
    window = 8,
    offset = 0,
    limit = 20,
  ): Promise<KwicPayload> {
    const params = new URLSearchParams({
      head,
      collocate,
      window: String(window),
      offset: String(offset),
      limit: String(limit),
    });
    if (relation) params.set("relation", relation);
    return getJson(`${this.base}/api/kwic?${params}`);
  }

  query(cql: string, window = 8, limit = 20, offset = 0): Promise<KwicPayload> {
    return getJson(`${this.base}/api/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ cql, window, limit, offset }),
    });
  }
}

export type ApiLike = Pick<Client, "sketch" | "kwic" | "query" | "relations" | "meta">;
