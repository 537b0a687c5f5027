// Typed client for the session service. All audit state lives on the server;
// this module only moves JSON back and forth.

import type {
  AnnotateResponse,
  Annotation,
  CallersPayload,
  ContextPayload,
  ItemContextPayload,
  ItemPayload,
  MetaPayload,
  ProgressPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** 409 from the service: the session moved underneath us; reload. */
export class ConflictError extends ApiError {
  constructor(status: number, message: string) {
    super(status, message);
    this.name = "ConflictError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${String(err)}`);
  }
  const body = await res.text();
  if (!res.ok) {
    let message = body;
    try {
      message = (JSON.parse(body) as { error: string }).error;
    } catch {
      // not JSON, keep the raw body
    }
    if (res.status === 409) throw new ConflictError(res.status, message);
    throw new ApiError(res.status, message);
  }
  return JSON.parse(body) as T;
}

export interface ItemFilterQuery {
  kind?: string;
  state?: string; // annotation name, or "unannotated"
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  meta(): Promise<MetaPayload> {
    return request(`${this.base}/api/meta`);
  }

  progress(): Promise<ProgressPayload> {
    return request(`${this.base}/api/progress`);
  }

  async items(filter?: ItemFilterQuery): Promise<ItemPayload[]> {
    const params = new URLSearchParams();
    if (filter?.kind) params.set("kind", filter.kind);
    if (filter?.state) params.set("state", filter.state);
    const qs = params.toString();
    const data = await request<{ items: ItemPayload[] }>(
      `${this.base}/api/items${qs ? `?${qs}` : ""}`,
    );
    return data.items;
  }

  item(id: string): Promise<ItemPayload> {
    return request(`${this.base}/api/items/${id}`);
  }

  itemContext(id: string): Promise<ItemContextPayload> {
    return request(`${this.base}/api/items/${id}/context`);
  }

  functionContext(fn: string): Promise<ContextPayload> {
    return request(`${this.base}/api/context?fn=${encodeURIComponent(fn)}`);
  }

  callers(fn: string): Promise<CallersPayload> {
    return request(`${this.base}/api/callers?fn=${encodeURIComponent(fn)}`);
  }

  annotate(id: string, annotation: Annotation): Promise<AnnotateResponse> {
    return request(`${this.base}/api/items/${id}/annotate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotation }),
    });
  }
}
