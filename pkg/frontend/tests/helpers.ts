/** Shared test support: canned responses and a recording fetch stub. */

import type { ProjectDoc, QualityJson } from "../src/types.js";
import projectRaw from "./fixtures/project.json";
import qualityPerfectRaw from "./fixtures/quality_perfect.json";
import qualityImperfectRaw from "./fixtures/quality_imperfect.json";
import qualityInconsistentRaw from "./fixtures/quality_inconsistent.json";

export const projectFixture = projectRaw as unknown as ProjectDoc;
export const qualityPerfect = qualityPerfectRaw as unknown as QualityJson;
export const qualityImperfect = qualityImperfectRaw as unknown as QualityJson;
export const qualityInconsistent =
  qualityInconsistentRaw as unknown as QualityJson;

export function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

export function jsonResponse(
  body: unknown,
  init: { status?: number; etag?: string } = {},
): Response {
  const status = init.status ?? 200;
  const headers = new Headers();
  if (init.etag !== undefined) headers.set("ETag", init.etag);
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    headers,
    json: async () => clone(body),
  } as unknown as Response;
}

export function errorResponse(
  status: number,
  code: string,
  message: string,
  details: Record<string, unknown> = {},
): Response {
  return jsonResponse({ error: { code, message, details } }, { status });
}

export interface RecordedCall {
  method: string;
  path: string;
  headers: Headers;
  init: RequestInit | undefined;
}

type Handler = (call: RecordedCall) => Response;

/** Route-keyed fetch stub: register handlers per "METHOD /api/v1/...". */
export class StubFetch {
  readonly calls: RecordedCall[] = [];
  private readonly routes = new Map<string, Handler>();

  on(method: string, path: string, handler: Handler): void {
    this.routes.set(`${method.toUpperCase()} ${path}`, handler);
  }

  callsTo(method: string, path: string): RecordedCall[] {
    return this.calls.filter(
      (c) => c.method === method.toUpperCase() && c.path === path);
  }

  readonly fn = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = (init?.method ?? "GET").toUpperCase();
    const path = url.startsWith("http")
      ? new URL(url).pathname
      : url;
    const call: RecordedCall = {
      method,
      path,
      headers: new Headers(init?.headers),
      init,
    };
    this.calls.push(call);
    const handler = this.routes.get(`${method} ${path}`);
    if (!handler) {
      throw new Error(`unexpected request: ${method} ${path}`);
    }
    return handler(call);
  };
}

export function deferred<T>(): {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason: unknown) => void;
} {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Let queued promise callbacks run. */
export async function flush(times = 5): Promise<void> {
  for (let i = 0; i < times; i += 1) {
    await new Promise<void>((resolve) => { setTimeout(resolve, 0); });
  }
}
