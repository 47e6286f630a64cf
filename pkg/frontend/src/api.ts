/** Thin client for the /api/v1 service. Keeps the last seen revision and
 * sends it as If-Match on every mutation; a 412 surfaces as StaleRevision
 * so the caller can refetch and re-present. */

import type {
  CorrespondenceJson,
  DecisionResponse,
  ErrorEnvelope,
  ProjectDoc,
  QualityJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

export class StaleRevision extends ApiError {
  constructor(status: number, code: string, message: string,
              details: Record<string, unknown>,
              readonly currentRevision: number) {
    super(status, code, message, details);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  revision: number | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private noteRevision(response: Response): void {
    const etag = response.headers.get("ETag");
    if (etag !== null) {
      const parsed = Number(etag.replace(/"/g, ""));
      if (Number.isFinite(parsed)) this.revision = parsed;
    }
  }

  private async fail(response: Response): Promise<never> {
    let envelope: ErrorEnvelope | null = null;
    try {
      envelope = (await response.json()) as ErrorEnvelope;
    } catch {
      /* non-JSON error body */
    }
    const code = envelope?.error?.code ?? `HTTP_${response.status}`;
    const message = envelope?.error?.message ?? response.statusText;
    const details = envelope?.error?.details ?? {};
    if (response.status === 412) {
      const current = Number(details["revision"]);
      throw new StaleRevision(412, code, message, details,
                              Number.isFinite(current) ? current : -1);
    }
    throw new ApiError(response.status, code, message, details);
  }

  private async request(path: string, init: RequestInit = {},
                        ifMatch = false): Promise<Response> {
    const headers = new Headers(init.headers);
    if (ifMatch) {
      if (this.revision === null) {
        throw new ApiError(0, "NO_REVISION",
                           "load the project before mutating it");
      }
      headers.set("If-Match", `"${this.revision}"`);
    }
    const response = await this.fetchFn(`${this.base}/api/v1${path}`,
                                        { ...init, headers });
    if (!response.ok) await this.fail(response);
    this.noteRevision(response);
    return response;
  }

  async getProject(): Promise<ProjectDoc> {
    const response = await this.request("/project");
    return (await response.json()) as ProjectDoc;
  }

  async getQuality(): Promise<QualityJson> {
    const response = await this.request("/quality");
    return (await response.json()) as QualityJson;
  }

  async decide(corrId: string, verdict: "ACCEPT" | "REJECT",
               who: string): Promise<DecisionResponse> {
    const response = await this.request(
      `/correspondences/${encodeURIComponent(corrId)}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ verdict, who }),
      },
      true,
    );
    const body = (await response.json()) as DecisionResponse;
    this.revision = body.revision;
    return body;
  }

  async runMatch(): Promise<CorrespondenceJson[]> {
    const response = await this.request("/match", { method: "POST" }, true);
    return (await response.json()) as CorrespondenceJson[];
  }

  async uploadSource(kind: "relational" | "json" | "csv", name: string,
                     file: Blob, asTarget = false):
      Promise<{ warnings: string[]; revision: number }> {
    const form = new FormData();
    form.set("kind", kind);
    if (name) form.set("name", name);
    if (asTarget) form.set("target", "true");
    form.set("file", file);
    const response = await this.request("/sources", {
      method: "POST",
      body: form,
    }, true);
    const body = (await response.json()) as { warnings: string[]; revision: number };
    this.revision = body.revision;
    return body;
  }

  async putRules(rulesText: string): Promise<{ rules: number; warnings: string[] }> {
    const response = await this.request("/rules", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: rulesText,
    }, true);
    return (await response.json()) as { rules: number; warnings: string[] };
  }

  async execute(sources: unknown[]): Promise<unknown> {
    const response = await this.request("/execute", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ sources }),
    });
    return await response.json();
  }
}
