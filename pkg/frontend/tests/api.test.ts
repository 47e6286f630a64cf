import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, StaleRevision } from "../src/api.js";
import {
  StubFetch,
  errorResponse,
  jsonResponse,
  projectFixture,
} from "./helpers.js";

describe("ApiClient", () => {
  it("parses the project and remembers the quoted ETag revision", async () => {
    const stub = new StubFetch();
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(projectFixture, { etag: '"18"' }));
    const client = new ApiClient("", stub.fn);

    const doc = await client.getProject();

    expect(doc.name).toBe(projectFixture.name);
    expect(doc.revision).toBe(18);
    expect(client.revision).toBe(18);
  });

  it("sends If-Match with the last seen revision on decisions", async () => {
    const stub = new StubFetch();
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(projectFixture, { etag: '"18"' }));
    const corrId = projectFixture.correspondences[0]!.id;
    const path = `/api/v1/correspondences/${encodeURIComponent(corrId)}/decision`;
    stub.on("POST", path, (call) => {
      expect(call.headers.get("If-Match")).toBe('"18"');
      const body = JSON.parse(String(call.init?.body)) as Record<string, string>;
      expect(body["verdict"]).toBe("ACCEPT");
      expect(body["who"]).toBe("expert");
      return jsonResponse({
        correspondence: projectFixture.correspondences[0],
        warnings: [],
        revision: 19,
      }, { etag: '"19"' });
    });
    const client = new ApiClient("", stub.fn);
    await client.getProject();

    const result = await client.decide(corrId, "ACCEPT", "expert");

    expect(result.revision).toBe(19);
    expect(client.revision).toBe(19);
  });

  it("refuses to mutate before any revision is known", async () => {
    const client = new ApiClient("", new StubFetch().fn);
    await expect(client.decide("x", "ACCEPT", "expert"))
      .rejects.toMatchObject({ code: "NO_REVISION" });
  });

  it("maps 412 to StaleRevision carrying the current revision", async () => {
    const stub = new StubFetch();
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(projectFixture, { etag: '"18"' }));
    stub.on("POST", "/api/v1/correspondences/c1/decision", () =>
      errorResponse(412, "STALE_REVISION",
        "project is at revision 21", { revision: 21 }));
    const client = new ApiClient("", stub.fn);
    await client.getProject();

    const failure = await client.decide("c1", "ACCEPT", "expert")
      .catch((err: unknown) => err);

    expect(failure).toBeInstanceOf(StaleRevision);
    expect((failure as StaleRevision).currentRevision).toBe(21);
    expect((failure as StaleRevision).status).toBe(412);
  });

  it("surfaces the error envelope code and message", async () => {
    const stub = new StubFetch();
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(projectFixture, { etag: '"18"' }));
    stub.on("POST", "/api/v1/correspondences/nope/decision", () =>
      errorResponse(404, "UNKNOWN_CORRESPONDENCE", "no such correspondence"));
    const client = new ApiClient("", stub.fn);
    await client.getProject();

    const failure = await client.decide("nope", "ACCEPT", "expert")
      .catch((err: unknown) => err);

    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).code).toBe("UNKNOWN_CORRESPONDENCE");
    expect((failure as ApiError).message).toBe("no such correspondence");
  });

  it("executes without If-Match because execution is read-only", async () => {
    const stub = new StubFetch();
    stub.on("POST", "/api/v1/execute", (call) => {
      expect(call.headers.get("If-Match")).toBeNull();
      return jsonResponse({ target: { nodes: [], edges: [] } });
    });
    const client = new ApiClient("", stub.fn);

    await client.execute([]);

    expect(stub.callsTo("POST", "/api/v1/execute")).toHaveLength(1);
  });

  it("runs the matcher with If-Match and adopts the new ETag", async () => {
    const stub = new StubFetch();
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(projectFixture, { etag: '"18"' }));
    stub.on("POST", "/api/v1/match", (call) => {
      expect(call.headers.get("If-Match")).toBe('"18"');
      return jsonResponse([], { etag: '"19"' });
    });
    const client = new ApiClient("", stub.fn);
    await client.getProject();

    await client.runMatch();

    expect(client.revision).toBe(19);
  });

  it("uploads sources as multipart form data", async () => {
    const stub = new StubFetch();
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(projectFixture, { etag: '"18"' }));
    stub.on("POST", "/api/v1/sources", (call) => {
      const form = call.init?.body as FormData;
      expect(form.get("kind")).toBe("csv");
      expect(form.get("name")).toBe("regions");
      expect(form.get("target")).toBeNull();
      expect(form.get("file")).not.toBeNull();
      return jsonResponse(
        { schema: {}, warnings: [], revision: 19 },
        { status: 201, etag: '"19"' });
    });
    const client = new ApiClient("", stub.fn);
    await client.getProject();

    const result = await client.uploadSource(
      "csv", "regions", new Blob(["code,name\nN01,North\n"]));

    expect(result.revision).toBe(19);
    expect(client.revision).toBe(19);
  });
});
