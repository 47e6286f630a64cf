import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import {
  StubFetch,
  clone,
  errorResponse,
  flush,
  jsonResponse,
  projectFixture,
  qualityPerfect,
} from "./helpers.js";

const FIRST_PROPOSED = projectFixture.correspondences
  .find((c) => c.status === "PROPOSED")!;
const DECISION_PATH =
  `/api/v1/correspondences/${encodeURIComponent(FIRST_PROPOSED.id)}/decision`;

function standardStub(): StubFetch {
  const stub = new StubFetch();
  stub.on("GET", "/api/v1/project", () =>
    jsonResponse(projectFixture, { etag: '"18"' }));
  stub.on("GET", "/api/v1/quality", () =>
    jsonResponse(qualityPerfect, { etag: '"18"' }));
  return stub;
}

async function makeApp(stub: StubFetch): Promise<{ app: App; host: HTMLElement }> {
  const host = document.createElement("div");
  document.body.appendChild(host);
  const app = new App(host, new ApiClient("", stub.fn));
  await app.start({ poll: false });
  return { app, host };
}

function clickAccept(host: HTMLElement): void {
  const row = host.querySelector(
    `.corr-row[data-corr-id="${FIRST_PROPOSED.id}"]`)!;
  (row.querySelector("button.accept") as HTMLElement).click();
}

beforeEach(() => {
  document.body.textContent = "";
});

describe("application shell", () => {
  it("renders toolbar, panes, decision list and dashboard from the service", async () => {
    const { host } = await makeApp(standardStub());
    expect(host.querySelector(".app-title")!.textContent)
      .toBe(projectFixture.name);
    expect(host.querySelector(".revision")!.textContent).toBe("revision 18");
    expect(host.querySelectorAll(".pane")).toHaveLength(3);
    expect(host.querySelectorAll(".corr-row"))
      .toHaveLength(projectFixture.correspondences.length);
    expect(host.querySelector(".badge-perfect")).not.toBeNull();
  });

  it("sends an accepted decision and refetches project and quality", async () => {
    const stub = standardStub();
    stub.on("POST", DECISION_PATH, (call) => {
      expect(call.headers.get("If-Match")).toBe('"18"');
      const body = JSON.parse(String(call.init?.body)) as Record<string, string>;
      expect(body["verdict"]).toBe("ACCEPT");
      expect(body["who"]).toBe("expert");
      return jsonResponse({
        correspondence: { ...clone(FIRST_PROPOSED), status: "ACCEPTED" },
        warnings: [],
        revision: 19,
      }, { etag: '"19"' });
    });
    const { host } = await makeApp(stub);

    clickAccept(host);
    await flush();

    expect(stub.callsTo("POST", DECISION_PATH)).toHaveLength(1);
    expect(stub.callsTo("GET", "/api/v1/project")).toHaveLength(2);
    expect(stub.callsTo("GET", "/api/v1/quality")).toHaveLength(2);
    expect(host.querySelector(".pending-item")).toBeNull();
  });

  it("shows the dependent-rule warning dialog when a decision affects rules", async () => {
    const stub = standardStub();
    stub.on("POST", DECISION_PATH, () => jsonResponse({
      correspondence: { ...clone(FIRST_PROPOSED), status: "REJECTED" },
      warnings: [
        "rule r10_stat_region reads hospital:Record.region, which this"
        + " rejection leaves without an accepted match",
      ],
      revision: 19,
    }, { etag: '"19"' }));
    const { host } = await makeApp(stub);

    const row = host.querySelector(
      `.corr-row[data-corr-id="${FIRST_PROPOSED.id}"]`)!;
    (row.querySelector("button.reject") as HTMLElement).click();
    await flush();

    const dialog = host.querySelector(".warning-dialog");
    expect(dialog).not.toBeNull();
    expect(dialog!.querySelector("li.warning")!.textContent)
      .toContain("r10_stat_region");

    (dialog!.querySelector("button.close-dialog") as HTMLElement).click();
    expect(host.querySelector(".warning-dialog")).toBeNull();
  });

  it("re-presents a decision after a stale revision and applies it on confirm", async () => {
    const stub = standardStub();
    let posts = 0;
    stub.on("POST", DECISION_PATH, () => {
      posts += 1;
      if (posts === 1) {
        return errorResponse(412, "STALE_REVISION",
          "project is at revision 21", { revision: 21 });
      }
      return jsonResponse({
        correspondence: { ...clone(FIRST_PROPOSED), status: "ACCEPTED" },
        warnings: [],
        revision: 22,
      }, { etag: '"22"' });
    });
    const { host } = await makeApp(stub);

    clickAccept(host);
    await flush();

    const conflict = host.querySelector(".pending-item.pending-conflict");
    expect(conflict).not.toBeNull();
    expect(conflict!.textContent).toContain("conflict");
    expect(conflict!.textContent).toContain("revision 21");
    expect(stub.callsTo("GET", "/api/v1/project")).toHaveLength(2);

    (conflict!.querySelector("button.retry") as HTMLElement).click();
    await flush();

    expect(posts).toBe(2);
    expect(host.querySelector(".pending-item")).toBeNull();
    expect(stub.callsTo("GET", "/api/v1/quality")).toHaveLength(2);
  });

  it("keeps a rejected mutation visible inline until discarded", async () => {
    const stub = standardStub();
    stub.on("POST", DECISION_PATH, () =>
      errorResponse(409, "CONFLICTING_ACCEPT",
        "source and target already accepted under another id"));
    const { host } = await makeApp(stub);

    clickAccept(host);
    await flush();

    const item = host.querySelector(".pending-item.pending-error");
    expect(item).not.toBeNull();
    expect(item!.querySelector(".pending-message")!.textContent)
      .toBe("CONFLICTING_ACCEPT: source and target already accepted"
            + " under another id");

    (item!.querySelector("button.discard") as HTMLElement).click();
    expect(host.querySelector(".pending-item")).toBeNull();
  });

  it("uses the reviewer name from the toolbar", async () => {
    const stub = standardStub();
    let who: string | null = null;
    stub.on("POST", DECISION_PATH, (call) => {
      who = (JSON.parse(String(call.init?.body)) as Record<string, string>)
        ["who"] ?? null;
      return jsonResponse({
        correspondence: { ...clone(FIRST_PROPOSED), status: "ACCEPTED" },
        warnings: [],
        revision: 19,
      }, { etag: '"19"' });
    });
    const { host } = await makeApp(stub);

    const input = host.querySelector("input.reviewer") as HTMLInputElement;
    input.value = "alice";
    input.dispatchEvent(new Event("change", { bubbles: true }));
    clickAccept(host);
    await flush();

    expect(who).toBe("alice");
  });

  it("filters the decision list by status", async () => {
    const { host } = await makeApp(standardStub());
    const box = host.querySelector(
      'input[data-filter-status="PROPOSED"]') as HTMLInputElement;
    box.click();
    await flush(1);

    expect(host.querySelectorAll(".corr-row.status-proposed")).toHaveLength(0);
    expect(host.querySelectorAll(".corr-row.status-accepted").length)
      .toBeGreaterThan(0);
  });

  it("reveals signal evidence when a correspondence is selected", async () => {
    const { host } = await makeApp(standardStub());
    const row = host.querySelector(
      `.corr-row[data-corr-id="${FIRST_PROPOSED.id}"]`)!;
    (row.querySelector(".corr-head") as HTMLElement).click();

    const evidence = document.querySelector(
      `.corr-row[data-corr-id="${FIRST_PROPOSED.id}"] .evidence`);
    expect(evidence).not.toBeNull();
    expect(evidence!.textContent).toContain("name");
  });

  it("runs the matcher from the toolbar and refreshes", async () => {
    const stub = standardStub();
    stub.on("POST", "/api/v1/match", (call) => {
      expect(call.headers.get("If-Match")).toBe('"18"');
      return jsonResponse([], { etag: '"19"' });
    });
    const { host } = await makeApp(stub);

    (host.querySelector("button.run-match") as HTMLElement).click();
    await flush();

    expect(stub.callsTo("POST", "/api/v1/match")).toHaveLength(1);
    expect(stub.callsTo("GET", "/api/v1/project")).toHaveLength(2);
  });

  it("shows the quality note when no report is available yet", async () => {
    const stub = new StubFetch();
    const empty = clone(projectFixture);
    empty.sources = [];
    empty.target = null;
    empty.correspondences = [];
    empty.revision = 0;
    stub.on("GET", "/api/v1/project", () =>
      jsonResponse(empty, { etag: '"0"' }));
    stub.on("GET", "/api/v1/quality", () =>
      errorResponse(409, "UNRESOLVED_REFERENCE", "set a target schema first"));
    const { host } = await makeApp(stub);

    expect(host.querySelector(".placeholder")).not.toBeNull();
    expect(host.querySelector(".quality-note")!.textContent)
      .toBe("UNRESOLVED_REFERENCE: set a target schema first");
    const match = host.querySelector("button.run-match") as HTMLButtonElement;
    expect(match.disabled).toBe(true);
  });
});
