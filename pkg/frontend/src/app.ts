/** Application shell: loads the project, renders the panes, decision list,
 * pending queue and quality dashboard, and keeps them in sync with the
 * service. The server remains the single source of truth; every change
 * goes through an endpoint and the screen is rebuilt from fetched state. */

import { ApiClient, ApiError } from "./api.js";
import { el } from "./dom.js";
import { renderDashboard } from "./dashboard.js";
import { renderPanes } from "./panes.js";
import { createPoller, type Poller } from "./poll.js";
import {
  DecisionQueue,
  freshViewState,
  type PendingDecision,
  type ViewState,
} from "./state.js";
import type {
  CorrespondenceJson,
  ProjectDoc,
  QualityJson,
} from "./types.js";
import { fractionToNumber, refKey } from "./types.js";

export class App {
  readonly client: ApiClient;
  readonly state: ViewState;
  readonly queue: DecisionQueue;
  project: ProjectDoc | null = null;
  quality: QualityJson | null = null;
  qualityNote: string | null = null;
  toolbarNote: string | null = null;
  reviewer = "expert";
  private readonly poller: Poller;
  private mutating = false;
  private pendingUpload: File | null = null;

  private readonly toolbarEl: HTMLElement;
  private readonly boardEl: HTMLElement;
  private readonly decisionsEl: HTMLElement;
  private readonly pendingEl: HTMLElement;
  private readonly dashboardEl: HTMLElement;
  private readonly dialogEl: HTMLElement;

  constructor(root: HTMLElement, client: ApiClient = new ApiClient()) {
    this.client = client;
    this.state = freshViewState();
    this.queue = new DecisionQueue(
      client,
      {
        onAck: async (_item, response) => {
          if (response.warnings.length > 0) {
            this.showWarningDialog(response.warnings);
          }
          await this.refreshProject();
          await this.refreshQuality();
          this.render();
        },
        onConflict: () => this.render(),
        onError: () => this.render(),
      },
      async () => {
        await this.refreshProject();
      },
    );
    this.poller = createPoller(() => this.pollTick());

    root.textContent = "";
    this.toolbarEl = el("header", "toolbar");
    this.boardEl = el("div", "board-container");
    const sidebar = el("aside", "sidebar");
    this.decisionsEl = el("section", "decisions");
    this.pendingEl = el("section", "pending");
    this.dashboardEl = el("section", "dashboard");
    sidebar.appendChild(this.pendingEl);
    sidebar.appendChild(this.decisionsEl);
    sidebar.appendChild(this.dashboardEl);
    const main = el("main", "layout");
    main.appendChild(this.boardEl);
    main.appendChild(sidebar);
    this.dialogEl = el("div", "dialog-host");
    root.appendChild(this.toolbarEl);
    root.appendChild(main);
    root.appendChild(this.dialogEl);
  }

  async start(options: { poll?: boolean } = {}): Promise<void> {
    await this.refreshProject();
    await this.refreshQuality();
    this.render();
    if (options.poll !== false) this.poller.start();
  }

  stop(): void {
    this.poller.stop();
  }

  async refreshProject(): Promise<void> {
    this.project = await this.client.getProject();
  }

  async refreshQuality(): Promise<void> {
    try {
      this.quality = await this.client.getQuality();
      this.qualityNote = null;
    } catch (err) {
      this.quality = null;
      this.qualityNote = err instanceof ApiError
        ? `${err.code}: ${err.message}`
        : String(err);
    }
  }

  private async pollTick(): Promise<void> {
    const before = this.project?.revision;
    const doc = await this.client.getProject();
    if (doc.revision !== before) {
      this.project = doc;
      await this.refreshQuality();
      this.render();
    }
  }

  /* -- rendering ---------------------------------------------------------- */

  render(): void {
    this.renderToolbar();
    renderPanes(this.boardEl, this.project, this.state,
                (id) => this.toggleSelect(id));
    this.renderDecisions();
    this.renderPending();
    renderDashboard(this.dashboardEl, this.quality, {
      onHighlight: (sources, neighborhood) => {
        this.state.highlight.sources = new Set(sources);
        this.state.highlight.neighborhood = new Set(neighborhood);
        this.render();
      },
      onClearHighlight: () => {
        this.state.highlight.sources.clear();
        this.state.highlight.neighborhood.clear();
        this.render();
      },
    });
    if (this.qualityNote) {
      const note = el("p", "quality-note", this.qualityNote);
      this.dashboardEl.insertBefore(note, this.dashboardEl.firstChild);
    }
  }

  private renderToolbar(): void {
    this.toolbarEl.textContent = "";
    const title = el("h1", "app-title",
      this.project ? this.project.name : "schema mediation");
    this.toolbarEl.appendChild(title);
    if (this.project) {
      this.toolbarEl.appendChild(
        el("span", "revision", `revision ${this.project.revision}`));
    }

    const importForm = el("div", "import-form");
    const kindSelect = el("select", "import-kind") as HTMLSelectElement;
    for (const kind of ["relational", "json", "csv"]) {
      const option = el("option", undefined, kind) as HTMLOptionElement;
      option.value = kind;
      kindSelect.appendChild(option);
    }
    const nameInput = el("input", "import-name") as HTMLInputElement;
    nameInput.placeholder = "schema name";
    const fileInput = el("input", "import-file") as HTMLInputElement;
    fileInput.type = "file";
    fileInput.addEventListener("change", () => {
      this.pendingUpload = fileInput.files?.[0] ?? null;
    });
    const targetBox = el("input", "import-target") as HTMLInputElement;
    targetBox.type = "checkbox";
    const targetLabel = el("label", undefined, "as target");
    targetLabel.insertBefore(targetBox, targetLabel.firstChild);
    const uploadButton = el("button", "upload", "Import") as HTMLButtonElement;
    uploadButton.disabled = this.mutating;
    uploadButton.addEventListener("click", () => {
      void this.upload(
        kindSelect.value as "relational" | "json" | "csv",
        nameInput.value,
        targetBox.checked,
      );
    });
    importForm.appendChild(kindSelect);
    importForm.appendChild(nameInput);
    importForm.appendChild(fileInput);
    importForm.appendChild(targetLabel);
    importForm.appendChild(uploadButton);
    this.toolbarEl.appendChild(importForm);

    const matchButton = el("button", "run-match", "Run matcher") as HTMLButtonElement;
    matchButton.disabled = this.mutating || !this.project?.target
      || this.project.sources.length === 0;
    matchButton.addEventListener("click", () => void this.runMatch());
    this.toolbarEl.appendChild(matchButton);

    const reviewerInput = el("input", "reviewer") as HTMLInputElement;
    reviewerInput.value = this.reviewer;
    reviewerInput.addEventListener("change", () => {
      this.reviewer = reviewerInput.value || "expert";
    });
    const reviewerLabel = el("label", "reviewer-label", "reviewing as ");
    reviewerLabel.appendChild(reviewerInput);
    this.toolbarEl.appendChild(reviewerLabel);

    this.toolbarEl.appendChild(this.renderFilters());

    if (this.toolbarNote) {
      this.toolbarEl.appendChild(el("p", "toolbar-note", this.toolbarNote));
    }
  }

  private renderFilters(): HTMLElement {
    const filters = el("div", "filters");
    for (const status of ["PROPOSED", "ACCEPTED", "REJECTED"] as const) {
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = this.state.filters.statuses.has(status);
      box.setAttribute("data-filter-status", status);
      box.addEventListener("change", () => {
        if (box.checked) this.state.filters.statuses.add(status);
        else this.state.filters.statuses.delete(status);
        this.render();
      });
      const label = el("label", "filter-status", status.toLowerCase());
      label.insertBefore(box, label.firstChild);
      filters.appendChild(label);
    }
    const range = el("label", "filter-confidence", "confidence at least ");
    const minInput = el("input") as HTMLInputElement;
    minInput.type = "number";
    minInput.min = "0";
    minInput.max = "1";
    minInput.step = "0.05";
    minInput.value = String(this.state.filters.minConfidence);
    minInput.addEventListener("change", () => {
      const value = Number(minInput.value);
      this.state.filters.minConfidence = Number.isFinite(value) ? value : 0;
      this.render();
    });
    range.appendChild(minInput);
    filters.appendChild(range);
    return filters;
  }

  private visibleCorrespondences(): CorrespondenceJson[] {
    if (!this.project) return [];
    return this.project.correspondences.filter((corr) => {
      if (!this.state.filters.statuses.has(corr.status)) return false;
      const c = fractionToNumber(corr.confidence);
      return c >= this.state.filters.minConfidence
        && c <= this.state.filters.maxConfidence;
    });
  }

  private renderDecisions(): void {
    this.decisionsEl.textContent = "";
    this.decisionsEl.appendChild(el("h2", undefined, "correspondences"));
    const list = this.visibleCorrespondences();
    if (list.length === 0) {
      this.decisionsEl.appendChild(el("p", "no-correspondences",
        "no correspondences match the current filters"));
      return;
    }
    for (const corr of list) {
      const row = el("div",
        "corr-row status-" + corr.status.toLowerCase()
        + (this.state.selected.has(corr.id) ? " selected" : ""));
      row.setAttribute("data-corr-id", corr.id);
      const head = el("div", "corr-head");
      head.appendChild(el("span", "corr-pair",
        `${refKey(corr.source)} to ${refKey(corr.target)}`));
      head.appendChild(el("span", "corr-confidence",
        `${Math.round(fractionToNumber(corr.confidence) * 100)}%`));
      head.addEventListener("click", () => this.toggleSelect(corr.id));
      row.appendChild(head);

      if (this.state.selected.has(corr.id)) {
        const evidence = el("ul", "evidence");
        for (const item of corr.evidence) {
          evidence.appendChild(el("li", "evidence-item",
            `${item.signal}: ${item.score.num}/${item.score.den}`));
        }
        row.appendChild(evidence);
      }

      if (corr.status === "PROPOSED") {
        const actions = el("div", "corr-actions");
        const accept = el("button", "accept", "Accept") as HTMLButtonElement;
        const reject = el("button", "reject", "Reject") as HTMLButtonElement;
        accept.disabled = this.queue.busy;
        reject.disabled = this.queue.busy;
        accept.addEventListener("click", () => {
          this.queue.enqueue(corr.id, "ACCEPT", this.reviewer);
          this.render();
        });
        reject.addEventListener("click", () => {
          this.queue.enqueue(corr.id, "REJECT", this.reviewer);
          this.render();
        });
        actions.appendChild(accept);
        actions.appendChild(reject);
        row.appendChild(actions);
      } else {
        row.appendChild(el("span", "decided-by",
          `${corr.status.toLowerCase()} by ${corr.decidedBy ?? "unknown"}`));
      }
      this.decisionsEl.appendChild(row);
    }
  }

  private renderPending(): void {
    this.pendingEl.textContent = "";
    if (this.queue.items.length === 0) return;
    this.pendingEl.appendChild(el("h2", undefined, "pending decisions"));
    for (const item of this.queue.items) {
      const row = el("div", `pending-item pending-${item.status}`);
      row.setAttribute("data-corr-id", item.corrId);
      row.appendChild(el("span", "pending-summary",
        `${item.verdict.toLowerCase()} ${item.corrId} (${item.status})`));
      if (item.message) {
        row.appendChild(el("p", "pending-message", item.message));
      }
      if (item.status === "conflict") {
        row.appendChild(el("p", "conflict-note",
          "the project changed while this decision was pending; "
          + "review the updated state, then apply again or discard"));
      }
      if (item.status === "conflict" || item.status === "error") {
        const retry = el("button", "retry", "Apply again");
        retry.addEventListener("click", () => {
          this.queue.retry(item);
          this.render();
        });
        const discard = el("button", "discard", "Discard");
        discard.addEventListener("click", () => {
          this.queue.discard(item);
          this.render();
        });
        row.appendChild(retry);
        row.appendChild(discard);
      }
      this.pendingEl.appendChild(row);
    }
  }

  private showWarningDialog(warnings: string[]): void {
    this.dialogEl.textContent = "";
    const dialog = el("div", "dialog warning-dialog");
    dialog.appendChild(el("h2", undefined, "decision affects compiled rules"));
    const list = el("ul");
    for (const warning of warnings) {
      list.appendChild(el("li", "warning", warning));
    }
    dialog.appendChild(list);
    const close = el("button", "close-dialog", "OK");
    close.addEventListener("click", () => {
      this.dialogEl.textContent = "";
    });
    dialog.appendChild(close);
    this.dialogEl.appendChild(dialog);
  }

  private toggleSelect(corrId: string): void {
    if (this.state.selected.has(corrId)) this.state.selected.delete(corrId);
    else this.state.selected.add(corrId);
    this.render();
  }

  /* -- manual mutations ---------------------------------------------------- */

  private async upload(kind: "relational" | "json" | "csv", name: string,
                       asTarget: boolean): Promise<void> {
    if (!this.pendingUpload) {
      this.toolbarNote = "choose a file to import first";
      this.render();
      return;
    }
    if (this.mutating) return;
    this.mutating = true;
    try {
      const result = await this.client.uploadSource(
        kind, name, this.pendingUpload, asTarget);
      this.toolbarNote = result.warnings.length > 0
        ? "imported with warnings: " + result.warnings.join("; ")
        : null;
      this.pendingUpload = null;
      await this.refreshProject();
      await this.refreshQuality();
    } catch (err) {
      this.toolbarNote = err instanceof ApiError
        ? `${err.code}: ${err.message}`
        : String(err);
    } finally {
      this.mutating = false;
      this.render();
    }
  }

  private async runMatch(): Promise<void> {
    if (this.mutating) return;
    this.mutating = true;
    try {
      await this.client.runMatch();
      this.toolbarNote = null;
      await this.refreshProject();
      await this.refreshQuality();
    } catch (err) {
      this.toolbarNote = err instanceof ApiError
        ? `${err.code}: ${err.message}`
        : String(err);
    } finally {
      this.mutating = false;
      this.render();
    }
  }
}
