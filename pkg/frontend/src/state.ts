/** Client view state. The server stays authoritative: this module only
 * tracks selection, filters, drag positions and the queue of decisions
 * awaiting acknowledgement. */

import { ApiClient, ApiError, StaleRevision } from "./api.js";
import type { CorrStatus, DecisionResponse } from "./types.js";

export interface Filters {
  statuses: Set<CorrStatus>;
  minConfidence: number;
  maxConfidence: number;
}

export function defaultFilters(): Filters {
  return {
    statuses: new Set(["PROPOSED", "ACCEPTED", "REJECTED"]),
    minConfidence: 0,
    maxConfidence: 1,
  };
}

export interface ViewState {
  selected: Set<string>;
  filters: Filters;
  /* drag offsets per "schema:Label", client-side only */
  positions: Map<string, { dx: number; dy: number }>;
  highlight: { sources: Set<string>; neighborhood: Set<string> };
}

export function freshViewState(): ViewState {
  return {
    selected: new Set(),
    filters: defaultFilters(),
    positions: new Map(),
    highlight: { sources: new Set(), neighborhood: new Set() },
  };
}

export type PendingStatus = "queued" | "inflight" | "conflict" | "error";

export interface PendingDecision {
  corrId: string;
  verdict: "ACCEPT" | "REJECT";
  who: string;
  status: PendingStatus;
  message?: string;
}

export interface QueueCallbacks {
  /* acknowledged by the server; warnings are the dependent-rule notices */
  onAck(item: PendingDecision, response: DecisionResponse): void | Promise<void>;
  /* revision raced; state was refetched, decision must be re-presented */
  onConflict(item: PendingDecision): void;
  onError(item: PendingDecision): void;
}

/** One in-flight mutation at a time. Items leave the queue only on an
 * acknowledged response or an explicit user discard; failures stay visible. */
export class DecisionQueue {
  readonly items: PendingDecision[] = [];
  private pumping = false;

  constructor(
    private readonly client: ApiClient,
    private readonly callbacks: QueueCallbacks,
    private readonly refetchProject: () => Promise<void>,
  ) {}

  enqueue(corrId: string, verdict: "ACCEPT" | "REJECT", who: string): void {
    this.items.push({ corrId, verdict, who, status: "queued" });
    void this.pump();
  }

  /** Re-submit a decision the user confirmed after a conflict or error. */
  retry(item: PendingDecision): void {
    if (item.status === "conflict" || item.status === "error") {
      item.status = "queued";
      delete item.message;
      void this.pump();
    }
  }

  discard(item: PendingDecision): void {
    const index = this.items.indexOf(item);
    if (index >= 0 && item.status !== "inflight") this.items.splice(index, 1);
  }

  get busy(): boolean {
    return this.items.some((i) => i.status === "inflight");
  }

  private nextQueued(): PendingDecision | undefined {
    return this.items.find((i) => i.status === "queued");
  }

  private async pump(): Promise<void> {
    if (this.pumping) return;
    this.pumping = true;
    try {
      for (let item = this.nextQueued(); item; item = this.nextQueued()) {
        item.status = "inflight";
        try {
          const response = await this.client.decide(
            item.corrId, item.verdict, item.who);
          this.items.splice(this.items.indexOf(item), 1);
          await this.callbacks.onAck(item, response);
        } catch (err) {
          if (err instanceof StaleRevision) {
            await this.refetchProject();
            item.status = "conflict";
            item.message = `project moved to revision ${err.currentRevision}`;
            this.callbacks.onConflict(item);
          } else if (err instanceof ApiError) {
            item.status = "error";
            item.message = `${err.code}: ${err.message}`;
            this.callbacks.onError(item);
          } else {
            item.status = "error";
            item.message = String(err);
            this.callbacks.onError(item);
          }
        }
      }
    } finally {
      this.pumping = false;
    }
  }
}
