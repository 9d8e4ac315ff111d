/** Review session state machine: holds the current card, submits
 * decisions, and recovers from lease conflicts by fetching a fresh card. */

import { ApiClient, ReviewCard, ServiceError } from "./api.js";

export type SessionState = "idle" | "reviewing" | "drained";

export interface DecisionOutcome {
  itemId: string;
  provenance: string;
}

export class ReviewSession {
  state: SessionState = "idle";
  card: ReviewCard | null = null;
  decided = 0;
  /** Item ids whose lease was lost underneath us; kept for the status bar. */
  requeued: string[] = [];

  constructor(private api: ApiClient, private raterId: string) {}

  async loadNext(): Promise<ReviewCard | null> {
    const response = await this.api.nextCard(this.raterId);
    if (response.empty || response.item === null) {
      this.state = "drained";
      this.card = null;
      return null;
    }
    this.state = "reviewing";
    this.card = response.item;
    return this.card;
  }

  /** Submit a decision for the current card.
   *
   * A lease error means the lease expired or another reviewer decided the
   * item; the card is recorded as re-queued and the next one is loaded so
   * the reviewer keeps moving. Returns null in that case. */
  async decide(decision: "confirm" | "reject"): Promise<DecisionOutcome | null> {
    if (this.card === null) {
      throw new Error("no card loaded");
    }
    const itemId = this.card.item_id;
    try {
      const response = await this.api.decide(itemId, decision, this.raterId);
      this.decided += 1;
      await this.loadNext();
      return { itemId, provenance: response.provenance };
    } catch (err) {
      if (err instanceof ServiceError && (err.code === "lease" || err.code === "conflict")) {
        this.requeued.push(itemId);
        await this.loadNext();
        return null;
      }
      throw err;
    }
  }
}
