import { ApiClient } from "./api.js";
import type { AgreementView, DisagreementItem } from "./types.js";

export type DashboardState = "pending" | "complete";

/**
 * Agreement dashboard: kappa for the finished round plus a navigable queue
 * of disagreements feeding adjudication. While the round is incomplete the
 * server reports only "pending" — no kappa, no labels.
 */
export class AgreementDashboard {
  state: DashboardState = "pending";
  agreement: AgreementView = { status: "pending" };
  items: DisagreementItem[] = [];
  private cursor = 0;

  constructor(private readonly client: ApiClient) {}

  async refresh(): Promise<void> {
    this.agreement = await this.client.getAgreement();
    if (this.agreement.status !== "complete") {
      this.state = "pending";
      this.items = [];
      this.cursor = 0;
      return;
    }
    this.state = "complete";
    this.items = (await this.client.getDisagreements()).items;
    this.cursor = Math.min(this.cursor, Math.max(0, this.items.length - 1));
  }

  get kappa(): number | null {
    return this.state === "complete" ? (this.agreement.kappa ?? null) : null;
  }

  get unresolved(): DisagreementItem[] {
    return this.items.filter((it) => !it.resolved);
  }

  /** The disagreement currently in front of the adjudicator. */
  currentDisagreement(): DisagreementItem | null {
    const queue = this.unresolved;
    if (queue.length === 0) return null;
    return queue[Math.min(this.cursor, queue.length - 1)];
  }

  next(): void {
    if (this.cursor < this.unresolved.length - 1) this.cursor++;
  }

  previous(): void {
    if (this.cursor > 0) this.cursor--;
  }

  /** Every disagreement adjudicated: the round can be resolved into the pool. */
  get roundResolvable(): boolean {
    return this.state === "complete" && this.unresolved.length === 0;
  }

  async adjudicate(
    resolvedLabel: "positive" | "negative",
    note = "",
  ): Promise<boolean> {
    const item = this.currentDisagreement();
    if (!item) return false;
    await this.client.adjudicate(item.comment_id, resolvedLabel, note);
    item.resolved = true;
    this.cursor = Math.min(this.cursor, Math.max(0, this.unresolved.length - 1));
    return true;
  }
}
