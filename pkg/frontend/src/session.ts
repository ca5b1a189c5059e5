import { ApiClient, ApiHttpError } from "./api.js";
import type { BatchItem, BatchView, Definition, LabelValue } from "./types.js";

export type SessionNotice = "" | "batch_reloaded" | "network_error";

/**
 * One annotator's independent labeling pass over the current batch.
 *
 * Presents one comment at a time; a label only advances the cursor after the
 * server acknowledges the POST, so a UI-acknowledged label always exists in
 * the log. Resuming (or refreshing) re-reads `labeled_by_me` from the batch
 * and lands on the first unlabeled item.
 */
export class LabelSession {
  batch: BatchView | null = null;
  definition: Definition | null = null;
  notice: SessionNotice = "";
  private labeled = new Set<string>();
  private pending: { commentId: string; label: LabelValue } | null = null;

  constructor(
    private readonly client: ApiClient,
    readonly annotator: string,
  ) {}

  async start(): Promise<void> {
    this.definition = await this.client.getDefinition();
    await this.reload();
  }

  /** Re-fetch the batch and rebuild local progress from the server's view. */
  async reload(): Promise<void> {
    this.batch = await this.client.getBatch(this.annotator);
    this.labeled = new Set(
      this.batch.items.filter((it) => it.labeled_by_me).map((it) => it.comment_id),
    );
  }

  /** First item this annotator has not yet labeled, or null when done. */
  current(): BatchItem | null {
    if (!this.batch) return null;
    return this.batch.items.find((it) => !this.labeled.has(it.comment_id)) ?? null;
  }

  get progress(): { labeled: number; total: number } {
    return {
      labeled: this.labeled.size,
      total: this.batch ? this.batch.items.length : 0,
    };
  }

  get complete(): boolean {
    return this.batch !== null && this.current() === null;
  }

  get awaitingRetry(): boolean {
    return this.pending !== null;
  }

  /**
   * Label the current item. Returns true when the server acknowledged the
   * record. On transport failure the label is kept for an explicit retry()
   * and the cursor does not move — never silently lost, never skipped.
   */
  async label(value: LabelValue): Promise<boolean> {
    if (this.pending) return false;
    const item = this.current();
    if (!item) return false;
    if (this.labeled.has(item.comment_id)) return false;
    return this.post(item.comment_id, value);
  }

  async retry(): Promise<boolean> {
    if (!this.pending) return false;
    const { commentId, label } = this.pending;
    this.pending = null;
    return this.post(commentId, label);
  }

  private async post(commentId: string, label: LabelValue): Promise<boolean> {
    try {
      await this.client.postLabel(this.annotator, commentId, label);
    } catch (err) {
      if (err instanceof ApiHttpError) {
        if (err.status === 422 && err.body.code === "outside_batch") {
          // Stale batch: the server moved on. Reload and tell the annotator.
          await this.reload();
          this.notice = "batch_reloaded";
          return false;
        }
        if (err.status === 409 && err.body.code === "duplicate_label") {
          // The server already has this record (e.g. retried ack); treat as done.
          this.labeled.add(commentId);
          this.notice = "";
          return true;
        }
        throw err;
      }
      this.pending = { commentId, label };
      this.notice = "network_error";
      return false;
    }
    this.labeled.add(commentId);
    this.notice = "";
    return true;
  }
}
