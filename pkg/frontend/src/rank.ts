import { ApiClient } from "./api.js";
import type { RankItem } from "./types.js";

/** The six positive-criteria categories used to tag true positives. */
export const CATEGORY_TAGS = [
  "active_help",
  "appeal_to_organizations",
  "humanitarian_call",
  "vocalize_rights",
  "condemn_oppressor",
  "express_sympathy",
] as const;

export type CategoryTag = (typeof CATEGORY_TAGS)[number];

function csvField(value: string | number): string {
  const text = String(value);
  if (/[",\n\r]/.test(text)) {
    return `"${text.replace(/"/g, '""')}"`;
  }
  return text;
}

export interface RankExport {
  csv: string;
  nReviewed: number;
  nTruePositive: number;
  /** Fraction of reviewed items confirmed as positives; null before review. */
  precision: number | null;
}

/**
 * Audit of the model's top-ranked wild predictions: the reviewer tags each
 * comment with any subset of the six positive categories, or marks it a
 * false positive, then exports the review as CSV.
 */
export class RankReview {
  items: RankItem[] = [];
  private tags = new Map<string, Set<CategoryTag>>();
  private falsePositives = new Set<string>();

  constructor(private readonly client: ApiClient) {}

  async load(top = 100): Promise<void> {
    this.items = (await this.client.getRank(top)).items;
    this.tags.clear();
    this.falsePositives.clear();
  }

  tagsFor(commentId: string): Set<CategoryTag> {
    return this.tags.get(commentId) ?? new Set();
  }

  isFalsePositive(commentId: string): boolean {
    return this.falsePositives.has(commentId);
  }

  /** Toggle one category tag; tagging clears a false-positive mark. */
  toggleTag(commentId: string, tag: CategoryTag): void {
    this.falsePositives.delete(commentId);
    let set = this.tags.get(commentId);
    if (!set) {
      set = new Set();
      this.tags.set(commentId, set);
    }
    if (set.has(tag)) {
      set.delete(tag);
      if (set.size === 0) this.tags.delete(commentId);
    } else {
      set.add(tag);
    }
  }

  /** Mark as a false positive; clears any category tags. */
  markFalsePositive(commentId: string): void {
    this.tags.delete(commentId);
    this.falsePositives.add(commentId);
  }

  clearReview(commentId: string): void {
    this.tags.delete(commentId);
    this.falsePositives.delete(commentId);
  }

  private isReviewed(commentId: string): boolean {
    return this.falsePositives.has(commentId) || this.tags.has(commentId);
  }

  toExport(): RankExport {
    const header = [
      "comment_id",
      "prob_positive",
      "text",
      "true_positive",
      "false_positive",
      ...CATEGORY_TAGS,
    ];
    const lines = [header.join(",")];
    let nReviewed = 0;
    let nTruePositive = 0;
    for (const item of this.items) {
      const reviewed = this.isReviewed(item.comment_id);
      const falsePos = this.falsePositives.has(item.comment_id);
      if (reviewed) {
        nReviewed++;
        if (!falsePos) nTruePositive++;
      }
      const tagSet = this.tagsFor(item.comment_id);
      const row = [
        csvField(item.comment_id),
        csvField(item.prob_positive),
        csvField(item.text),
        reviewed && !falsePos ? "1" : "0",
        falsePos ? "1" : "0",
        ...CATEGORY_TAGS.map((tag) => (tagSet.has(tag) ? "1" : "0")),
      ];
      lines.push(row.join(","));
    }
    return {
      csv: lines.join("\n") + "\n",
      nReviewed,
      nTruePositive,
      precision: nReviewed > 0 ? nTruePositive / nReviewed : null,
    };
  }
}
