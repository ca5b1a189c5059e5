/** Shapes of the annotation service's JSON API. */

export type LabelValue = "positive" | "negative" | "skip";

export interface BatchItem {
  comment_id: string;
  text: string;
  position: number;
  labeled_by_me: boolean;
}

export interface BatchView {
  round: number;
  strategy: string;
  items: BatchItem[];
  progress: { labeled: number; total: number };
}

export interface ProgressView {
  round: number;
  total: number;
  per_annotator: Record<string, number>;
  round_complete: boolean;
}

export interface AgreementView {
  status: "pending" | "complete";
  kappa?: number | null;
  n_items?: number;
}

export interface DisagreementItem {
  comment_id: string;
  text: string;
  label_a: string;
  label_b: string;
  resolved: boolean;
}

export interface DisagreementsView {
  status: "pending" | "complete";
  items: DisagreementItem[];
}

export interface RankItem {
  comment_id: string;
  text: string;
  prob_positive: number;
}

export interface Definition {
  positive_criteria: string[];
  negative_criteria: string[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details?: Record<string, unknown>;
}

/** One line of the server's exported line-delimited label log. */
export interface LabelRecord {
  comment_id: string;
  annotator_id: string;
  label: string;
  round: number;
  recorded_at: number;
}
